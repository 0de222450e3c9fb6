#include "gmc/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmc/errors.hpp"

namespace gmc {

McEstimate mc_mean(std::span<const double> scores) {
  McEstimate e;
  e.n = scores.size();
  if (e.n == 0) return e;
  double m = 0.0;
  for (double s : scores) m += s;
  m /= static_cast<double>(e.n);
  double ss = 0.0;
  for (double s : scores) ss += (s - m) * (s - m);
  e.value = m;
  e.se = e.n > 1 ? std::sqrt(ss / static_cast<double>(e.n - 1) / static_cast<double>(e.n)) : 0.0;
  return e;
}

McEstimate sample_variance(std::span<const double> xs) {
  const std::size_t N = xs.size();
  if (N < 3) throw ValidationError("sample_variance: need at least 3 samples");
  const double n = static_cast<double>(N);
  double m = 0.0;
  for (double x : xs) m += x;
  m /= n;
  double s2 = 0.0;
  for (double x : xs) s2 += (x - m) * (x - m);
  // leave-one-out sums of squares: S - n/(n-1) (x_i - m)^2
  std::vector<double> loo(N);
  double mean_loo = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double d = xs[i] - m;
    loo[i] = (s2 - n / (n - 1.0) * d * d) / (n - 2.0);
    mean_loo += loo[i];
  }
  mean_loo /= n;
  double ss = 0.0;
  for (double v : loo) ss += (v - mean_loo) * (v - mean_loo);
  return {s2 / (n - 1.0), std::sqrt((n - 1.0) / n * ss), N};
}

McEstimate sample_correlation(std::span<const double> a, std::span<const double> b) {
  const std::size_t N = a.size();
  if (b.size() != N) throw ValidationError("sample_correlation: sample sizes differ");
  if (N < 3) throw ValidationError("sample_correlation: need at least 3 samples");
  const double n = static_cast<double>(N);
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  auto corr = [](double xy, double xx, double yy) {
    return (xx > 0.0 && yy > 0.0) ? xy / std::sqrt(xx * yy) : std::numeric_limits<double>::quiet_NaN();
  };
  const double full = corr(sab, saa, sbb);
  // leave-one-out centred sums
  std::vector<double> loo(N);
  double mean_loo = 0.0;
  const double f = n / (n - 1.0);
  for (std::size_t i = 0; i < N; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    loo[i] = corr(sab - f * da * db, saa - f * da * da, sbb - f * db * db);
    mean_loo += loo[i];
  }
  mean_loo /= n;
  double ss = 0.0;
  for (double v : loo) ss += (v - mean_loo) * (v - mean_loo);
  return {full, std::sqrt((n - 1.0) / n * ss), N};
}

double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw ValidationError("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile: p must lie in [0, 1]");
  std::sort(xs.begin(), xs.end());
  const double pos = p * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return xs[lo] + w * (xs[hi] - xs[lo]);
}

double z_score(const McEstimate& a, const McEstimate& b) {
  const double se = std::sqrt(a.se * a.se + b.se * b.se);
  const double d = std::abs(a.value - b.value);
  if (se == 0.0) return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return d / se;
}

double z_score(const McEstimate& a, double exact) { return z_score(a, McEstimate{exact, 0.0, 0}); }

}  // namespace gmc
