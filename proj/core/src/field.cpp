#include "gmc/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "gmc/errors.hpp"
#include "gmc/factor.hpp"
#include "gmc/rng.hpp"
#include "parallel.hpp"

namespace gmc {

ScaleGrid::ScaleGrid(std::vector<double> checkpoints, double dt) : checkpoints_(std::move(checkpoints)), dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("scale grid: dt must be positive");
  if (checkpoints_.empty()) throw ValidationError("scale grid: no checkpoints");
  for (std::size_t j = 0; j < checkpoints_.size(); ++j) {
    const double c = checkpoints_[j];
    if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("scale grid: checkpoints must be finite and >= 0");
    if (j > 0 && !(c > checkpoints_[j - 1])) throw ValidationError("scale grid: checkpoints must increase strictly");
    const double q = c / dt;
    const double k = std::round(q);
    if (std::abs(q - k) > 1e-9 * std::max(1.0, q)) {
      std::ostringstream os;
      os << "scale grid: dt=" << dt << " does not divide checkpoint " << c;
      throw ValidationError(os.str());
    }
    steps_.push_back(static_cast<std::size_t>(k));
  }
}

std::size_t FieldPath::checkpoint_index(double t) const {
  for (std::size_t j = 0; j < checkpoint_times.size(); ++j)
    if (std::abs(checkpoint_times[j] - t) <= 1e-9 * std::max(1.0, t)) return j;
  std::ostringstream os;
  os << "t=" << t << " is not a checkpoint of this path";
  throw UsageError(os.str());
}

FieldState FieldPath::state(std::size_t j) const {
  if (j >= checkpoint_times.size()) throw UsageError("checkpoint index out of range");
  FieldState s;
  s.t = checkpoint_times[j];
  s.checkpoint = j;
  s.rho_r = checkpoint_rho[j];
  s.values = checkpoint_values[j];
  s.max_plain = max_plain[j];
  s.max_shifted = max_shifted[j];
  if (j + 1 == checkpoint_times.size()) s.mollified = mollified;
  return s;
}

namespace {

// ---------------------------------------------------------------------------
// Sparse Gaussian factors. Variables interact only along "active" pairs; the
// connected components are factored separately, each with an envelope
// (skyline) Cholesky in a spatial ordering, so banded covariances stay cheap.

struct Pair {
  double r;
  std::uint32_t a, b;
};

struct Block {
  std::vector<std::uint32_t> vars;    // global variable ids, local order
  std::vector<std::uint32_t> first;   // first local column of each row
  std::vector<std::size_t> offset;    // start of each row in L
  std::vector<double> L;
  Eigen::MatrixXd dense;              // fallback factor (full)
  bool is_dense = false;
};

struct StepFactor {
  std::vector<Block> blocks;
  std::vector<std::uint32_t> singles;
  std::vector<double> single_sd;
  std::size_t nvars = 0;
};

struct UnionFind {
  std::vector<std::uint32_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

bool envelope_cholesky(Block& blk, const std::vector<double>& C) {
  const std::size_t m = blk.vars.size();
  blk.L.assign(C.size(), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t fi = blk.first[i];
    double* Li = blk.L.data() + blk.offset[i] - fi;  // Li[j] addresses column j
    const double* Ci = C.data() + blk.offset[i] - fi;
    for (std::size_t j = fi; j <= i; ++j) {
      const std::size_t fj = blk.first[j];
      const double* Lj = blk.L.data() + blk.offset[j] - fj;
      double s = Ci[j];
      for (std::size_t k = std::max(fi, fj); k < j; ++k) s -= Li[k] * Lj[k];
      if (j < i) {
        Li[j] = s / Lj[j];
      } else {
        if (!(s > 0.0)) return false;
        Li[i] = std::sqrt(s);
      }
    }
  }
  return true;
}

// cov(a, b) is evaluated for active pairs only; diag holds the variances.
template <class Cov>
StepFactor build_factor(std::size_t nvars, const std::vector<double>& diag, const std::vector<std::uint32_t>& rank,
                        const std::vector<Pair>& active, Cov&& cov, const std::string& context) {
  StepFactor f;
  f.nvars = nvars;
  UnionFind uf(nvars);
  for (const Pair& p : active) uf.unite(p.a, p.b);
  std::vector<std::vector<std::uint32_t>> members(nvars);
  for (std::uint32_t v = 0; v < nvars; ++v) members[uf.find(v)].push_back(v);
  std::vector<std::vector<const Pair*>> pairs_of(nvars);
  for (const Pair& p : active) pairs_of[uf.find(p.a)].push_back(&p);

  std::vector<std::uint32_t> local(nvars, 0);
  for (std::uint32_t root = 0; root < nvars; ++root) {
    auto& mem = members[root];
    if (mem.empty()) continue;
    if (mem.size() == 1) {
      f.singles.push_back(mem[0]);
      f.single_sd.push_back(std::sqrt(std::max(0.0, diag[mem[0]])));
      continue;
    }
    Block blk;
    blk.vars = mem;
    std::sort(blk.vars.begin(), blk.vars.end(), [&](std::uint32_t x, std::uint32_t y) { return rank[x] < rank[y]; });
    const std::size_t m = blk.vars.size();
    for (std::size_t i = 0; i < m; ++i) local[blk.vars[i]] = static_cast<std::uint32_t>(i);
    blk.first.resize(m);
    for (std::size_t i = 0; i < m; ++i) blk.first[i] = static_cast<std::uint32_t>(i);
    for (const Pair* p : pairs_of[root]) {
      const std::uint32_t i = local[p->a], j = local[p->b];
      const std::uint32_t hi = std::max(i, j), lo = std::min(i, j);
      blk.first[hi] = std::min(blk.first[hi], lo);
    }
    blk.offset.resize(m + 1);
    blk.offset[0] = 0;
    for (std::size_t i = 0; i < m; ++i) blk.offset[i + 1] = blk.offset[i] + (i - blk.first[i] + 1);
    std::vector<double> C(blk.offset[m], 0.0);
    for (std::size_t i = 0; i < m; ++i) C[blk.offset[i] + (i - blk.first[i])] = diag[blk.vars[i]];
    for (const Pair* p : pairs_of[root]) {
      const std::uint32_t i = local[p->a], j = local[p->b];
      const std::uint32_t hi = std::max(i, j), lo = std::min(i, j);
      C[blk.offset[hi] + (lo - blk.first[hi])] = cov(*p);
    }
    if (!envelope_cholesky(blk, C)) {
      std::vector<double> Cj = C;
      for (std::size_t i = 0; i < m; ++i) Cj[blk.offset[i] + (i - blk.first[i])] += kPsdTolerance;
      if (!envelope_cholesky(blk, Cj)) {
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = blk.first[i]; j <= i; ++j) {
            const double v = C[blk.offset[i] + (j - blk.first[i])];
            D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            D(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
          }
        blk.dense = psd_factor(D, context).L;
        blk.is_dense = true;
        blk.L.clear();
      }
    }
    f.blocks.push_back(std::move(blk));
  }
  return f;
}

// y[v * lanes + c] = (L z)[v] for c < active lanes. z and y use the same layout.
void apply_factor(const StepFactor& f, const double* z, double* y, std::size_t lanes, std::size_t active) {
  for (std::size_t s = 0; s < f.singles.size(); ++s) {
    const std::size_t v = f.singles[s];
    const double sd = f.single_sd[s];
    for (std::size_t c = 0; c < active; ++c) y[v * lanes + c] = sd * z[v * lanes + c];
  }
  for (const Block& blk : f.blocks) {
    const std::size_t m = blk.vars.size();
    if (blk.is_dense) {
      for (std::size_t i = 0; i < m; ++i) {
        double* yi = y + blk.vars[i] * lanes;
        for (std::size_t c = 0; c < active; ++c) yi[c] = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          const double l = blk.dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          if (l == 0.0) continue;
          const double* zj = z + blk.vars[j] * lanes;
          for (std::size_t c = 0; c < active; ++c) yi[c] += l * zj[c];
        }
      }
      continue;
    }
    for (std::size_t i = 0; i < m; ++i) {
      double* yi = y + blk.vars[i] * lanes;
      for (std::size_t c = 0; c < active; ++c) yi[c] = 0.0;
      const std::size_t fi = blk.first[i];
      const double* Li = blk.L.data() + blk.offset[i];
      for (std::size_t j = fi; j <= i; ++j) {
        const double l = Li[j - fi];
        const double* zj = z + blk.vars[j] * lanes;
        for (std::size_t c = 0; c < active; ++c) yi[c] += l * zj[c];
      }
    }
  }
}

std::vector<std::uint32_t> spatial_rank(const std::vector<Point>& sites) {
  std::vector<std::uint32_t> order(sites.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return sites[a][0] < sites[b][0] || (sites[a][0] == sites[b][0] && sites[a][1] < sites[b][1]);
  });
  std::vector<std::uint32_t> rank(sites.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
  return rank;
}

// All site pairs closer than `reach`, sorted by distance.
std::vector<Pair> sorted_pairs(const std::vector<Point>& sites, double reach) {
  std::vector<Pair> out;
  const std::size_t n = sites.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = distance(sites[i], sites[j]);
      if (r == 0.0) throw ValidationError("field sampler: sites must be pairwise distinct");
      if (r < reach) out.push_back({r, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
    }
  std::sort(out.begin(), out.end(), [](const Pair& x, const Pair& y) {
    return x.r < y.r || (x.r == y.r && (x.a < y.a || (x.a == y.a && x.b < y.b)));
  });
  return out;
}

std::size_t prefix_below(const std::vector<Pair>& pairs, double bound) {
  return static_cast<std::size_t>(
      std::lower_bound(pairs.begin(), pairs.end(), bound, [](const Pair& p, double b) { return p.r < b; }) -
      pairs.begin());
}

// Memo of a radial function on separations quantised to 2^-40, so that pairs
// with the same nominal separation share one (expensive) quadrature.
class RadialMemo {
 public:
  template <class Fn>
  double operator()(double r, Fn&& fn) {
    const long long key = std::llround(std::ldexp(r, 40));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double v = fn(std::ldexp(static_cast<double>(key), -40));
    cache_.emplace(key, v);
    return v;
  }

 private:
  std::unordered_map<long long, double> cache_;
};

// Per-chunk state, lane-major: value of site i for lane c at [c * n + i].
struct ChunkState {
  std::vector<NormalStream> streams;
  std::vector<double> x, max_plain, max_shifted, mollified;
};

}  // namespace

Eigen::MatrixXd increment_covariance(const StarScaleKernel& k, double ta, double tb, const std::vector<Point>& sites) {
  if (!(ta >= 0.0) || !(tb > ta)) throw DomainError("increment_covariance: need 0 <= ta < tb");
  const Eigen::Index n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd C(n, n);
  const double ta_p = k.tprime(ta), tb_p = k.tprime(tb);
  for (Eigen::Index i = 0; i < n; ++i) {
    C(i, i) = tb - ta;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double r = distance(sites[static_cast<std::size_t>(i)], sites[static_cast<std::size_t>(j)]);
      if (r == 0.0) throw ValidationError("increment_covariance: sites must be pairwise distinct");
      C(i, j) = C(j, i) = k.kbar_tp(tb, tb_p, r) - k.kbar_tp(ta, ta_p, r);
    }
  }
  // eigenvalue check, as the sampler would see it
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin < -kPsdTolerance) {
      std::ostringstream os;
      os << "increment_covariance: smallest eigenvalue " << lmin << " below tolerance";
      throw NumericError(os.str());
    }
  }
  return C;
}

ScaleFieldSampler::ScaleFieldSampler(StarScaleKernel k, ScaleGrid grid, std::vector<Point> sites, ShiftedEnvelope shift)
    : k_(std::move(k)), grid_(std::move(grid)), sites_(std::move(sites)), shift_(std::move(shift)) {
  if (sites_.empty()) throw ValidationError("field sampler: no sites");
  if (grid_.checkpoints().empty()) throw ValidationError("field sampler: empty grid");
}

void ScaleFieldSampler::run(std::uint64_t seed, std::size_t first_replica, std::size_t replicas,
                            const FieldObserver& observer, const SamplerOptions& options) const {
  const std::size_t n = sites_.size();
  const std::size_t lanes = std::max<std::size_t>(1, options.chunk);
  const std::size_t nchunks = (replicas + lanes - 1) / lanes;
  const double drift = std::sqrt(2.0 * k_.dimension());
  const std::vector<std::uint32_t> rank = spatial_rank(sites_);
  const std::vector<Pair> pairs = sorted_pairs(sites_, 1.0);
  const std::vector<double> diag(n, grid_.dt());

  std::vector<ChunkState> chunks(nchunks);
  for (std::size_t c = 0; c < nchunks; ++c) {
    const std::size_t active = std::min(lanes, replicas - c * lanes);
    for (std::size_t l = 0; l < active; ++l)
      chunks[c].streams.emplace_back(seed, first_replica + c * lanes + l, "field");
    chunks[c].x.assign(active * n, 0.0);
    chunks[c].max_plain.assign(active * n, 0.0);
    chunks[c].max_shifted.assign(active * n, 0.0);
  }

  const auto& cp_steps = grid_.checkpoint_steps();
  auto report = [&](std::size_t step, std::size_t cp, double rho) {
    if (cp == kNotCheckpoint && !options.every_step) return;
    detail::parallel_for(nchunks, options.threads, [&](std::size_t c) {
      ChunkState& cs = chunks[c];
      for (std::size_t l = 0; l < cs.streams.size(); ++l) {
        FieldState s;
        s.t = grid_.time(step);
        s.step = step;
        s.checkpoint = cp;
        s.rho_r = rho;
        s.values = std::span<const double>(cs.x.data() + l * n, n);
        s.max_plain = std::span<const double>(cs.max_plain.data() + l * n, n);
        s.max_shifted = std::span<const double>(cs.max_shifted.data() + l * n, n);
        observer(first_replica + c * lanes + l, s);
      }
    });
  };

  std::size_t next_cp = 0;
  if (!cp_steps.empty() && cp_steps[0] == 0) {
    report(0, 0, 0.0);
    next_cp = 1;
  } else if (options.every_step) {
    report(0, kNotCheckpoint, 0.0);
  }

  const std::size_t total = grid_.substeps();
  for (std::size_t step = 0; step < total; ++step) {
    const double ta = grid_.time(step), tb = grid_.time(step + 1);
    const double ta_p = k_.tprime(ta), tb_p = k_.tprime(tb);
    const std::size_t nactive = prefix_below(pairs, std::exp(-ta_p));
    std::vector<Pair> active(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(nactive));
    auto cov = [&](const Pair& p) { return k_.kbar_tp(tb, tb_p, p.r) - k_.kbar_tp(ta, ta_p, p.r); };
    std::ostringstream ctx;
    ctx << "field increment [" << ta << ", " << tb << "]";
    const StepFactor factor = build_factor(n, diag, rank, active, cov, ctx.str());
    const double rho = shift_(tb);

    detail::parallel_for(nchunks, options.threads, [&](std::size_t c) {
      ChunkState& cs = chunks[c];
      const std::size_t active_lanes = cs.streams.size();
      std::vector<double> z(n * lanes), y(n * lanes);
      for (std::size_t l = 0; l < active_lanes; ++l)
        for (std::size_t i = 0; i < n; ++i) z[i * lanes + l] = cs.streams[l]();
      apply_factor(factor, z.data(), y.data(), lanes, active_lanes);
      for (std::size_t l = 0; l < active_lanes; ++l) {
        double* x = cs.x.data() + l * n;
        double* mp = cs.max_plain.data() + l * n;
        double* ms = cs.max_shifted.data() + l * n;
        for (std::size_t i = 0; i < n; ++i) {
          x[i] += y[i * lanes + l];
          const double centred = x[i] - drift * tb;
          mp[i] = std::max(mp[i], centred);
          ms[i] = std::max(ms[i], centred + rho);
        }
      }
    });

    const bool is_cp = next_cp < cp_steps.size() && cp_steps[next_cp] == step + 1;
    report(step + 1, is_cp ? next_cp : kNotCheckpoint, rho);
    if (is_cp) ++next_cp;
  }
}

std::vector<FieldPath> ScaleFieldSampler::sample_paths(std::uint64_t seed, std::size_t replicas, bool record_substeps,
                                                       const SamplerOptions& options) const {
  std::vector<FieldPath> paths(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    paths[r].sites = sites_;
    paths[r].seed = seed;
    paths[r].replica = r;
  }
  SamplerOptions opt = options;
  opt.every_step = record_substeps;
  run(seed, 0, replicas, [&](std::size_t rep, const FieldState& s) {
    FieldPath& p = paths[rep];
    if (record_substeps || s.checkpoint != kNotCheckpoint) {
      p.times.push_back(s.t);
      p.values.emplace_back(s.values.begin(), s.values.end());
    }
    if (s.checkpoint != kNotCheckpoint) {
      p.checkpoint_times.push_back(s.t);
      p.checkpoint_rho.push_back(s.rho_r);
      p.checkpoint_values.emplace_back(s.values.begin(), s.values.end());
      p.max_plain.emplace_back(s.max_plain.begin(), s.max_plain.end());
      p.max_shifted.emplace_back(s.max_shifted.begin(), s.max_shifted.end());
    }
  }, opt);
  return paths;
}

FieldPath sample_scale_path(const StarScaleKernel& k, const ScaleGrid& grid, const std::vector<Point>& sites,
                            const ShiftedEnvelope& shift, std::uint64_t seed, std::uint64_t replica) {
  ScaleFieldSampler sampler(k, grid, sites, shift);
  FieldPath p;
  p.sites = sites;
  p.seed = seed;
  p.replica = replica;
  SamplerOptions opt;
  opt.every_step = true;
  opt.chunk = 1;
  sampler.run(seed, replica, 1, [&](std::size_t, const FieldState& s) {
    p.times.push_back(s.t);
    p.values.emplace_back(s.values.begin(), s.values.end());
    if (s.checkpoint != kNotCheckpoint) {
      p.checkpoint_times.push_back(s.t);
      p.checkpoint_rho.push_back(s.rho_r);
      p.checkpoint_values.emplace_back(s.values.begin(), s.values.end());
      p.max_plain.emplace_back(s.max_plain.begin(), s.max_plain.end());
      p.max_shifted.emplace_back(s.max_shifted.begin(), s.max_shifted.end());
    }
  }, opt);
  return p;
}

double mollified_variance(const StarScaleKernel& k, const Mollifier& m) {
  const Point o{0.0, 0.0};
  return eval_mollified_cov(k, m, std::nullopt, o, o);
}

Eigen::MatrixXd sample_mollified_field(const StarScaleKernel& k, const Mollifier& m, const std::vector<Point>& sites,
                                       std::uint64_t seed, std::size_t replicas) {
  const std::size_t n = sites.size();
  if (n == 0) throw ValidationError("sample_mollified_field: no sites");
  if (n > 4096) throw ResourceError("sample_mollified_field: more than 4096 sites");
  const double reach = 1.0 + 2.0 * m.eps();
  const std::vector<Pair> active = sorted_pairs(sites, reach);
  RadialMemo memo;
  const Point o{0.0, 0.0};
  auto keps = [&](double r) { return eval_mollified_cov(k, m, std::nullopt, o, Point{r, 0.0}); };
  const std::vector<double> diag(n, keps(0.0));
  auto cov = [&](const Pair& p) { return memo(p.r, keps); };
  const StepFactor factor = build_factor(n, diag, spatial_rank(sites), active, cov, "mollified covariance");

  Eigen::MatrixXd out(static_cast<Eigen::Index>(replicas), static_cast<Eigen::Index>(n));
  std::vector<double> z(n), y(n);
  for (std::size_t r = 0; r < replicas; ++r) {
    NormalStream g(seed, r, "mollified");
    for (std::size_t i = 0; i < n; ++i) z[i] = g();
    apply_factor(factor, z.data(), y.data(), 1, 1);
    for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = y[i];
  }
  return out;
}

JointMollifiedSampler::JointMollifiedSampler(StarScaleKernel k, Mollifier m, ScaleGrid grid, std::vector<Point> sites,
                                             ShiftedEnvelope shift)
    : k_(std::move(k)), m_(std::move(m)), grid_(std::move(grid)), sites_(std::move(sites)), shift_(std::move(shift)) {
  if (sites_.empty()) throw ValidationError("joint sampler: no sites");
  if (grid_.horizon() + 1e-9 < m_.t_eps()) {
    std::ostringstream os;
    os << "joint sampler: horizon " << grid_.horizon() << " is below t_eps = " << m_.t_eps();
    throw UsageError(os.str());
  }
}

void JointMollifiedSampler::run(std::uint64_t seed, std::size_t replicas, const FieldObserver& observer,
                                const SamplerOptions& options) const {
  const std::size_t n = sites_.size();
  const std::size_t nv = 2 * n;  // variable 2i: Xbar(x_i), 2i+1: Y(x_i)
  const std::size_t lanes = std::max<std::size_t>(1, options.chunk);
  const std::size_t nchunks = (replicas + lanes - 1) / lanes;
  const double drift = std::sqrt(2.0 * k_.dimension());
  const double eps = m_.eps();
  const std::vector<std::uint32_t> site_rank = spatial_rank(sites_);
  std::vector<std::uint32_t> rank(nv);
  for (std::size_t i = 0; i < n; ++i) {
    rank[2 * i] = 2 * site_rank[i];
    rank[2 * i + 1] = 2 * site_rank[i] + 1;
  }
  const std::vector<Pair> pairs = sorted_pairs(sites_, 1.0 + 2.0 * eps);

  std::vector<ChunkState> chunks(nchunks);
  for (std::size_t c = 0; c < nchunks; ++c) {
    const std::size_t active = std::min(lanes, replicas - c * lanes);
    for (std::size_t l = 0; l < active; ++l) chunks[c].streams.emplace_back(seed, c * lanes + l, "joint");
    chunks[c].x.assign(active * n, 0.0);
    chunks[c].max_plain.assign(active * n, 0.0);
    chunks[c].max_shifted.assign(active * n, 0.0);
    chunks[c].mollified.assign(active * n, 0.0);
  }

  const auto& cp_steps = grid_.checkpoint_steps();
  const std::size_t total = grid_.substeps();
  auto report = [&](std::size_t step, std::size_t cp, double rho, bool final_call) {
    detail::parallel_for(nchunks, options.threads, [&](std::size_t c) {
      ChunkState& cs = chunks[c];
      for (std::size_t l = 0; l < cs.streams.size(); ++l) {
        FieldState s;
        s.t = grid_.time(step);
        s.step = step;
        s.checkpoint = cp;
        s.rho_r = rho;
        s.values = std::span<const double>(cs.x.data() + l * n, n);
        s.max_plain = std::span<const double>(cs.max_plain.data() + l * n, n);
        s.max_shifted = std::span<const double>(cs.max_shifted.data() + l * n, n);
        if (final_call) s.mollified = std::span<const double>(cs.mollified.data() + l * n, n);
        observer(c * lanes + l, s);
      }
    });
  };

  std::size_t next_cp = 0;
  if (!cp_steps.empty() && cp_steps[0] == 0) {
    if (total > 0) report(0, 0, 0.0, false);
    next_cp = 1;
  }

  for (std::size_t step = 0; step < total; ++step) {
    const double ta = grid_.time(step), tb = grid_.time(step + 1);
    const double ta_p = k_.tprime(ta), tb_p = k_.tprime(tb);
    const double support = std::exp(-ta_p);
    RadialMemo memo_cross, memo_yy;
    auto cross = [&](double r) { return mollified_increment(k_, m_, ta, tb, r, true); };
    auto yy = [&](double r) { return mollified_increment(k_, m_, ta, tb, r, false); };
    std::vector<double> diag(nv);
    const double var_y = memo_yy(0.0, yy);
    for (std::size_t i = 0; i < n; ++i) {
      diag[2 * i] = tb - ta;
      diag[2 * i + 1] = var_y;
    }
    std::vector<Pair> active;
    for (std::size_t i = 0; i < n; ++i)
      active.push_back({0.0, static_cast<std::uint32_t>(2 * i), static_cast<std::uint32_t>(2 * i + 1)});
    const std::size_t np = prefix_below(pairs, support + 2.0 * eps);
    for (std::size_t p = 0; p < np; ++p) {
      const Pair& q = pairs[p];
      const std::uint32_t a = 2 * q.a, b = 2 * q.b;
      active.push_back({q.r, a, b});
      active.push_back({q.r, a, b + 1});
      active.push_back({q.r, a + 1, b});
      active.push_back({q.r, a + 1, b + 1});
    }
    auto cov = [&](const Pair& p) {
      const bool ya = p.a & 1u, yb = p.b & 1u;
      if (!ya && !yb) return p.r < support ? k_.kbar_tp(tb, tb_p, p.r) - k_.kbar_tp(ta, ta_p, p.r) : 0.0;
      if (ya && yb) return memo_yy(p.r, yy);
      return memo_cross(p.r, cross);
    };
    std::ostringstream ctx;
    ctx << "joint increment [" << ta << ", " << tb << "]";
    const StepFactor factor = build_factor(nv, diag, rank, active, cov, ctx.str());
    const double rho = shift_(tb);

    detail::parallel_for(nchunks, options.threads, [&](std::size_t c) {
      ChunkState& cs = chunks[c];
      const std::size_t active_lanes = cs.streams.size();
      std::vector<double> z(nv * lanes), y(nv * lanes);
      for (std::size_t l = 0; l < active_lanes; ++l)
        for (std::size_t v = 0; v < nv; ++v) z[v * lanes + l] = cs.streams[l]();
      apply_factor(factor, z.data(), y.data(), lanes, active_lanes);
      for (std::size_t l = 0; l < active_lanes; ++l) {
        double* x = cs.x.data() + l * n;
        double* mp = cs.max_plain.data() + l * n;
        double* ms = cs.max_shifted.data() + l * n;
        double* xe = cs.mollified.data() + l * n;
        for (std::size_t i = 0; i < n; ++i) {
          x[i] += y[(2 * i) * lanes + l];
          xe[i] += y[(2 * i + 1) * lanes + l];
          const double centred = x[i] - drift * tb;
          mp[i] = std::max(mp[i], centred);
          ms[i] = std::max(ms[i], centred + rho);
        }
      }
    });

    const bool is_cp = next_cp < cp_steps.size() && cp_steps[next_cp] == step + 1;
    if (is_cp && step + 1 < total) report(step + 1, next_cp, rho, false);
    if (is_cp) ++next_cp;
  }

  // remainder phi_eps * (K - Kbar_T), independent of the path up to T
  const double T = grid_.horizon();
  const double Tp = k_.tprime(T);
  RadialMemo memo_rem;
  auto rem = [&](double r) { return mollified_remainder(k_, m_, T, r); };
  const std::vector<double> diag(n, memo_rem(0.0, rem));
  const std::vector<Pair> active(pairs.begin(),
                                 pairs.begin() + static_cast<std::ptrdiff_t>(prefix_below(pairs, std::exp(-Tp) + 2.0 * eps)));
  auto cov = [&](const Pair& p) { return memo_rem(p.r, rem); };
  const StepFactor factor = build_factor(n, diag, site_rank, active, cov, "mollified remainder");
  detail::parallel_for(nchunks, options.threads, [&](std::size_t c) {
    ChunkState& cs = chunks[c];
    const std::size_t active_lanes = cs.streams.size();
    std::vector<double> z(n * lanes), y(n * lanes);
    for (std::size_t l = 0; l < active_lanes; ++l)
      for (std::size_t i = 0; i < n; ++i) z[i * lanes + l] = cs.streams[l]();
    apply_factor(factor, z.data(), y.data(), lanes, active_lanes);
    for (std::size_t l = 0; l < active_lanes; ++l)
      for (std::size_t i = 0; i < n; ++i) cs.mollified[l * n + i] += y[i * lanes + l];
  });
  const std::size_t last_cp = cp_steps.size() - 1;
  report(total, cp_steps.back() == total ? last_cp : kNotCheckpoint, shift_(T), true);
}

CovEstimate empirical_covariance(std::span<const double> a, std::span<const double> b) {
  const std::size_t N = a.size();
  if (b.size() != N) throw ValidationError("empirical_covariance: sample sizes differ");
  if (N < 100) throw ValidationError("empirical_covariance: need at least 100 replicas");
  const double n = static_cast<double>(N);
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  // centred sums keep the leave-one-out updates accurate
  double sab = 0.0;
  for (std::size_t i = 0; i < N; ++i) sab += (a[i] - ma) * (b[i] - mb);
  const double cov = sab / (n - 1.0);
  // leave-one-out: S_(i) = S - (n/(n-1)) da_i db_i, over n-2 degrees of freedom
  double mean_loo = 0.0;
  std::vector<double> loo(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    loo[i] = (sab - n / (n - 1.0) * da * db) / (n - 2.0);
    mean_loo += loo[i];
  }
  mean_loo /= n;
  double ss = 0.0;
  for (double v : loo) ss += (v - mean_loo) * (v - mean_loo);
  return {cov, std::sqrt((n - 1.0) / n * ss)};
}

std::vector<CovEstimate> empirical_covariance(const std::vector<FieldPath>& ensemble, const std::vector<CovProbe>& probes) {
  if (ensemble.size() < 100) throw ValidationError("empirical_covariance: need at least 100 replicas");
  std::vector<CovEstimate> out;
  std::vector<double> a(ensemble.size()), b(ensemble.size());
  for (const CovProbe& p : probes) {
    for (std::size_t r = 0; r < ensemble.size(); ++r) {
      const FieldPath& path = ensemble[r];
      a[r] = path.checkpoint_values.at(path.checkpoint_index(p.time_a)).at(p.site_a);
      b[r] = path.checkpoint_values.at(path.checkpoint_index(p.time_b)).at(p.site_b);
    }
    out.push_back(empirical_covariance(a, b));
  }
  return out;
}

}  // namespace gmc
