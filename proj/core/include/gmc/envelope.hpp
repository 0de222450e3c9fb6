#pragma once

#include <optional>
#include <string>
#include <vector>

namespace gmc {

enum class EnvelopeKind { Power, SqrtLog, Table };

// Power-law continuation assumed beyond the last table sample:
// rho(u) ~ coefficient * u^exponent.
struct TailModel {
  double exponent = 0.0;
  double coefficient = 1.0;
};

// A candidate lower-envelope function rho for the 3-Bessel process.
//
//   Power:   rho(u) = scale * ((u + offset)^gamma - offset^gamma)
//   SqrtLog: rho(u) = scale * u^{1/2} (log(u + 2))^{sign * zeta}
//   Table:   monotone piecewise-linear through (u_i, rho_i)
//
// Construction validates the hard invariants (rho(0) = 0, finite parameters,
// non-decreasing tables); monotonicity and concavity of the analytic kinds are
// probed on a grid and kept as metadata, because some textbook examples (the
// SqrtLog family with zeta > 1) dip on a bounded window.
class EnvelopeFn {
 public:
  static EnvelopeFn power(double gamma, double scale = 1.0, double offset = 0.0);
  static EnvelopeFn sqrt_log(double zeta, int sign, double scale = 1.0);
  static EnvelopeFn table(std::vector<double> u, std::vector<double> rho,
                          std::optional<TailModel> tail = std::nullopt);
  static EnvelopeFn zero() { return power(1.0, 0.0); }

  double operator()(double u) const;

  EnvelopeKind kind() const { return kind_; }
  double exponent() const { return exponent_; }  // gamma (Power) or zeta (SqrtLog)
  double scale() const { return scale_; }
  double offset() const { return offset_; }
  int sign() const { return sign_; }
  const std::vector<double>& table_u() const { return u_; }
  const std::vector<double>& table_rho() const { return rho_; }
  const std::optional<TailModel>& tail() const { return tail_; }

  bool concave() const { return concave_; }
  bool monotone() const { return monotone_; }
  bool zero_at_origin() const { return zero_at_origin_; }
  bool identically_zero() const { return kind_ != EnvelopeKind::Table && scale_ == 0.0; }

  // Largest u at which the function can be evaluated (infinity for analytic kinds).
  double domain_max() const;

  std::string describe() const;

 private:
  EnvelopeFn() = default;
  void probe_shape();

  EnvelopeKind kind_ = EnvelopeKind::Power;
  double exponent_ = 0.0;
  double scale_ = 1.0;
  double offset_ = 0.0;
  int sign_ = -1;
  std::vector<double> u_, rho_;
  std::optional<TailModel> tail_;
  bool concave_ = false;
  bool monotone_ = false;
  bool zero_at_origin_ = true;
};

// rho(u). Throws DomainError for u < 0 and RangeError outside a table.
double eval_rho(const EnvelopeFn& f, double u);

// rho_r(u) := rho(u + r) - rho(r). Throws DomainError if r or u is negative or
// if rho decreases on [r, r + u].
double shifted_gap(const EnvelopeFn& f, double r, double u);

// The shifted gap as a callable, the form the samplers consume.
struct ShiftedEnvelope {
  EnvelopeFn rho = EnvelopeFn::zero();
  double r = 0.0;
  double operator()(double u) const { return shifted_gap(rho, r, u); }
};

enum class DeClass { Converges, Diverges };

struct DeResult {
  DeClass classification = DeClass::Diverges;
  // Value (or upper estimate) of int_1^inf rho(u) u^{-3/2} du when convergent.
  double bound = 0.0;
};

// Dvoretzky-Erdos integral test on int_1^inf rho(u) u^{-3/2} du. Analytic kinds
// are classified by their tail exponent; tables integrate exactly up to their
// last sample and then rely on the declared tail model.
DeResult dvoretzky_erdos_test(const EnvelopeFn& f, double tolerance = 1e-10);

// Least concave majorant of a table (upper hull of the graph points).
EnvelopeFn concave_majorant(const EnvelopeFn& samples);

// Soft checks that do not invalidate an envelope but are worth surfacing.
std::vector<std::string> envelope_warnings(const EnvelopeFn& f);

}  // namespace gmc
