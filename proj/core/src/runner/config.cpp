#include "gmc/runner/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "gmc/diagnostics.hpp"
#include "gmc/field.hpp"

namespace gmc::runner {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& xs, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
  return out;
}

// Reads one JSON object, recording problems under its pointer path and
// remembering which keys were consumed so leftovers can be reported.
class Reader {
 public:
  Reader(const json& j, std::string path, std::vector<std::string>& issues)
      : j_(j), path_(std::move(path)), issues_(issues) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  const std::string& path() const { return path_; }
  bool ok() const { return j_.is_object(); }
  bool has(const std::string& key) const { return ok() && j_.contains(key); }

  void fail(const std::string& key, const std::string& msg) const {
    issues_.push_back((key.empty() ? (path_.empty() ? "/" : path_) : path_ + "/" + key) + ": " + msg);
  }

  const json* get(const std::string& key) {
    if (!has(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  void require(const std::string& key) {
    if (!has(key)) fail(key, "required key is missing");
  }

  double number(const std::string& key, double fallback, const std::function<bool(double)>& valid = {},
                const std::string& rule = "") {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number()) {
      fail(key, "expected a number");
      return fallback;
    }
    const double x = v->get<double>();
    if (!std::isfinite(x) || (valid && !valid(x))) {
      fail(key, "must be " + (rule.empty() ? std::string("finite") : rule));
      return fallback;
    }
    return x;
  }

  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback, std::uint64_t min_value = 0) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number_integer() || (v->is_number_integer() && v->get<std::int64_t>() < 0 && !v->is_number_unsigned())) {
      fail(key, "expected a nonnegative integer");
      return fallback;
    }
    const auto x = v->get<std::uint64_t>();
    if (x < min_value) {
      fail(key, "must be >= " + std::to_string(min_value));
      return fallback;
    }
    return x;
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_string()) {
      fail(key, "expected a string");
      return fallback;
    }
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_array()) {
      fail(key, "expected an array of numbers");
      return fallback;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      if (!e.is_number() || !std::isfinite(e.get<double>())) {
        fail(key + "/" + std::to_string(i), "expected a finite number");
        return fallback;
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_array()) {
      fail(key, "expected an array of strings");
      return fallback;
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_string()) {
        fail(key + "/" + std::to_string(i), "expected a string");
        return fallback;
      }
      out.push_back((*v)[i].get<std::string>());
    }
    return out;
  }

  Reader child(const std::string& key) {
    static const json empty = json::object();
    const json* v = get(key);
    return Reader(v ? *v : empty, path_ + "/" + key, issues_);
  }

  void finish() const {
    if (!ok()) return;
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) fail(item.key(), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& issues_;
  std::set<std::string> seen_;
};

const std::vector<std::string> kExperiments{"covariance-validation", "brownian-closed-forms", "martingale-identities",
                                            "convergence",           "mollified-convergence", "degeneracy",
                                            "capacity",              "envelope-tests"};

const std::map<std::string, std::vector<std::string>> kChecks{
    {"covariance-validation", {"covariance", "variance"}},
    {"brownian-closed-forms", {"stay-positive", "bridge-positive", "below-line", "doob-mckean"}},
    {"martingale-identities", {"mean-mass", "mean-dq", "supermartingale", "plateau", "null-measure", "ordering"}},
    {"convergence", {"second-moment", "correlation-trend", "mean-vs-median"}},
    {"mollified-convergence", {"mean-mass", "null-measure", "mollifier-invariance", "joint-correlation"}},
    {"degeneracy", {"cantor-decay", "contrast-band", "decay-bound"}},
    {"capacity", {"bracket", "alpha-threshold", "de-classifier"}},
    {"envelope-tests", {"de-classifier", "shift-decay", "survival-in-r", "eta-limits"}},
};

EnvelopeFn read_envelope(Reader& r) {
  const std::string kind = r.string("kind", "");
  try {
    if (kind == "power") {
      const double g = r.number("gamma", 0.3, [](double x) { return x > 0.0; }, "> 0");
      const double s = r.number("scale", 1.0, [](double x) { return x >= 0.0; }, ">= 0");
      const double c = r.number("offset", 0.0, [](double x) { return x >= 0.0; }, ">= 0");
      r.finish();
      return EnvelopeFn::power(g, s, c);
    }
    if (kind == "sqrtlog") {
      const double z = r.number("zeta", 2.0);
      const double sign = r.number("sign", -1.0, [](double x) { return x == 1.0 || x == -1.0; }, "+1 or -1");
      const double s = r.number("scale", 1.0, [](double x) { return x >= 0.0; }, ">= 0");
      r.finish();
      return EnvelopeFn::sqrt_log(z, static_cast<int>(sign), s);
    }
    if (kind == "table") {
      const auto u = r.numbers("u", {});
      const auto rho = r.numbers("rho", {});
      std::optional<TailModel> tail;
      if (r.has("tail")) {
        Reader t = r.child("tail");
        TailModel m;
        m.exponent = t.number("exponent", 0.0);
        m.coefficient = t.number("coefficient", 1.0);
        t.finish();
        tail = m;
      }
      r.finish();
      return EnvelopeFn::table(u, rho, tail);
    }
  } catch (const Error& e) {
    r.fail("", e.what());
    return EnvelopeFn::zero();
  }
  if (kind.empty())
    r.fail("kind", "required key is missing (power, sqrtlog or table)");
  else
    r.fail("kind", "unknown envelope kind '" + kind + "' (expected power, sqrtlog or table)");
  return EnvelopeFn::zero();
}

KernelSpec read_kernel(Reader r) {
  KernelSpec k;
  k.eta1 = r.number("eta1", k.eta1, [](double x) { return x >= 0.0 && x <= 1.0; }, "in [0, 1]");
  k.eta2 = r.number("eta2", k.eta2, [](double x) { return x > 0.0; }, "> 0");
  k.d = static_cast<int>(r.unsigned_int("d", 1, 1));
  if (k.d > 2) r.fail("d", "must be 1 or 2");
  const std::string kappa = r.string("kappa", "selfconv-bump");
  if (kappa == "selfconv-bump")
    k.kappa = BumpFamily::Exp;
  else if (kappa == "selfconv-flat-bump")
    k.kappa = BumpFamily::FlatExp;
  else
    r.fail("kappa", "unknown kappa '" + kappa + "' (expected selfconv-bump or selfconv-flat-bump)");
  const std::string k0 = r.string("k0", "zero");
  if (k0 != "zero") r.fail("k0", "only the zero base covariance is supported");
  k.samples = r.unsigned_int("samples", k.samples, 64);
  r.finish();
  return k;
}

MeasureSpec read_measure(Reader r, int d) {
  MeasureSpec m;
  r.require("scheme");
  m.scheme = r.string("scheme", "");
  if (m.scheme == "lebesgue") {
    const auto lo = r.numbers("lo", std::vector<double>(d, 0.0));
    const auto hi = r.numbers("hi", std::vector<double>(d, 1.0));
    if (lo.size() != static_cast<std::size_t>(d)) r.fail("lo", "needs one coordinate per dimension");
    if (hi.size() != static_cast<std::size_t>(d)) r.fail("hi", "needs one coordinate per dimension");
    m.box.d = d;
    for (int i = 0; i < d && i < static_cast<int>(lo.size()) && i < static_cast<int>(hi.size()); ++i) {
      m.box.lo[i] = lo[i];
      m.box.hi[i] = hi[i];
    }
    if (d == 1) m.box.lo[1] = m.box.hi[1] = 0.0;
    m.h = r.number("h", m.h, [](double x) { return x > 0.0; }, "> 0");
  } else if (m.scheme == "cantor") {
    if (d != 1) r.fail("scheme", "the Cantor measure is one-dimensional");
    m.cantor.level = static_cast<int>(r.unsigned_int("level", 10));
    if (r.has("schedule")) {
      Reader s = r.child("schedule");
      m.cantor.schedule = read_envelope(s);
    }
  } else if (m.scheme == "occupation") {
    if (d != 2) r.fail("scheme", "the occupation measure is planar (kernel d = 2)");
    m.horizon = r.number("horizon", m.horizon, [](double x) { return x > 0.0; }, "> 0");
    m.dt = r.number("dt", m.dt, [](double x) { return x > 0.0; }, "> 0");
    m.seed = r.unsigned_int("seed", 0);
  } else if (!m.scheme.empty()) {
    r.fail("scheme", "unknown scheme '" + m.scheme + "' (expected lebesgue, cantor or occupation)");
  }
  r.finish();
  return m;
}

json kernel_to_json(const KernelSpec& k) {
  return {{"eta1", k.eta1}, {"eta2", k.eta2}, {"d", k.d},
          {"kappa", k.kappa == BumpFamily::Exp ? "selfconv-bump" : "selfconv-flat-bump"},
          {"k0", "zero"}, {"samples", k.samples}};
}

json measure_to_json(const MeasureSpec& m) {
  json j{{"scheme", m.scheme}};
  if (m.scheme == "lebesgue") {
    std::vector<double> lo(m.box.lo.begin(), m.box.lo.begin() + m.box.d);
    std::vector<double> hi(m.box.hi.begin(), m.box.hi.begin() + m.box.d);
    j["lo"] = lo;
    j["hi"] = hi;
    j["h"] = m.h;
  } else if (m.scheme == "cantor") {
    j["level"] = m.cantor.level;
    j["schedule"] = envelope_to_json(m.cantor.schedule);
  } else {
    j["horizon"] = m.horizon;
    j["dt"] = m.dt;
    j["seed"] = m.seed;
  }
  return j;
}

std::string bump_name(BumpFamily b) { return to_string(b); }

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : UsageError("invalid config:\n  " + join(issues, "\n  ")), issues_(std::move(issues)) {}

StarScaleKernel KernelSpec::build() const { return StarScaleKernel(eta1, eta2, build_smoothing_kernel(kappa, d, samples)); }

ReferenceMeasure MeasureSpec::build() const {
  if (scheme == "lebesgue") return build_lebesgue(box, h);
  if (scheme == "cantor") return build_cantor(cantor);
  if (scheme == "occupation") return build_occupation(horizon, dt, seed, 2);
  throw UsageError("unknown measure scheme '" + scheme + "'");
}

bool RunConfig::wants(const std::string& check) const {
  return checks.empty() || std::find(checks.begin(), checks.end(), check) != checks.end();
}

std::vector<std::string> experiment_names() { return kExperiments; }

EnvelopeFn parse_envelope(const json& j) {
  std::vector<std::string> issues;
  Reader r(j, "", issues);
  EnvelopeFn f = read_envelope(r);
  if (!issues.empty()) throw ConfigError(issues);
  return f;
}

json envelope_to_json(const EnvelopeFn& f) {
  switch (f.kind()) {
    case EnvelopeKind::Power:
      return {{"kind", "power"}, {"gamma", f.exponent()}, {"scale", f.scale()}, {"offset", f.offset()}};
    case EnvelopeKind::SqrtLog:
      return {{"kind", "sqrtlog"}, {"zeta", f.exponent()}, {"sign", f.sign()}, {"scale", f.scale()}};
    case EnvelopeKind::Table: {
      json j{{"kind", "table"}, {"u", f.table_u()}, {"rho", f.table_rho()}};
      if (f.tail()) j["tail"] = {{"exponent", f.tail()->exponent}, {"coefficient", f.tail()->coefficient}};
      return j;
    }
  }
  return {};
}

RunConfig validate_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("/: not valid JSON (") + e.what() + ")"});
  }
  return validate_config(doc);
}

RunConfig validate_config(const json& doc) {
  std::vector<std::string> issues;
  Reader root(doc, "", issues);
  if (!root.ok()) throw ConfigError(issues);
  RunConfig c;

  root.require("experiment");
  root.require("seed");
  c.experiment = root.string("experiment", "");
  const bool known = std::find(kExperiments.begin(), kExperiments.end(), c.experiment) != kExperiments.end();
  if (!c.experiment.empty() && !known)
    root.fail("experiment", "unknown experiment '" + c.experiment + "'; valid names: " + join(kExperiments, ", "));
  c.seed = root.unsigned_int("seed", 0);
  c.replicas = root.unsigned_int("replicas", c.replicas, 1);
  c.threads = static_cast<unsigned>(root.unsigned_int("threads", 1, 1));
  c.output = root.string("output", c.output);

  const auto needs = [&](const std::string& key) {
    static const std::map<std::string, std::vector<std::string>> req{
        {"covariance-validation", {"kernel"}},
        {"martingale-identities", {"kernel", "measure", "envelope"}},
        {"convergence", {"kernel", "measure", "envelope"}},
        {"mollified-convergence", {"kernel", "measure", "eps"}},
        {"degeneracy", {"kernel", "measure", "contrast"}},
        {"capacity", {"measure"}},
        {"envelope-tests", {"envelope"}},
    };
    auto it = req.find(c.experiment);
    return it != req.end() && std::find(it->second.begin(), it->second.end(), key) != it->second.end();
  };
  for (const char* key : {"kernel", "measure", "envelope", "eps", "contrast"})
    if (known && needs(key)) root.require(key);

  int d = 1;
  if (root.has("kernel")) {
    c.kernel = read_kernel(root.child("kernel"));
    d = c.kernel->d;
  }
  if (root.has("measure")) {
    c.measure = read_measure(root.child("measure"), d);
  }
  if (root.has("envelope")) {
    Reader e = root.child("envelope");
    c.envelope = read_envelope(e);
  }
  {
    Reader t = root.child("truncation");
    c.truncation.q = t.number("q", 1.0, [](double x) { return x >= 0.0; }, ">= 0");
    c.truncation.r = t.number("r", 0.0, [](double x) { return x >= 0.0; }, ">= 0");
    t.finish();
    if (c.envelope) c.truncation.rho = *c.envelope;
  }
  {
    Reader g = root.child("grid");
    c.checkpoints = g.numbers("checkpoints", c.checkpoints);
    c.dt = g.number("dt", c.dt, [](double x) { return x > 0.0; }, "> 0");
    g.finish();
    try {
      (void)c.grid();
    } catch (const Error& e) {
      issues.push_back(std::string("/grid: ") + e.what());
    }
  }
  c.eps = root.numbers("eps", {});
  for (std::size_t i = 0; i < c.eps.size(); ++i)
    if (!(c.eps[i] > 0.0 && c.eps[i] < 1.0)) issues.push_back("/eps/" + std::to_string(i) + ": must lie in (0, 1)");
  {
    Reader m = root.child("mollifier");
    const auto names = m.strings("bumps", {"bump"});
    c.mollifiers.clear();
    for (std::size_t i = 0; i < names.size(); ++i) {
      try {
        c.mollifiers.push_back(bump_family_from_string(names[i]));
      } catch (const Error&) {
        m.fail("bumps/" + std::to_string(i), "unknown bump '" + names[i] + "' (expected bump or flat-bump)");
      }
    }
    if (names.empty()) m.fail("bumps", "needs at least one bump family");
    m.finish();
  }
  {
    Reader p = root.child("paths");
    c.paths.replicas = p.unsigned_int("replicas", c.paths.replicas, 1);
    c.paths.dt = p.number("dt", c.paths.dt, [](double x) { return x > 0.0; }, "> 0");
    c.paths.horizon = p.number("horizon", c.paths.horizon, [](double x) { return x > 0.0; }, "> 0");
    c.paths.growth = p.number("growth", c.paths.growth, [](double x) { return x >= 0.0; }, ">= 0");
    p.finish();
  }
  if (root.has("contrast")) {
    Reader k = root.child("contrast");
    k.require("measure");
    k.require("envelope");
    if (k.has("measure")) c.contrast = read_measure(k.child("measure"), d);
    if (k.has("envelope")) {
      Reader e = k.child("envelope");
      c.contrast_envelope = read_envelope(e);
    }
    k.finish();
  }
  c.alpha = root.number("alpha", c.alpha, [](double x) { return x > 0.0; }, "> 0");
  c.checks = root.strings("checks", {});
  if (known) {
    const auto& valid = kChecks.at(c.experiment);
    for (std::size_t i = 0; i < c.checks.size(); ++i)
      if (std::find(valid.begin(), valid.end(), c.checks[i]) == valid.end())
        issues.push_back("/checks/" + std::to_string(i) + ": unknown check '" + c.checks[i] + "' for " + c.experiment
                         + "; valid: " + join(valid, ", "));
  }
  root.finish();

  // Build what can be built so construction errors surface here, with a path.
  if (c.measure && !c.measure->scheme.empty()) {
    try {
      (void)c.measure->build();
    } catch (const Error& e) {
      issues.push_back(std::string("/measure: ") + e.what());
    }
  }
  if (c.contrast && !c.contrast->scheme.empty()) {
    try {
      (void)c.contrast->build();
    } catch (const Error& e) {
      issues.push_back(std::string("/contrast/measure: ") + e.what());
    }
  }

  // Registry rules tying modules together.
  if (issues.empty() && known) {
    const auto converges = [](const EnvelopeFn& f) {
      try {
        return dvoretzky_erdos_test(f).classification == DeClass::Converges;
      } catch (const Error&) {
        return false;
      }
    };
    if ((c.experiment == "convergence" || c.experiment == "martingale-identities") && c.envelope
        && !converges(*c.envelope))
      issues.push_back("/envelope: " + c.envelope->describe()
                       + " fails the Dvoretzky-Erdos test; the truncated measures need a lower envelope");
    if (c.experiment == "degeneracy") {
      if (c.measure->scheme != "cantor") {
        issues.push_back("/measure/scheme: the degeneracy experiment needs the Cantor measure");
      } else {
        const EnvelopeFn half = scaled_envelope(c.measure->cantor.schedule, 0.5);
        if (converges(half))
          issues.push_back("/measure/schedule: half the schedule, " + half.describe()
                           + ", passes the Dvoretzky-Erdos test; degeneracy needs a divergent schedule");
      }
      if (c.contrast_envelope && !converges(*c.contrast_envelope))
        issues.push_back("/contrast/envelope: " + c.contrast_envelope->describe()
                         + " fails the Dvoretzky-Erdos test; the contrast must satisfy the criterion");
      if (!(c.alpha < 1.0)) issues.push_back("/alpha: must be < 1 for the sup-field statistic");
      if (c.kernel && c.kernel->d != 1) issues.push_back("/kernel/d: the degeneracy experiment is one-dimensional");
    }
    if (c.experiment == "capacity" && c.measure->scheme != "cantor")
      issues.push_back("/measure/scheme: the capacity experiment brackets the Cantor measure");
    if (c.experiment == "mollified-convergence" && c.mollifiers.size() > 2)
      issues.push_back("/mollifier/bumps: at most two bump families");
    if (c.experiment == "convergence" || c.experiment == "martingale-identities" || c.experiment == "degeneracy") {
      if (c.checkpoints.empty() || c.checkpoints.front() != 0.0)
        issues.push_back("/grid/checkpoints: must start at 0");
    }
    if (c.experiment == "degeneracy" && c.replicas < 100)
      issues.push_back("/replicas: the degeneracy experiment needs at least 100 replicas");
    if ((c.experiment == "martingale-identities" || c.experiment == "convergence"
         || c.experiment == "covariance-validation" || c.experiment == "mollified-convergence")
        && c.replicas < 100)
      issues.push_back("/replicas: ensemble statistics need at least 100 replicas");
  }

  if (!issues.empty()) throw ConfigError(issues);

  json n{{"experiment", c.experiment}, {"seed", c.seed}, {"replicas", c.replicas}, {"threads", c.threads},
         {"output", c.output},
         {"truncation", {{"q", c.truncation.q}, {"r", c.truncation.r}}},
         {"grid", {{"checkpoints", c.checkpoints}, {"dt", c.dt}}},
         {"eps", c.eps},
         {"paths", {{"replicas", c.paths.replicas}, {"dt", c.paths.dt}, {"horizon", c.paths.horizon},
                    {"growth", c.paths.growth}}},
         {"alpha", c.alpha},
         {"checks", c.checks}};
  std::vector<std::string> bumps;
  for (BumpFamily b : c.mollifiers) bumps.push_back(bump_name(b));
  n["mollifier"] = {{"bumps", bumps}};
  if (c.kernel) n["kernel"] = kernel_to_json(*c.kernel);
  if (c.measure) n["measure"] = measure_to_json(*c.measure);
  if (c.envelope) n["envelope"] = envelope_to_json(*c.envelope);
  if (c.contrast) n["contrast"] = {{"measure", measure_to_json(*c.contrast)}};
  if (c.contrast_envelope) n["contrast"]["envelope"] = envelope_to_json(*c.contrast_envelope);
  c.normalized = n;
  return c;
}

}  // namespace gmc::runner
