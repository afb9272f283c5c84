#include "fso/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <tuple>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fso/errors.hpp"

namespace fso {

namespace {

constexpr double kLn2 = std::numbers::ln2;

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

FoxHMultiSpec per_element_blocks(const HopChain& chain) {
  FoxHMultiSpec s;
  for (auto& m : element_mellin(chain)) {
    for (auto& t : m) t.numerator_upper.push_back({1.0, 1.0, 1});  // Gamma(s_i)
    s.per_variable.push_back(std::move(m));
  }
  return s;
}

MetricResult from_scaled(const ScaledValue& v, double log_extra) {
  MetricResult r;
  r.method = Method::asymptotic;
  r.value = v.sign == 0 ? 0.0 : v.sign * std::exp(v.log_magnitude + log_extra);
  return r;
}

double clamp01(double v, double hi = 1.0) { return std::clamp(v, 0.0, hi); }

double lg_binom(int n, int k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); }

}  // namespace

// ---------------------------------------------------------------------------

ModulationParams ModulationParams::preset(const std::string& name) {
  const std::string n = lower(name);
  if (n == "cbfsk") return {0.5, 0.5};
  if (n == "cbpsk") return {0.5, 1.0};
  if (n == "nbfsk") return {1.0, 0.5};
  if (n == "dbpsk") return {1.0, 1.0};
  throw ConfigError({"modulation: unknown preset '" + name + "' (expected CBFSK, CBPSK, NBFSK or DBPSK)"});
}

void ModulationParams::validate() const {
  if (!(p > 0.0) || !(q > 0.0)) throw DomainError("modulation: p and q must be positive");
}

void NumericsConfig::validate() const {
  if (!(epsilon > 0.0) || epsilon > 1e-3) throw DomainError("numerics: epsilon must lie in (0, 1e-3]");
  if (!(tol > 0.0)) throw DomainError("numerics: tol must be positive");
  if (max_refinements < 0) throw DomainError("numerics: max_refinements must be >= 0");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::exact: return "exact";
    case Method::asymptotic: return "asymptotic";
    case Method::quadrature_baseline: return "quadrature-baseline";
    case Method::monte_carlo: return "monte-carlo";
  }
  return "?";
}

// --- spec builders ---------------------------------------------------------

std::vector<FoxHSpec> ber_terms(std::vector<FoxHSpec> m, int t, double p) {
  int sg = 1;
  const double lgp = log_gamma_real(p, &sg);
  for (auto& s : m) {
    s.numerator_upper.push_back({1.0, 1.0, 1});            // Gamma(s)
    s.numerator_upper.push_back({1.0 - p, 1.0 / t, 1});    // Gamma(p + s/t)
    s.denominator_lower.push_back({0.0, 1.0, 1});          // 1/Gamma(1+s)
    s.leading_log_scale -= std::log(2.0) + lgp;
  }
  return m;
}

std::vector<FoxHSpec> capacity_terms(std::vector<FoxHSpec> m, int t) {
  // ln(1+y) = G^{1,2}_{2,2}; in s it becomes Gamma(-s/t)^2 Gamma(1+s/t) / Gamma(1-s/t).
  for (auto& s : m) {
    s.numerator_lower.push_back({0.0, 1.0 / t, 2});
    s.numerator_upper.push_back({0.0, 1.0 / t, 1});
    s.denominator_upper.push_back({1.0, 1.0 / t, 1});
    s.leading_log_scale += std::log(1.0 / (t * kLn2));
  }
  return m;
}

std::vector<FoxHSpec> moment_terms(std::vector<FoxHSpec> m, int t, double r) {
  for (auto& s : m) {
    s.numerator_upper.push_back({1.0 - r, 1.0 / t, 1});  // Gamma(r + s/t)
    s.leading_log_scale -= std::log(double(t));
  }
  return m;
}

FoxHMultiSpec sum_ber_spec(const HopChain& chain, int t, double p) {
  FoxHMultiSpec s = per_element_blocks(chain);
  const std::size_t n = s.per_variable.size();
  s.outer_numerator.push_back({p, std::vector<double>(n, 1.0 / t), 1});
  s.outer_denominator.push_back({1.0, std::vector<double>(n, 1.0), 1});
  int sg = 1;
  s.leading_log_scale = -std::log(2.0) - log_gamma_real(p, &sg);
  return s;
}

// --- diversity -------------------------------------------------------------

std::vector<double> element_dominant_poles(const HopChain& chain) {
  std::vector<double> out;
  for (const auto& m : element_mellin(chain)) out.push_back(dominant_pole(m));
  return out;
}

double diversity_order(const HopChain& chain, const DetectionConfig& det, DiversityKind kind) {
  det.validate();
  const auto poles = element_dominant_poles(chain);
  if (poles.size() == 1) return poles[0] / det.t;
  const double kappa = kind == DiversityKind::ber ? 1.0 : 0.0;
  double g = 0.0;
  for (double p : poles) g += (p - kappa) / det.t;
  return g;
}

// --- analyzer --------------------------------------------------------------

struct LinkAnalyzer::Cache {
  std::mutex mu;
  std::map<std::string, std::shared_ptr<FoxHEvaluator>> one;
  std::map<std::string, std::shared_ptr<FoxHMultiEvaluator>> multi;
  std::optional<std::pair<double, double>> support;
};

LinkAnalyzer::LinkAnalyzer(HopChain chain, NumericsConfig num)
    : chain_(std::move(chain)), num_(num), cache_(std::make_unique<Cache>()) {
  chain_.validate();
  num_.validate();
  if (chain_.elements == 1) mellin_ = product_mellin(chain_.hops_of(0));
}

LinkAnalyzer::~LinkAnalyzer() = default;

namespace {

std::string key(const char* kind, double a = 0.0, double b = 0.0) {
  return std::string(kind) + ":" + std::to_string(a) + ":" + std::to_string(b);
}

}  // namespace

std::shared_ptr<FoxHEvaluator> LinkAnalyzer::one(const std::string& k,
                                                 const std::function<std::vector<FoxHSpec>()>& make) const {
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto it = cache_->one.find(k);
    if (it != cache_->one.end()) return it->second;
  }
  EvalOptions eo;
  eo.rel_tol = num_.tol;
  eo.max_refinements = num_.max_refinements;
  auto ev = std::make_shared<FoxHEvaluator>(make(), eo);
  std::lock_guard<std::mutex> lock(cache_->mu);
  return cache_->one.emplace(k, ev).first->second;
}

std::shared_ptr<FoxHMultiEvaluator> LinkAnalyzer::multi(const std::string& k,
                                                        const std::function<FoxHMultiSpec()>& make) const {
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto it = cache_->multi.find(k);
    if (it != cache_->multi.end()) return it->second;
  }
  FoxHMultiSpec sp = make();
  MultiEvalOptions mo;
  mo.rel_tol = num_.tol;
  mo.seed = num_.seed;
  mo.deterministic = !(sp.dimension() >= 3 && num_.randomized_multi);
  auto ev = std::make_shared<FoxHMultiEvaluator>(std::move(sp), mo);
  std::lock_guard<std::mutex> lock(cache_->mu);
  return cache_->multi.emplace(k, ev).first->second;
}

double LinkAnalyzer::channel_cdf(double x) const {
  if (!(x > 0.0)) return 0.0;
  if (chain_.elements == 1) return one("cdf", [&] { return cdf_terms(mellin_); })->evaluate(x).value;
  std::vector<double> z(chain_.elements, x);
  return multi("cdf", [&] { return sum_cdf_spec(chain_); })->evaluate(z).value;
}

double LinkAnalyzer::channel_pdf(double x) const {
  if (!(x > 0.0)) return 0.0;
  if (chain_.elements == 1) return one("pdf", [&] { return pdf_terms(mellin_); })->evaluate(x).value;
  std::vector<double> z(chain_.elements, x);
  return multi("pdf", [&] { return sum_pdf_spec(chain_); })->evaluate(z).value / x;
}

double LinkAnalyzer::diversity_order(const DetectionConfig& det, DiversityKind kind) const {
  return fso::diversity_order(chain_, det, kind);
}

// --- exact -----------------------------------------------------------------

MetricResult LinkAnalyzer::outage_exact(const DetectionConfig& det, double gamma_th) const {
  det.validate();
  if (!(gamma_th > 0.0)) throw DomainError("outage: threshold must be positive");
  const double x = std::pow(gamma_th / det.gamma0(), 1.0 / det.t);
  MetricResult r;
  if (chain_.elements == 1) {
    const EvalResult e = one("cdf", [&] { return cdf_terms(mellin_); })->evaluate(x);
    r.value = e.value;
    r.error_estimate = e.error_estimate;
  } else {
    std::vector<double> z(chain_.elements, x);
    const MultiEvalResult e = multi("cdf", [&] { return sum_cdf_spec(chain_); })->evaluate(z);
    r.value = e.value;
    r.error_estimate = e.error_estimate;
  }
  r.value = clamp01(r.value);
  return r;
}

MetricResult LinkAnalyzer::ber_exact(const DetectionConfig& det, const ModulationParams& mod) const {
  det.validate();
  mod.validate();
  const double x = std::pow(mod.q * det.gamma0(), -1.0 / det.t);
  MetricResult r;
  if (chain_.elements == 1) {
    const EvalResult e =
        one(key("ber", det.t, mod.p), [&] { return ber_terms(mellin_, det.t, mod.p); })->evaluate(x);
    r.value = e.value;
    r.error_estimate = e.error_estimate;
  } else {
    std::vector<double> z(chain_.elements, x);
    const MultiEvalResult e =
        multi(key("ber", det.t, mod.p), [&] { return sum_ber_spec(chain_, det.t, mod.p); })->evaluate(z);
    r.value = e.value;
    r.error_estimate = e.error_estimate;
  }
  r.value = clamp01(r.value, 0.5);
  return r;
}

MetricResult LinkAnalyzer::capacity_at(const DetectionConfig& det) const {
  const double a = det.mu_t() * det.gamma0();
  MetricResult r;
  if (chain_.elements == 1) {
    const EvalResult e =
        one(key("cap", det.t), [&] { return capacity_terms(mellin_, det.t); })->evaluate(std::pow(a, -1.0 / det.t));
    r.value = e.value;
    r.error_estimate = e.error_estimate;
    return r;
  }
  // d/du log2(1 + a x^t) = t a x^t / ((1 + a x^t) ln 2)
  return integrate_tail(
      [&](double u) {
        const double y = a * std::exp(det.t * u);
        return det.t / kLn2 * (std::isinf(y) ? 1.0 : y / (1.0 + y));
      },
      [&](double u) { return std::log1p(a * std::exp(det.t * u)) / kLn2; });
}

MetricResult LinkAnalyzer::capacity(const DetectionConfig& det) const {
  det.validate();
  MetricResult r = capacity_at(det);
  r.value = std::max(r.value, 0.0);
  return r;
}

// Binomial convolution of the element moment sequences, E[(sum h_i)^n] for integer n.
double LinkAnalyzer::integer_sum_moment(int n) const {
  std::vector<double> acc(n + 1, 0.0);
  acc[0] = 1.0;
  for (const auto& m : element_mellin(chain_)) {
    std::vector<double> mk(n + 1);
    for (int k = 0; k <= n; ++k) {
      mk[k] = k == 0 ? 1.0 : mellin_moment(m, k);
      if (!std::isfinite(mk[k]) || mk[k] < 0.0) throw DomainError("moment: element moment of this order does not exist");
    }
    std::vector<double> next(n + 1, 0.0);
    for (int j = 0; j <= n; ++j)
      for (int k = 0; k <= j; ++k) next[j] += std::exp(lg_binom(j, k)) * acc[k] * mk[j - k];
    acc = std::move(next);
  }
  return acc[n];
}

MetricResult LinkAnalyzer::moment_at(const DetectionConfig& det, double r, double eps) const {
  // E[gamma^r] = gamma0^r E[h^{rt} exp(-eps h^t)] = gamma0^r eps^{-r} / t * H(eps^{-1/t}).
  const double x = std::pow(eps, -1.0 / det.t);
  const double scale = std::pow(det.gamma0() / eps, r);
  MetricResult out;
  const EvalResult e = one(key("mom", det.t, r), [&] { return moment_terms(mellin_, det.t, r); })->evaluate(x);
  out.value = scale * e.value;
  out.error_estimate = scale * e.error_estimate;
  return out;
}

MetricResult LinkAnalyzer::snr_moment(const DetectionConfig& det, double r) const {
  det.validate();
  if (!(r >= 0.0)) throw DomainError("moment: order must be non-negative");
  if (r == 0.0) return {1.0, 0.0, Method::exact, ""};
  if (chain_.elements > 1) {
    const double ex = r * det.t;
    if (std::abs(ex - std::round(ex)) < 1e-12) {
      MetricResult m;
      m.value = std::pow(det.gamma0(), r) * integer_sum_moment(static_cast<int>(std::round(ex)));
      m.error_estimate = 1e-13 * m.value;
      return m;
    }
    // E[S^a] = int a x^a (1 - F(x)) du
    MetricResult m = integrate_tail([&](double u) { return ex * std::exp(ex * u); },
                                    [&](double u) { return std::exp(ex * u); });
    const double g0r = std::pow(det.gamma0(), r);
    m.value *= g0r;
    m.error_estimate *= g0r;
    return m;
  }
  MetricResult m = moment_at(det, r, num_.epsilon);
  const MetricResult m10 = moment_at(det, r, num_.epsilon / 10.0);
  const double diff = std::abs(m.value - m10.value);
  if (diff > 1e-3 * std::abs(m.value) + m.error_estimate + m10.error_estimate)
    m.warning = "moment is sensitive to the regularizer epsilon";
  m.error_estimate = std::max(m.error_estimate, diff);
  return m;
}

// --- asymptotic ------------------------------------------------------------

MetricResult LinkAnalyzer::outage_asymptotic(const DetectionConfig& det, double gamma_th) const {
  det.validate();
  if (!(gamma_th > 0.0)) throw DomainError("outage: threshold must be positive");
  ResidueOptions ro;
  ro.resolve_ties = num_.resolve_pole_ties;
  const double x = std::pow(gamma_th / det.gamma0(), 1.0 / det.t);
  if (chain_.elements == 1) {
    const auto terms = cdf_terms(mellin_);
    return from_scaled(fox_h_small_argument(terms, x, ro), 0.0);
  }
  ro.every_family = false;
  std::vector<double> z(chain_.elements, x);
  return from_scaled(fox_h_multi_small_argument(sum_cdf_spec(chain_), z, ro), 0.0);
}

MetricResult LinkAnalyzer::ber_asymptotic(const DetectionConfig& det, const ModulationParams& mod) const {
  det.validate();
  mod.validate();
  ResidueOptions ro;
  ro.resolve_ties = num_.resolve_pole_ties;
  const double x = std::pow(mod.q * det.gamma0(), -1.0 / det.t);
  if (chain_.elements == 1) {
    const auto terms = ber_terms(mellin_, det.t, mod.p);
    return from_scaled(fox_h_small_argument(terms, x, ro), 0.0);
  }
  ro.every_family = false;
  std::vector<double> z(chain_.elements, x);
  return from_scaled(fox_h_multi_small_argument(sum_ber_spec(chain_, det.t, mod.p), z, ro), 0.0);
}

// --- quadrature baselines --------------------------------------------------

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
constexpr double kResolved = 4.0;

// Adaptive GK for an integrand with an absolute noise level; the tolerance is
// never set below what the noise allows, so the recursion does not chase it.
double integrate_noisy(const std::function<std::pair<double, double>(double)>& f, double a, double b,
                       double* err) {
  auto value = [&](double u) { return f(u).first; };
  auto noise = [&](double u) { return std::abs(f(u).second); };
  const double rough = GK::integrate(value, a, b, 0);
  const double floor = GK::integrate(noise, a, b, 0);
  const double tol = std::max(1e-10, rough != 0.0 ? 4.0 * floor / std::abs(rough) : 1e-10);
  double e = 0.0;
  const double total = GK::integrate(value, a, b, 15, std::min(tol, 1e-4), &e);
  if (err) *err = e + floor;
  return total;
}

}  // namespace

std::pair<double, double> LinkAnalyzer::density_of_log(double x) const {
  if (chain_.elements == 1) {
    const EvalResult r = one("pdf", [&] { return pdf_terms(mellin_); })->evaluate(x);
    return {x * r.value, x * r.error_estimate};
  }
  std::vector<double> z(chain_.elements, x);
  const MultiEvalResult r = multi("pdf", [&] { return sum_pdf_spec(chain_); })->evaluate(z);
  return {r.value, r.error_estimate};
}

// Where x pdf(x) (the density of u = ln x) is above 1e-24 of its peak and well
// above its own error estimate. Noise must stay out of the range: the adaptive
// rule halves its absolute tolerance per level and would chase it to full depth.
std::pair<double, double> LinkAnalyzer::log_support() const {
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    if (cache_->support) return *cache_->support;
  }
  const double lo = std::log(1e-61), hi = std::log(1e10), step = 0.5;
  std::vector<double> us, gs;
  for (double u = lo; u <= hi; u += step) {
    const double x = std::exp(u);
    double g = 0.0, e = 0.0;
    try {
      std::tie(g, e) = density_of_log(x);
    } catch (const ConvergenceError&) {
      g = 0.0;
    }
    us.push_back(u);
    gs.push_back(std::abs(g) > kResolved * e ? std::abs(g) : 0.0);
  }
  const double peak = *std::max_element(gs.begin(), gs.end());
  if (!(peak > 0.0)) throw ConvergenceError("channel law: pdf could not be resolved on any point", 0.0, 1.0);
  std::size_t a = gs.size(), b = 0;
  for (std::size_t k = 0; k < gs.size(); ++k)
    if (gs[k] > 1e-24 * peak) {
      a = std::min(a, k);
      b = std::max(b, k);
    }
  const std::pair<double, double> out{us[a == 0 ? 0 : a - 1], us[std::min(b + 1, us.size() - 1)]};
  std::lock_guard<std::mutex> lock(cache_->mu);
  cache_->support = out;
  return out;
}

double LinkAnalyzer::integrate_over_h(const std::function<double(double)>& weight, double* err) const {
  const auto [lo, hi] = log_support();
  auto f = [&](double u) {
    const double x = std::exp(u), w = weight(x);
    const auto [g, ge] = density_of_log(x);
    return std::pair{w * g, w * ge};
  };
  return integrate_noisy(f, lo, hi, err);
}

MetricResult LinkAnalyzer::integrate_tail(const std::function<double(double)>& kernel,
                                          const std::function<double(double)>& primitive) const {
  const auto [lo, hi] = log_support();
  std::vector<double> z(chain_.elements);
  auto f = [&](double u) {
    std::fill(z.begin(), z.end(), std::exp(u));
    const MultiEvalResult e = multi("cdf", [&] { return sum_cdf_spec(chain_); })->evaluate(z);
    const double k = kernel(u);
    return std::pair{k * (1.0 - clamp01(e.value)), std::abs(k) * e.error_estimate};
  };
  MetricResult r;
  // below lo the cdf is negligible, so that part is the primitive itself
  r.value = primitive(lo) + integrate_noisy(f, lo, hi, &r.error_estimate);
  return r;
}

MetricResult LinkAnalyzer::outage_baseline(const DetectionConfig& det, double gamma_th) const {
  det.validate();
  const double uth = (std::log(gamma_th) - std::log(det.gamma0())) / det.t;
  const auto [lo, hi] = log_support();
  MetricResult r;
  r.method = Method::quadrature_baseline;
  if (uth <= lo) return r;
  r.value = integrate_noisy([&](double u) { return density_of_log(std::exp(u)); }, lo, std::min(uth, hi),
                            &r.error_estimate);
  r.value = clamp01(r.value);
  return r;
}

MetricResult LinkAnalyzer::ber_baseline(const DetectionConfig& det, const ModulationParams& mod) const {
  det.validate();
  mod.validate();
  int sg = 1;
  const double lgp = log_gamma_real(mod.p, &sg);
  const double g0 = det.gamma0();
  // (q^p / 2 Gamma(p)) int gamma^{p-1} e^{-q gamma} F(gamma) dgamma, with u = ln(gamma).
  auto f = [&](double u) {
    const double g = std::exp(u);
    const double F = channel_cdf(std::pow(g / g0, 1.0 / det.t));
    return std::exp(mod.p * std::log(mod.q * g) - mod.q * g - std::log(2.0) - lgp) * F;
  };
  const double split = std::log(10.0 / mod.q);
  const double lo = std::log((std::pow(2e-16 * mod.p, 1.0 / mod.p)) / mod.q);
  const double hi = std::log(120.0 / mod.q);
  MetricResult r;
  r.method = Method::quadrature_baseline;
  double e1 = 0.0, e2 = 0.0;
  r.value = GK::integrate(f, lo, split, 15, 1e-10, &e1) + GK::integrate(f, split, hi, 15, 1e-10, &e2);
  r.error_estimate = e1 + e2;
  return r;
}

MetricResult LinkAnalyzer::capacity_baseline(const DetectionConfig& det) const {
  det.validate();
  const double a = det.mu_t() * det.gamma0();
  MetricResult r;
  r.method = Method::quadrature_baseline;
  r.value = integrate_over_h([&](double x) { return std::log1p(a * std::pow(x, det.t)) / kLn2; },
                             &r.error_estimate);
  return r;
}

MetricResult LinkAnalyzer::moment_baseline(const DetectionConfig& det, double r) const {
  det.validate();
  MetricResult out;
  out.method = Method::quadrature_baseline;
  const double g0r = std::pow(det.gamma0(), r);
  out.value = g0r * integrate_over_h([&](double x) { return std::pow(x, r * det.t); }, &out.error_estimate);
  out.error_estimate *= g0r;
  return out;
}

// --- free functions --------------------------------------------------------

MetricResult outage_exact(const HopChain& chain, const DetectionConfig& det, double gamma_th,
                          const NumericsConfig& num) {
  return LinkAnalyzer(chain, num).outage_exact(det, gamma_th);
}
MetricResult outage_asymptotic(const HopChain& chain, const DetectionConfig& det, double gamma_th,
                               const NumericsConfig& num) {
  return LinkAnalyzer(chain, num).outage_asymptotic(det, gamma_th);
}
MetricResult ber_exact(const HopChain& chain, const DetectionConfig& det, const ModulationParams& mod,
                       const NumericsConfig& num) {
  return LinkAnalyzer(chain, num).ber_exact(det, mod);
}
MetricResult ber_asymptotic(const HopChain& chain, const DetectionConfig& det, const ModulationParams& mod,
                            const NumericsConfig& num) {
  return LinkAnalyzer(chain, num).ber_asymptotic(det, mod);
}
MetricResult capacity(const HopChain& chain, const DetectionConfig& det, const NumericsConfig& num) {
  return LinkAnalyzer(chain, num).capacity(det);
}
MetricResult snr_moment(const HopChain& chain, const DetectionConfig& det, double r, const NumericsConfig& num) {
  return LinkAnalyzer(chain, num).snr_moment(det, r);
}

}  // namespace fso
