#include "fso/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "fso/errors.hpp"
#include "internal.hpp"

namespace fso {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLogPi = 1.1447298858494002;

// Godfrey's g = 607/128 Lanczos set.
constexpr double kLanczosG = 607.0 / 128.0;
constexpr std::array<double, 14> kLanczos = {
    57.1562356658629235,     -59.5979603554754912,     14.1360979747417471,
    -0.491913816097620199,   .339946499848118887e-4,   .465236289270485756e-4,
    -.983744753048795646e-4, .158088703224912494e-3,   -.210264441724104883e-3,
    .217439618115212643e-3,  -.164318106536763890e-3,  .844182239838527433e-4,
    -.261908384015814087e-4, .368991826595316234e-5};

cplx lanczos_log_gamma(cplx z) {
  cplx ser(0.999999999999997092, 0.0);
  cplx y = z;
  for (double c : kLanczos) {
    y += 1.0;
    ser += c / y;
  }
  const cplx tmp = z + kLanczosG + 0.5;
  return (z + 0.5) * std::log(tmp) - tmp + std::log(2.5066282746310005 * ser) - std::log(z);
}

// log sin(pi z) for Im z >= 0, written so that it does not overflow for large Im z.
cplx log_sin_pi_upper(cplx z) {
  const cplx i(0.0, 1.0);
  const cplx e = std::exp(2.0 * kPi * i * z);
  return -i * kPi * z + std::log(1.0 - e) - std::log(2.0) + i * (kPi / 2.0);
}

bool is_gamma_pole(double x) {
  if (x > 0.5) return false;
  const double r = std::round(x);
  return std::abs(x - r) <= 1e-14 * std::max(1.0, std::abs(x));
}

}  // namespace

cplx log_gamma_complex(cplx z) {
  if (z.imag() == 0.0 && is_gamma_pole(z.real())) {
    std::ostringstream os;
    os << "log_gamma_complex: Gamma has a pole at z = " << std::round(z.real());
    throw DomainError(os.str());
  }
  if (z.real() >= 0.5) return lanczos_log_gamma(z);
  if (z.imag() < 0.0) return std::conj(log_gamma_complex(std::conj(z)));
  return kLogPi - log_sin_pi_upper(z) - lanczos_log_gamma(1.0 - z);
}

double log_gamma_real(double x, int* sign) {
  if (is_gamma_pole(x)) {
    std::ostringstream os;
    os << "log_gamma_real: Gamma has a pole at x = " << std::round(x);
    throw DomainError(os.str());
  }
  int s = 1;
  const double v = boost::math::lgamma(x, &s);
  if (sign) *sign = s;
  return v;
}

// ---------------------------------------------------------------------------

namespace {

int count(const std::vector<GammaFactor>& v) {
  int n = 0;
  for (const auto& f : v) n += f.multiplicity;
  return n;
}

double scale_sum(const std::vector<GammaFactor>& v) {
  double s = 0.0;
  for (const auto& f : v) s += f.scale * f.multiplicity;
  return s;
}

}  // namespace

int FoxHSpec::m() const { return count(numerator_lower); }
int FoxHSpec::n() const { return count(numerator_upper); }
int FoxHSpec::p() const { return count(numerator_upper) + count(denominator_upper); }
int FoxHSpec::q() const { return count(numerator_lower) + count(denominator_lower); }

double FoxHSpec::delta() const {
  return 0.5 * (scale_sum(numerator_lower) + scale_sum(numerator_upper) -
                scale_sum(denominator_lower) - scale_sum(denominator_upper));
}

void FoxHSpec::validate() const {
  auto check = [](const std::vector<GammaFactor>& v, const char* name) {
    for (const auto& f : v) {
      if (!(f.scale > 0.0) || !std::isfinite(f.scale) || !std::isfinite(f.coefficient))
        throw DomainError(std::string("FoxHSpec: ") + name + " factor needs a finite positive scale");
      if (f.multiplicity < 1)
        throw DomainError(std::string("FoxHSpec: ") + name + " factor multiplicity must be >= 1");
    }
  };
  check(numerator_lower, "numerator_lower");
  check(numerator_upper, "numerator_upper");
  check(denominator_lower, "denominator_lower");
  check(denominator_upper, "denominator_upper");
  if (!(argument_scale > 0.0) || !std::isfinite(argument_scale))
    throw DomainError("FoxHSpec: argument_scale must be positive and finite");
  if (!std::isfinite(leading_coefficient) || !std::isfinite(leading_log_scale))
    throw DomainError("FoxHSpec: leading factor must be finite");
}

FoxHSpec meijer_g_spec(int m, int n, std::span<const double> a, std::span<const double> b) {
  if (m < 0 || n < 0 || m > static_cast<int>(b.size()) || n > static_cast<int>(a.size()))
    throw DomainError("meijer_g_spec: orders inconsistent with parameter lists");
  FoxHSpec s;
  for (int j = 0; j < static_cast<int>(b.size()); ++j)
    (j < m ? s.numerator_lower : s.denominator_lower).push_back({b[j], 1.0, 1});
  for (int j = 0; j < static_cast<int>(a.size()); ++j)
    (j < n ? s.numerator_upper : s.denominator_upper).push_back({a[j], 1.0, 1});
  return s;
}

std::vector<LinearGamma> integrand_factors(const FoxHSpec& spec) {
  std::vector<LinearGamma> out;
  out.reserve(spec.numerator_lower.size() + spec.numerator_upper.size() +
              spec.denominator_lower.size() + spec.denominator_upper.size());
  for (const auto& f : spec.numerator_lower) out.push_back({f.coefficient, -f.scale, f.multiplicity});
  for (const auto& f : spec.numerator_upper) out.push_back({1.0 - f.coefficient, f.scale, f.multiplicity});
  for (const auto& f : spec.denominator_lower) out.push_back({1.0 - f.coefficient, f.scale, -f.multiplicity});
  for (const auto& f : spec.denominator_upper) out.push_back({f.coefficient, -f.scale, -f.multiplicity});
  return out;
}

namespace detail {
cplx log_lead(double lead, double log_scale) {
  if (lead == 0.0) return cplx(-std::numeric_limits<double>::infinity(), 0.0);
  return cplx(std::log(std::abs(lead)) + log_scale, lead < 0.0 ? kPi : 0.0);
}
}  // namespace detail

cplx log_mellin_kernel(const FoxHSpec& spec, cplx s) {
  cplx acc = detail::log_lead(spec.leading_coefficient, spec.leading_log_scale) + s * std::log(spec.argument_scale);
  for (const auto& f : spec.numerator_lower) acc += double(f.multiplicity) * log_gamma_complex(f.coefficient - f.scale * s);
  for (const auto& f : spec.numerator_upper) acc += double(f.multiplicity) * log_gamma_complex(1.0 - f.coefficient + f.scale * s);
  for (const auto& f : spec.denominator_lower) acc -= double(f.multiplicity) * log_gamma_complex(1.0 - f.coefficient + f.scale * s);
  for (const auto& f : spec.denominator_upper) acc -= double(f.multiplicity) * log_gamma_complex(f.coefficient - f.scale * s);
  return acc;
}

PoleStrip pole_strip(std::span<const FoxHSpec> terms) {
  PoleStrip st{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (const auto& t : terms) {
    for (const auto& f : t.numerator_lower) st.right = std::min(st.right, f.coefficient / f.scale);
    for (const auto& f : t.numerator_upper) st.left = std::max(st.left, (f.coefficient - 1.0) / f.scale);
  }
  return st;
}

double ContourPlan::truncation() const {
  double t = 0.0;
  for (double v : truncations) t = std::max(t, v);
  return t;
}

namespace detail {

double choose_anchor(const PoleStrip& st, double position, std::optional<double> fixed) {
  if (!(st.left < st.right)) {
    std::ostringstream os;
    os << "contour: left poles reach " << st.left << " but right poles start at " << st.right;
    throw NonSeparableError(os.str());
  }
  if (fixed) {
    if (!(*fixed > st.left && *fixed < st.right)) {
      std::ostringstream os;
      os << "contour: anchor " << *fixed << " outside admissible strip (" << st.left << ", " << st.right << ")";
      throw NonSeparableError(os.str());
    }
    return *fixed;
  }
  const bool lf = std::isfinite(st.left), rf = std::isfinite(st.right);
  if (lf && rf) return st.left + position * (st.right - st.left);
  // Non-integer offsets keep denominator Gammas off their poles.
  if (rf) return st.right - 0.73;
  if (lf) return st.left + 0.73;
  return 0.27;
}

double scan_truncation(const std::function<double(double)>& log_mag, double tail_tol, double y_max) {
  const double drop = std::log(tail_tol);
  double prev = log_mag(0.0);
  double peak = prev;
  double y = 0.0;
  while (true) {
    y = (y == 0.0) ? 0.25 : y * 1.15 + 0.25;
    if (y > y_max)
      throw ConvergenceError("contour truncation: integrand does not decay below the tail tolerance",
                             std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity());
    const double cur = log_mag(y);
    peak = std::max(peak, cur);
    if ((cur < peak + drop && cur < prev) || cur == -std::numeric_limits<double>::infinity()) return y;
    prev = cur;
  }
}

void gauss_panels(double lo, double hi, int min_nodes, std::vector<double>* x, std::vector<double>* w) {
  using GL = boost::math::quadrature::gauss<double, 30>;
  const auto& ab = GL::abscissa();
  const auto& wt = GL::weights();
  const int panels = std::max(1, (min_nodes + 29) / 30);
  const double h = (hi - lo) / panels;
  x->clear();
  w->clear();
  x->reserve(panels * 30);
  w->reserve(panels * 30);
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * h;
    for (std::size_t k = 0; k < ab.size(); ++k) {
      x->push_back(mid - 0.5 * h * ab[k]);
      w->push_back(0.5 * h * wt[k]);
      x->push_back(mid + 0.5 * h * ab[k]);
      w->push_back(0.5 * h * wt[k]);
    }
  }
}

double decay_index(const FoxHSpec& s) { return 2.0 * s.delta(); }

}  // namespace detail

ContourPlan plan_contour(std::span<const FoxHSpec> terms, const EvalOptions& opts) {
  if (terms.empty()) throw DomainError("plan_contour: no terms");
  for (const auto& t : terms) {
    t.validate();
    if (!(detail::decay_index(t) > 0.0))
      throw ConvergenceError("plan_contour: integrand does not decay along the contour (delta <= 0)",
                             std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity());
  }
  const PoleStrip st = pole_strip(terms);
  const double c = detail::choose_anchor(st, opts.anchor_position, opts.anchor);
  auto log_mag = [&](double y) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms) best = std::max(best, log_mellin_kernel(t, cplx(c, y)).real());
    return best;
  };
  ContourPlan plan;
  plan.anchors = {c};
  plan.truncations = {std::max(1.0, detail::scan_truncation(log_mag, opts.tail_tol, 1e5))};
  plan.nodes = opts.initial_nodes;
  return plan;
}

ContourPlan plan_contour(const FoxHSpec& spec, double tail_tol) {
  EvalOptions o;
  o.tail_tol = tail_tol;
  return plan_contour(std::span<const FoxHSpec>(&spec, 1), o);
}

// ---------------------------------------------------------------------------

FoxHEvaluator::FoxHEvaluator(const FoxHSpec& spec, EvalOptions opts)
    : FoxHEvaluator(std::vector<FoxHSpec>{spec}, opts) {}

namespace {

double contour_truncation(std::span<const FoxHSpec> terms, double c, double tail_tol) {
  auto log_mag = [&](double y) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms) best = std::max(best, log_mellin_kernel(t, cplx(c, y)).real());
    return best;
  };
  return std::max(1.0, detail::scan_truncation(log_mag, tail_tol, 1e5));
}

// Extra anchors near either end of the strip. Offsets avoid integers so that
// shifted denominator Gammas stay off their poles.
std::vector<double> alternate_anchors(const PoleStrip& st) {
  const bool lf = std::isfinite(st.left), rf = std::isfinite(st.right);
  if (lf && rf) {
    const double g = st.right - st.left;
    std::vector<double> out{st.left + 0.1 * g, st.right - 0.1 * g};
    if (0.1 * g > 0.15) {
      out.push_back(st.left + 0.15);
      out.push_back(st.right - 0.15);
    }
    return out;
  }
  if (rf) return {st.right - 0.15, st.right - 4.71};
  if (lf) return {st.left + 0.15, st.left + 4.71};
  return {-4.71, 4.71};
}

}  // namespace

FoxHEvaluator::FoxHEvaluator(std::vector<FoxHSpec> terms, EvalOptions opts)
    : terms_(std::move(terms)), opts_(opts) {
  plan_ = plan_contour(terms_, opts_);
  offset_ = terms_.front().argument_power_offset;
  for (const auto& t : terms_)
    if (t.argument_power_offset != offset_)
      throw DomainError("FoxHEvaluator: all terms must share argument_power_offset");
  contours_.push_back({plan_.anchors[0], plan_.truncations[0]});
  if (!opts_.anchor) {
    for (double c : alternate_anchors(pole_strip(terms_))) {
      try {
        contours_.push_back({c, contour_truncation(terms_, c, opts_.tail_tol)});
      } catch (const std::exception&) {
        // a contour that cannot be planned is simply not offered
      }
    }
  }
  levels_per_contour_ = 2 + std::max(0, opts_.max_refinements);
  cache_ = std::make_shared<LevelCache>(contours_.size() * levels_per_contour_);
  for (std::size_t k = 0; k < contours_.size(); ++k) level(k, 0);
}

struct FoxHEvaluator::LevelCache {
  explicit LevelCache(std::size_t n) : flags(new std::once_flag[n]), levels(n) {}
  std::unique_ptr<std::once_flag[]> flags;
  std::vector<Level> levels;
};

const FoxHEvaluator::Level& FoxHEvaluator::level(std::size_t contour, int index) const {
  LevelCache& c = *cache_;
  const std::size_t slot = contour * levels_per_contour_ + index;
  std::call_once(c.flags[slot], [&] { c.levels[slot] = build_level(contour, opts_.initial_nodes << index); });
  return c.levels[slot];
}

FoxHEvaluator::Level FoxHEvaluator::build_level(std::size_t contour, int nodes) const {
  Level lv;
  std::vector<double> w;
  detail::gauss_panels(0.0, contours_[contour].truncation, nodes, &lv.y, &w);
  const double c = contours_[contour].anchor;
  const std::size_t nt = terms_.size();
  std::vector<cplx> logs(lv.y.size() * nt);
  double ref = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < lv.y.size(); ++j)
    for (std::size_t t = 0; t < nt; ++t) {
      const cplx L = log_mellin_kernel(terms_[t], cplx(c, lv.y[j]));
      logs[j * nt + t] = L;
      ref = std::max(ref, L.real());
    }
  if (!std::isfinite(ref)) ref = 0.0;
  lv.log_ref = ref;
  lv.weighted.resize(lv.y.size());
  for (std::size_t j = 0; j < lv.y.size(); ++j) {
    cplx acc = 0.0;
    for (std::size_t t = 0; t < nt; ++t) acc += std::exp(logs[j * nt + t] - ref);
    lv.weighted[j] = w[j] * acc;
    lv.abs_sum += std::abs(lv.weighted[j]);
  }
  return lv;
}

std::size_t FoxHEvaluator::pick_contour(double log_x) const {
  std::size_t best = 0;
  double best_log = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < contours_.size(); ++k) {
    const Level& lv = level(k, 0);
    if (!(lv.abs_sum > 0.0)) continue;
    const double lm = lv.log_ref + std::log(lv.abs_sum) + (contours_[k].anchor + offset_) * log_x;
    if (lm < best_log) {
      best_log = lm;
      best = k;
    }
  }
  return best;
}

void FoxHEvaluator::integrate(const Level& lv, double anchor, double log_x, double* value, double* magnitude) const {
  double s = 0.0;
  for (std::size_t j = 0; j < lv.y.size(); ++j) {
    const double ph = lv.y[j] * log_x;
    const cplx& W = lv.weighted[j];
    s += W.real() * std::cos(ph) - W.imag() * std::sin(ph);
  }
  const double pre = std::exp(lv.log_ref + (anchor + offset_) * log_x) / kPi;
  *value = pre * s;
  *magnitude = pre * lv.abs_sum;
}

EvalResult FoxHEvaluator::evaluate(double x) const {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("FoxHEvaluator: argument must be positive and finite");
  const double lx = std::log(x);
  const std::size_t k = pick_contour(lx);
  const double c = contours_[k].anchor;
  double v0, m0, v1, m1;
  integrate(level(k, 0), c, lx, &v0, &m0);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (int idx = 1;; ++idx) {
    integrate(level(k, idx), c, lx, &v1, &m1);
    const double diff = std::abs(v1 - v0);
    const double floor = 64.0 * eps * m1;
    const double tol = std::max({opts_.rel_tol * std::abs(v1), opts_.abs_tol, floor});
    if (diff <= tol) return {v1, std::max(diff, eps * m1), opts_.initial_nodes << idx};
    if (idx + 1 >= levels_per_contour_ || !std::isfinite(v1))
      throw ConvergenceError("FoxHEvaluator: quadrature did not converge", v1, diff);
    v0 = v1;
  }
}

EvalResult eval_fox_h_detailed(const FoxHSpec& spec, double x, const EvalOptions& opts) {
  return FoxHEvaluator(spec, opts).evaluate(x);
}

double eval_fox_h(const FoxHSpec& spec, double x, const EvalOptions& opts) {
  return eval_fox_h_detailed(spec, x, opts).value;
}

double eval_meijer_g(int m, int n, std::span<const double> a, std::span<const double> b, double x,
                     const EvalOptions& opts) {
  return eval_fox_h(meijer_g_spec(m, n, a, b), x, opts);
}

double ScaledValue::value() const {
  if (sign == 0) return 0.0;
  return sign * std::exp(log_magnitude);
}

}  // namespace fso
