#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include "fso/errors.hpp"
#include "fso/specfun.hpp"
#include "internal.hpp"

namespace fso {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

cplx log_sum_exp(const std::vector<cplx>& v) {
  double ref = kNegInf;
  for (const auto& x : v) ref = std::max(ref, x.real());
  if (!std::isfinite(ref)) return cplx(kNegInf, 0.0);
  cplx acc = 0.0;
  for (const auto& x : v) acc += std::exp(x - ref);
  return std::log(acc) + ref;
}

// Convert Gamma(c + d s) with a single variable into the one-variable H lists.
void append_outer(FoxHSpec* t, const JointGammaFactor& f, bool numerator) {
  const double c = f.coefficient, d = f.scales.at(0);
  if (d == 0.0) {
    int sg = 1;
    const double lg = log_gamma_real(c, &sg);
    t->leading_log_scale += (numerator ? 1.0 : -1.0) * f.multiplicity * lg;
    if (sg < 0 && (f.multiplicity % 2)) t->leading_coefficient = -t->leading_coefficient;
    return;
  }
  if (numerator) {
    if (d < 0.0) throw UnsupportedModeError("multivariate H: right-pole outer numerator factors are not supported");
    t->numerator_upper.push_back({1.0 - c, d, f.multiplicity});
  } else if (d > 0.0) {
    t->denominator_lower.push_back({1.0 - c, d, f.multiplicity});
  } else {
    t->denominator_upper.push_back({c, -d, f.multiplicity});
  }
}

// SplitMix64 finalizer, used to derive independent seeds.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void FoxHMultiSpec::validate() const {
  if (per_variable.empty()) throw DomainError("FoxHMultiSpec: at least one contour variable is required");
  const std::size_t n = per_variable.size();
  for (const auto& v : per_variable) {
    if (v.empty()) throw DomainError("FoxHMultiSpec: every variable needs at least one term");
    for (const auto& t : v) t.validate();
  }
  auto check = [&](const std::vector<JointGammaFactor>& fs) {
    for (const auto& f : fs) {
      if (f.scales.size() != n) throw DomainError("FoxHMultiSpec: joint factor scale count differs from N");
      if (f.multiplicity < 1) throw DomainError("FoxHMultiSpec: joint factor multiplicity must be >= 1");
    }
  };
  check(outer_numerator);
  check(outer_denominator);
}

struct FoxHMultiEvaluator::Impl {
  FoxHMultiSpec spec;
  MultiEvalOptions opts;
  ContourPlan plan;
  std::size_t dim = 0;
  cplx lead_log;

  std::unique_ptr<FoxHEvaluator> one;

  struct Level {
    std::vector<double> y1, y2;
    std::vector<cplx> m;  // n1 x n2, row major
    double log_ref = 0.0;
    double abs_sum = 0.0;
  };
  // Level k has initial_nodes << k nodes on the first axis; built once on demand.
  mutable std::vector<Level> levels;
  mutable std::unique_ptr<std::once_flag[]> level_flags;

  const Level& level(int k) const {
    std::call_once(level_flags[k], [&] { levels[k] = build_level(opts.initial_nodes << k); });
    return levels[k];
  }

  // lattice data for N >= 3
  int lattice_n = 0;
  std::vector<long long> generator;
  struct Shift {
    std::vector<std::vector<double>> y;    // [var][j]
    std::vector<std::vector<cplx>> blk;    // [var][j] log block
    std::vector<cplx> outer;               // [k] log outer
  };
  std::vector<Shift> shifts;
  double lattice_ref = 0.0;

  cplx block_log(std::size_t i, cplx s) const {
    std::vector<cplx> v;
    v.reserve(spec.per_variable[i].size());
    for (const auto& t : spec.per_variable[i]) v.push_back(log_mellin_kernel(t, s));
    return log_sum_exp(v);
  }

  cplx outer_log(std::span<const cplx> s) const {
    cplx acc = 0.0;
    for (const auto& f : spec.outer_numerator) {
      cplx a = f.coefficient;
      for (std::size_t i = 0; i < dim; ++i) a += f.scales[i] * s[i];
      acc += double(f.multiplicity) * log_gamma_complex(a);
    }
    for (const auto& f : spec.outer_denominator) {
      cplx a = f.coefficient;
      for (std::size_t i = 0; i < dim; ++i) a += f.scales[i] * s[i];
      acc -= double(f.multiplicity) * log_gamma_complex(a);
    }
    return acc;
  }

  void plan_multi() {
    plan.anchors.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      for (const auto& t : spec.per_variable[i])
        if (!(detail::decay_index(t) > 0.0))
          throw ConvergenceError("multivariate H: variable block does not decay on its contour",
                                 std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity());
      plan.anchors[i] = detail::choose_anchor(pole_strip(spec.per_variable[i]), 0.5, std::nullopt);
    }
    for (const auto& f : spec.outer_numerator) {
      double re = f.coefficient;
      for (std::size_t i = 0; i < dim; ++i) {
        if (f.scales[i] < 0.0)
          throw UnsupportedModeError("multivariate H: outer numerator with negative scale");
        re += f.scales[i] * plan.anchors[i];
      }
      if (!(re > 0.0)) {
        std::ostringstream os;
        os << "multivariate H: outer numerator argument has real part " << re << " on the contour";
        throw NonSeparableError(os.str());
      }
    }
    plan.truncations.resize(dim);
    std::vector<cplx> s(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      auto log_mag = [&](double y) {
        for (std::size_t k = 0; k < dim; ++k) s[k] = cplx(plan.anchors[k], k == i ? y : 0.0);
        return (block_log(i, s[i]) + outer_log(s)).real();
      };
      plan.truncations[i] = std::max(1.0, detail::scan_truncation(log_mag, opts.tail_tol, 1e4));
    }
  }

  // Widen truncations until the integrand on the box faces is below tolerance (N = 2).
  void check_faces() {
    const double drop = std::log(opts.tail_tol) + std::log(1e3);
    for (int iter = 0; iter < 8; ++iter) {
      const double c1 = plan.anchors[0], c2 = plan.anchors[1];
      double T1 = plan.truncations[0], T2 = plan.truncations[1];
      auto f = [&](double y1, double y2) {
        const cplx s[2] = {cplx(c1, y1), cplx(c2, y2)};
        return (block_log(0, s[0]) + block_log(1, s[1]) + outer_log(s)).real();
      };
      double peak = kNegInf, face1 = kNegInf, face2 = kNegInf;
      const int g = 24;
      for (int a = 0; a <= g; ++a)
        for (int b = -g; b <= g; ++b) peak = std::max(peak, f(T1 * a / g, T2 * b / g));
      for (int b = -g; b <= g; ++b) face1 = std::max(face1, f(T1, T2 * b / g));
      for (int a = 0; a <= g; ++a) face2 = std::max({face2, f(T1 * a / g, T2), f(T1 * a / g, -T2)});
      bool ok = true;
      if (face1 > peak + drop) { plan.truncations[0] *= 1.3; ok = false; }
      if (face2 > peak + drop) { plan.truncations[1] *= 1.3; ok = false; }
      if (ok) return;
    }
    throw ConvergenceError("multivariate H: integrand does not decay on the truncation box",
                           std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity());
  }

  Level build_level(int n1) const {
    Level lv;
    std::vector<double> w1, w2;
    detail::gauss_panels(0.0, plan.truncations[0], n1, &lv.y1, &w1);
    detail::gauss_panels(-plan.truncations[1], plan.truncations[1], 2 * n1, &lv.y2, &w2);
    const std::size_t a = lv.y1.size(), b = lv.y2.size();
    const double c1 = plan.anchors[0], c2 = plan.anchors[1];
    std::vector<cplx> b1(a), b2(b);
    for (std::size_t i = 0; i < a; ++i) b1[i] = block_log(0, cplx(c1, lv.y1[i]));
    for (std::size_t j = 0; j < b; ++j) b2[j] = block_log(1, cplx(c2, lv.y2[j]));
    lv.m.resize(a * b);
    double ref = kNegInf;
    for (std::size_t i = 0; i < a; ++i)
      for (std::size_t j = 0; j < b; ++j) {
        const cplx s[2] = {cplx(c1, lv.y1[i]), cplx(c2, lv.y2[j])};
        const cplx L = b1[i] + b2[j] + outer_log(s);
        lv.m[i * b + j] = L;
        ref = std::max(ref, L.real());
      }
    lv.log_ref = ref;
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < a; ++i)
      for (std::size_t j = 0; j < b; ++j) {
        cplx& v = lv.m[i * b + j];
        v = w1[i] * w2[j] * std::exp(v - ref);
        abs_sum += std::abs(v);
      }
    lv.abs_sum = abs_sum;
    return lv;
  }

  void integrate(const Level& lv, double lz1, double lz2, double* value, double* magnitude) const {
    const std::size_t a = lv.y1.size(), b = lv.y2.size();
    std::vector<cplx> q(b);
    for (std::size_t j = 0; j < b; ++j) q[j] = std::polar(1.0, lv.y2[j] * lz2);
    cplx acc = 0.0;
    for (std::size_t i = 0; i < a; ++i) {
      cplx row = 0.0;
      const cplx* mi = &lv.m[i * b];
      for (std::size_t j = 0; j < b; ++j) row += mi[j] * q[j];
      acc += row * std::polar(1.0, lv.y1[i] * lz1);
    }
    const double pre = std::exp(lv.log_ref + lead_log.real() + plan.anchors[0] * lz1 + plan.anchors[1] * lz2) /
                       (2.0 * kPi * kPi);
    const double sg = lead_log.imag() != 0.0 ? -1.0 : 1.0;
    *value = sg * pre * acc.real();
    *magnitude = pre * lv.abs_sum;
  }

  // Rank-1 Korobov generator chosen by a small search on the P2 criterion.
  void build_lattice() {
    lattice_n = opts.lattice_points;
    const long long n = lattice_n;
    std::mt19937_64 rng(mix64(opts.seed ^ 0x1a77ce));
    std::uniform_int_distribution<long long> pick(2, n - 2);
    double best = std::numeric_limits<double>::infinity();
    std::vector<long long> best_g;
    for (int trial = 0; trial < 48; ++trial) {
      const long long a = pick(rng);
      std::vector<long long> g(dim);
      g[0] = 1;
      for (std::size_t i = 1; i < dim; ++i) g[i] = (g[i - 1] * a) % n;
      double crit = 0.0;
      for (long long k = 0; k < n; ++k) {
        double prod = 1.0;
        for (std::size_t i = 0; i < dim; ++i) {
          const double x = double((k * g[i]) % n) / double(n);
          prod *= 1.0 + 2.0 * kPi * kPi * (x * x - x + 1.0 / 6.0);
        }
        crit += prod;
      }
      crit = crit / double(n) - 1.0;
      if (crit < best) {
        best = crit;
        best_g = g;
      }
    }
    generator = best_g;

    shifts.resize(opts.random_shifts);
    lattice_ref = kNegInf;
    for (int r = 0; r < opts.random_shifts; ++r) {
      std::mt19937_64 srng(mix64(opts.seed + 0x100 + static_cast<std::uint64_t>(r)));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      Shift& sh = shifts[r];
      sh.y.assign(dim, std::vector<double>(n));
      sh.blk.assign(dim, std::vector<cplx>(n));
      for (std::size_t i = 0; i < dim; ++i) {
        const double delta = u(srng);
        const double T = plan.truncations[i];
        for (long long j = 0; j < n; ++j) {
          double x = double(j) / double(n) + delta;
          x -= std::floor(x);
          sh.y[i][j] = T * (2.0 * x - 1.0);
          sh.blk[i][j] = block_log(i, cplx(plan.anchors[i], sh.y[i][j]));
        }
      }
      sh.outer.resize(n);
      std::vector<long long> idx(dim, 0);
      std::vector<cplx> s(dim);
      for (long long k = 0; k < n; ++k) {
        double re = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
          s[i] = cplx(plan.anchors[i], sh.y[i][idx[i]]);
          re += sh.blk[i][idx[i]].real();
        }
        sh.outer[k] = outer_log(s);
        lattice_ref = std::max(lattice_ref, re + sh.outer[k].real());
        for (std::size_t i = 0; i < dim; ++i) idx[i] = (idx[i] + generator[i]) % n;
      }
    }
  }

  MultiEvalResult evaluate_lattice(std::span<const double> lz) const {
    const long long n = lattice_n;
    double vol = 1.0;
    double anchor_term = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      vol *= 2.0 * plan.truncations[i] / (2.0 * kPi);
      anchor_term += plan.anchors[i] * lz[i];
    }
    const double pre = std::exp(lattice_ref + lead_log.real() + anchor_term) * vol / double(n);
    const double sg = lead_log.imag() != 0.0 ? -1.0 : 1.0;
    std::vector<double> est;
    for (const auto& sh : shifts) {
      std::vector<long long> idx(dim, 0);
      double acc = 0.0;
      for (long long k = 0; k < n; ++k) {
        cplx L = sh.outer[k] - lattice_ref;
        for (std::size_t i = 0; i < dim; ++i) {
          L += sh.blk[i][idx[i]];
          L += cplx(0.0, sh.y[i][idx[i]] * lz[i]);
        }
        acc += std::exp(L).real();
        for (std::size_t i = 0; i < dim; ++i) idx[i] = (idx[i] + generator[i]) % n;
      }
      est.push_back(sg * pre * acc);
    }
    double mean = 0.0;
    for (double e : est) mean += e;
    mean /= est.size();
    double var = 0.0;
    for (double e : est) var += (e - mean) * (e - mean);
    var /= (est.size() - 1.0) * est.size();
    MultiEvalResult r;
    r.value = mean;
    r.std_error = std::sqrt(var);
    r.error_estimate = 3.0 * r.std_error;
    r.randomized = true;
    return r;
  }
};

FoxHMultiEvaluator::FoxHMultiEvaluator(FoxHMultiSpec spec, MultiEvalOptions opts)
    : impl_(std::make_unique<Impl>()) {
  spec.validate();
  Impl& im = *impl_;
  im.spec = std::move(spec);
  im.opts = opts;
  im.dim = im.spec.dimension();
  im.lead_log = detail::log_lead(im.spec.leading_coefficient, im.spec.leading_log_scale);

  if (im.dim == 1) {
    std::vector<FoxHSpec> terms = im.spec.per_variable[0];
    for (auto& t : terms) {
      for (const auto& f : im.spec.outer_numerator) append_outer(&t, f, true);
      for (const auto& f : im.spec.outer_denominator) append_outer(&t, f, false);
      t.leading_coefficient *= im.spec.leading_coefficient;
      t.leading_log_scale += im.spec.leading_log_scale;
    }
    EvalOptions eo;
    eo.rel_tol = opts.rel_tol;
    eo.abs_tol = opts.abs_tol;
    eo.tail_tol = std::min(opts.tail_tol, 1e-16);
    eo.max_refinements = 4;
    im.one = std::make_unique<FoxHEvaluator>(std::move(terms), eo);
    im.plan = im.one->plan();
    return;
  }
  if (im.dim >= 3 && opts.deterministic)
    throw UnsupportedModeError("multivariate H: N >= 3 is only available as a randomized estimate");

  im.plan_multi();
  if (im.dim == 2) {
    im.check_faces();
    im.plan.nodes = opts.initial_nodes;
    const int n_levels = 2 + std::max(0, opts.max_refinements);
    im.levels.resize(n_levels);
    im.level_flags.reset(new std::once_flag[n_levels]);
    im.level(0);
    im.level(1);
  } else {
    im.plan.nodes = opts.lattice_points;
    im.build_lattice();
  }
}

FoxHMultiEvaluator::~FoxHMultiEvaluator() = default;
FoxHMultiEvaluator::FoxHMultiEvaluator(FoxHMultiEvaluator&&) noexcept = default;
FoxHMultiEvaluator& FoxHMultiEvaluator::operator=(FoxHMultiEvaluator&&) noexcept = default;

const ContourPlan& FoxHMultiEvaluator::plan() const { return impl_->plan; }
const FoxHMultiSpec& FoxHMultiEvaluator::spec() const { return impl_->spec; }

MultiEvalResult FoxHMultiEvaluator::evaluate() const {
  std::vector<double> ones(impl_->dim, 1.0);
  return evaluate(ones);
}

MultiEvalResult FoxHMultiEvaluator::evaluate(std::span<const double> multipliers) const {
  const Impl& im = *impl_;
  if (multipliers.size() != im.dim) throw DomainError("multivariate H: multiplier count differs from N");
  std::vector<double> lz(im.dim);
  for (std::size_t i = 0; i < im.dim; ++i) {
    if (!(multipliers[i] > 0.0)) throw DomainError("multivariate H: multipliers must be positive");
    lz[i] = std::log(multipliers[i]);
  }
  if (im.one) {
    const EvalResult r = im.one->evaluate(multipliers[0]);
    return {r.value, r.error_estimate, 0.0, false};
  }
  if (im.dim >= 3) return im.evaluate_lattice(lz);

  double v0, m0, v1, m1;
  im.integrate(im.level(0), lz[0], lz[1], &v0, &m0);
  im.integrate(im.level(1), lz[0], lz[1], &v1, &m1);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (int r = 0;; ++r) {
    const double diff = std::abs(v1 - v0);
    const double tol = std::max({im.opts.rel_tol * std::abs(v1), im.opts.abs_tol, 256.0 * eps * m1});
    if (diff <= tol) return {v1, std::max(diff, eps * m1), 0.0, false};
    if (r >= im.opts.max_refinements || !std::isfinite(v1))
      throw ConvergenceError("multivariate H: tensor quadrature did not converge", v1, diff);
    v0 = v1;
    im.integrate(im.level(r + 2), lz[0], lz[1], &v1, &m1);
  }
}

MultiEvalResult eval_fox_h_multi(const FoxHMultiSpec& spec, const MultiEvalOptions& opts) {
  return FoxHMultiEvaluator(spec, opts).evaluate();
}

}  // namespace fso
