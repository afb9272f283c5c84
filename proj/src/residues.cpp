// Leading small-argument terms of H functions from the residues at the right poles.
// Simple poles use the Gamma-only closed form; higher-order poles (repeated fog
// factors, coincident parameters) use Laurent coefficients taken on a small circle.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fso/errors.hpp"
#include "fso/specfun.hpp"
#include "internal.hpp"

namespace fso {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool nonpositive_integer(double v) {
  const double r = std::round(v);
  return r <= 0.0 && std::abs(v - r) <= 1e-9 * std::max(1.0, std::abs(v));
}

struct PoleInfo {
  int order = 0;
  int sources = 0;
  const GammaFactor* single = nullptr;  // the contributing factor when there is exactly one
};

PoleInfo pole_info(const FoxHSpec& t, double P) {
  PoleInfo pi;
  for (const auto& f : t.numerator_lower)
    if (nonpositive_integer(f.coefficient - f.scale * P)) {
      pi.order += f.multiplicity;
      ++pi.sources;
      pi.single = &f;
    }
  for (const auto& f : t.numerator_upper)
    if (nonpositive_integer(1.0 - f.coefficient + f.scale * P)) {
      pi.order += f.multiplicity;
      ++pi.sources;
      pi.single = nullptr;
    }
  for (const auto& f : t.denominator_lower)
    if (nonpositive_integer(1.0 - f.coefficient + f.scale * P)) pi.order -= f.multiplicity;
  for (const auto& f : t.denominator_upper)
    if (nonpositive_integer(f.coefficient - f.scale * P)) pi.order -= f.multiplicity;
  if (pi.sources != 1) pi.single = nullptr;
  return pi;
}

// Distance from P to the nearest other pole of any numerator factor of the given terms.
double isolation(std::span<const FoxHSpec> terms, double P) {
  double best = std::numeric_limits<double>::infinity();
  auto visit = [&](double c, double d) {
    // poles where c + d s = -k, k >= 0
    const double kstar = -c - d * P;
    for (double k : {std::floor(kstar) - 1, std::floor(kstar), std::ceil(kstar), std::ceil(kstar) + 1}) {
      if (k < 0) continue;
      const double s = (-k - c) / d;
      const double dist = std::abs(s - P);
      if (dist > 1e-9 * std::max(1.0, std::abs(P))) best = std::min(best, dist);
    }
  };
  for (const auto& t : terms) {
    for (const auto& f : t.numerator_lower) visit(f.coefficient, -f.scale);
    for (const auto& f : t.numerator_upper) visit(1.0 - f.coefficient, f.scale);
  }
  return best;
}

double radius_for(double isolation_distance) {
  return std::min(0.5, 0.45 * isolation_distance);
}

// Laurent coefficients g_{-1}, ..., g_{-K} (index j holds g_{-1-j}) of a function
// given by its logarithm, scaled by exp(-log_scale).
struct Laurent {
  std::vector<cplx> neg;
  double log_scale = 0.0;
};

template <class LogF>
Laurent laurent_negative(LogF&& logf, double P, int K, double r, int M) {
  std::vector<cplx> vals(M);
  double ref = kNegInf;
  for (int k = 0; k < M; ++k) {
    const cplx e = std::polar(r, 2.0 * kPi * (k + 0.5) / M);
    vals[k] = logf(P + e);
    ref = std::max(ref, vals[k].real());
  }
  Laurent L;
  L.log_scale = ref;
  L.neg.assign(K, 0.0);
  for (int k = 0; k < M; ++k) {
    const cplx e = std::polar(r, 2.0 * kPi * (k + 0.5) / M);
    const cplx f = std::exp(vals[k] - ref);
    cplx pw = e;  // e^{1+j} multiplies g_{-1-j}
    for (int j = 0; j < K; ++j) {
      L.neg[j] += f * pw;
      pw *= e;
    }
  }
  for (auto& g : L.neg) g /= double(M);
  return L;
}

// Taylor coefficients o_0..o_K of a function given by its logarithm.
template <class LogF>
Laurent taylor(LogF&& logf, double S0, int K, double r, int M) {
  std::vector<cplx> vals(M);
  double ref = kNegInf;
  for (int k = 0; k < M; ++k) {
    vals[k] = logf(S0 + std::polar(r, 2.0 * kPi * (k + 0.5) / M));
    ref = std::max(ref, vals[k].real());
  }
  Laurent L;
  L.log_scale = ref;
  L.neg.assign(K + 1, 0.0);
  for (int k = 0; k < M; ++k) {
    const cplx e = std::polar(r, 2.0 * kPi * (k + 0.5) / M);
    const cplx f = std::exp(vals[k] - ref);
    cplx pw = 1.0;
    for (int n = 0; n <= K; ++n) {
      L.neg[n] += f / pw;
      pw *= e;
    }
  }
  for (auto& g : L.neg) g /= double(M);
  return L;
}

struct Accumulator {
  double ref = kNegInf;
  std::vector<std::pair<double, double>> parts;  // (log|v|, sign)
  void add(double log_mag, double sign) {
    if (sign == 0.0 || !std::isfinite(log_mag)) return;
    parts.emplace_back(log_mag, sign);
    ref = std::max(ref, log_mag);
  }
  ScaledValue result() const {
    if (parts.empty()) return {};
    double s = 0.0;
    for (const auto& [l, sg] : parts) s += sg * std::exp(l - ref);
    if (s == 0.0) return {};
    return {ref + std::log(std::abs(s)), s > 0 ? 1 : -1};
  }
};

// Sum_m g_{-1-m} L^m / m!  (the residue of g(s) z^s at P divided by z^P).
cplx principal_sum(const std::vector<cplx>& neg, double lnz, int shift = 0) {
  cplx acc = 0.0;
  double term = 1.0;
  for (std::size_t m = 0; m + shift < neg.size(); ++m) {
    acc += neg[m + shift] * term;
    term *= lnz / double(m + 1);
  }
  return acc;
}

// Closed-form residue of one term at a simple pole from the single factor Gamma(b - B s).
// Returns log|rest| and its sign, already including (-1)^k / (k! B) and the leading factor.
std::pair<double, double> simple_pole_closed_form(const FoxHSpec& t, const GammaFactor& pole_factor, double P) {
  double logv = std::log(std::abs(t.leading_coefficient)) + t.leading_log_scale + P * std::log(t.argument_scale);
  double sign = t.leading_coefficient < 0 ? -1.0 : 1.0;
  const double k = std::round(pole_factor.scale * P - pole_factor.coefficient);
  logv -= std::lgamma(k + 1.0) + std::log(pole_factor.scale);
  if (static_cast<long long>(k) % 2) sign = -sign;
  auto mul = [&](double arg, int power) {
    int sg = 1;
    const double lg = log_gamma_real(arg, &sg);
    logv += power * lg;
    if (sg < 0 && (power % 2)) sign = -sign;
  };
  for (const auto& f : t.numerator_lower)
    if (&f != &pole_factor) mul(f.coefficient - f.scale * P, f.multiplicity);
  for (const auto& f : t.numerator_upper) mul(1.0 - f.coefficient + f.scale * P, f.multiplicity);
  for (const auto& f : t.denominator_lower) mul(1.0 - f.coefficient + f.scale * P, -f.multiplicity);
  for (const auto& f : t.denominator_upper) mul(f.coefficient - f.scale * P, -f.multiplicity);
  return {logv, sign};
}

std::string tie_message(double P) {
  std::ostringstream os;
  os << "dominant pole at " << P << " is shared by distinct parameters; the simple-pole residue does not apply"
     << " (enable tie resolution for the higher-order residue)";
  return os.str();
}

}  // namespace

double dominant_pole(std::span<const FoxHSpec> terms) { return pole_strip(terms).right; }

ScaledValue fox_h_small_argument(std::span<const FoxHSpec> terms, double x, const ResidueOptions& opts) {
  if (!(x > 0.0)) throw DomainError("fox_h_small_argument: argument must be positive");
  const double lnx = std::log(x);
  const double Pstar = dominant_pole(terms);
  if (!std::isfinite(Pstar)) throw DomainError("fox_h_small_argument: no right poles");
  Accumulator acc;
  for (const auto& t : terms) {
    std::vector<double> cands;
    if (opts.every_family) {
      for (const auto& f : t.numerator_lower) cands.push_back(f.coefficient / f.scale);
    } else {
      cands.push_back(Pstar);
    }
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }),
                cands.end());
    for (double P : cands) {
      const PoleInfo info = pole_info(t, P);
      if (info.order <= 0) continue;
      const bool dominant = std::abs(P - Pstar) <= 1e-9 * std::max(1.0, std::abs(P));
      if (dominant && info.sources >= 2 && !opts.resolve_ties) throw DegeneratePoleError(tie_message(P), P);
      if (info.order == 1 && info.single && info.single->multiplicity == 1) {
        const auto [lv, sg] = simple_pole_closed_form(t, *info.single, P);
        acc.add(lv + P * lnx, sg);
      } else {
        const double r = radius_for(isolation(std::span<const FoxHSpec>(&t, 1), P));
        const Laurent L = laurent_negative([&](cplx s) { return log_mellin_kernel(t, s); }, P, info.order, r,
                                           opts.circle_points);
        const double v = -principal_sum(L.neg, lnx).real();
        acc.add(L.log_scale + std::log(std::abs(v)) + P * lnx, v > 0 ? 1.0 : -1.0);
      }
    }
  }
  ScaledValue out = acc.result();
  out.log_magnitude += terms.front().argument_power_offset * lnx;
  return out;
}

ScaledValue fox_h_multi_small_argument(const FoxHMultiSpec& spec, std::span<const double> multipliers,
                                       const ResidueOptions& opts) {
  spec.validate();
  const std::size_t N = spec.dimension();
  if (multipliers.size() != N) throw DomainError("fox_h_multi_small_argument: multiplier count differs from N");
  // The outer factors must depend on the variables only through their sum.
  std::vector<double> outer_d;
  auto collect = [&](const std::vector<JointGammaFactor>& fs) {
    for (const auto& f : fs) {
      for (double d : f.scales)
        if (std::abs(d - f.scales[0]) > 1e-12 * std::max(1.0, std::abs(d)))
          throw UnsupportedModeError("fox_h_multi_small_argument: outer factors must be symmetric in the variables");
      outer_d.push_back(f.scales[0]);
    }
  };
  collect(spec.outer_numerator);
  collect(spec.outer_denominator);

  // Per-variable principal parts, encoded as polynomials Q_i(t) = sum_n R_i(n) t^n / n!.
  double poly_log = 0.0;
  std::vector<double> poly{1.0};
  double S0 = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const auto& terms = spec.per_variable[i];
    const double P = dominant_pole(terms);
    S0 += P;
    int K = 0;
    for (const auto& t : terms) {
      const PoleInfo info = pole_info(t, P);
      if (info.sources >= 2 && !opts.resolve_ties) throw DegeneratePoleError(tie_message(P), P);
      K = std::max(K, info.order);
    }
    if (K <= 0) throw DomainError("fox_h_multi_small_argument: dominant pole cancels");
    const double lnz = std::log(multipliers[i]);
    std::vector<double> q(K);
    double qlog;
    if (K == 1) {
      Accumulator a;
      for (const auto& t : terms) {
        const PoleInfo info = pole_info(t, P);
        if (info.order <= 0) continue;
        if (info.single && info.single->multiplicity == 1) {
          const auto [lv, sg] = simple_pole_closed_form(t, *info.single, P);
          a.add(lv, sg);
        } else {
          const double r = radius_for(isolation(std::span<const FoxHSpec>(&t, 1), P));
          const Laurent L = laurent_negative([&](cplx s) { return log_mellin_kernel(t, s); }, P, 1, r,
                                             opts.circle_points);
          const double v = -L.neg[0].real();
          a.add(L.log_scale + std::log(std::abs(v)), v > 0 ? 1.0 : -1.0);
        }
      }
      const ScaledValue sv = a.result();
      // closed form already carries the minus sign of a clockwise residue; undo it, (-1)^N is applied below
      q[0] = -double(sv.sign);
      qlog = sv.log_magnitude + P * lnz;
    } else {
      const double r = radius_for(isolation(terms, P));
      auto logf = [&](cplx s) {
        std::vector<cplx> v;
        for (const auto& t : terms) v.push_back(log_mellin_kernel(t, s));
        double ref = kNegInf;
        for (const auto& x : v) ref = std::max(ref, x.real());
        cplx acc = 0.0;
        for (const auto& x : v) acc += std::exp(x - ref);
        return std::log(acc) + ref;
      };
      const Laurent L = laurent_negative(logf, P, K, r, opts.circle_points);
      double fact = 1.0;
      double mx = 0.0;
      for (int n = 0; n < K; ++n) {
        if (n > 0) fact *= n;
        q[n] = principal_sum(L.neg, lnz, n).real() / fact;
        mx = std::max(mx, std::abs(q[n]));
      }
      for (auto& v : q) v /= mx;
      qlog = L.log_scale + std::log(mx) + P * lnz;
    }
    std::vector<double> prod(poly.size() + q.size() - 1, 0.0);
    for (std::size_t a = 0; a < poly.size(); ++a)
      for (std::size_t b = 0; b < q.size(); ++b) prod[a + b] += poly[a] * q[b];
    double mx = 0.0;
    for (double v : prod) mx = std::max(mx, std::abs(v));
    for (auto& v : prod) v /= mx;
    poly = std::move(prod);
    poly_log += qlog + std::log(mx);
  }

  const int deg = static_cast<int>(poly.size()) - 1;
  auto outer_log = [&](cplx S) {
    cplx acc = 0.0;
    for (const auto& f : spec.outer_numerator)
      acc += double(f.multiplicity) * log_gamma_complex(f.coefficient + f.scales[0] * S);
    for (const auto& f : spec.outer_denominator)
      acc -= double(f.multiplicity) * log_gamma_complex(f.coefficient + f.scales[0] * S);
    return acc;
  };
  // radius avoiding poles of the outer numerators
  double iso = std::numeric_limits<double>::infinity();
  for (const auto& f : spec.outer_numerator) {
    const double d = f.scales[0];
    if (d == 0.0) continue;
    const double kstar = -f.coefficient - d * S0;
    for (double k : {std::floor(kstar), std::ceil(kstar)}) {
      if (k < 0) continue;
      iso = std::min(iso, std::abs((-k - f.coefficient) / d - S0));
    }
  }
  const Laurent O = taylor(outer_log, S0, deg, radius_for(iso), opts.circle_points);
  double total = 0.0;
  double fact = 1.0;
  for (int n = 0; n <= deg; ++n) {
    if (n > 0) fact *= n;
    total += O.neg[n].real() * fact * poly[n];
  }
  if (N % 2) total = -total;
  if (spec.leading_coefficient < 0) total = -total;
  if (total == 0.0) return {};
  ScaledValue out;
  out.sign = total > 0 ? 1 : -1;
  out.log_magnitude = std::log(std::abs(total)) + O.log_scale + poly_log + spec.leading_log_scale +
                      std::log(std::abs(spec.leading_coefficient));
  return out;
}

}  // namespace fso
