#include "fso/channels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "fso/errors.hpp"

namespace fso {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double lg(double x) { return std::lgamma(x); }

}  // namespace

// ---------------------------------------------------------------------------

MalagaDerived derive_malaga(const Malaga& p) {
  if (p.beta < 1) throw DomainError("Malaga: beta must be an integer >= 1");
  if (!(p.alpha > 0.0) || !(p.b0 > 0.0) || p.omega < 0.0 || p.rho_coupling < 0.0 || p.rho_coupling > 1.0)
    throw DomainError("Malaga: parameters out of range");
  MalagaDerived d;
  const double al = p.alpha, be = p.beta;
  d.g = 2.0 * p.b0 * (1.0 - p.rho_coupling);
  d.omega_prime = p.omega + 2.0 * p.b0 * p.rho_coupling +
                  2.0 * std::sqrt(2.0 * p.b0 * p.rho_coupling * p.omega) * std::cos(p.phase_diff);
  if (!(d.g > 0.0)) throw DomainError("Malaga: rho_coupling = 1 leaves no independent scatter (g = 0)");
  const double gbo = d.g * be + d.omega_prime;
  d.A_mg = 2.0 * std::pow(al, al / 2.0) / (std::pow(d.g, 1.0 + al / 2.0) * std::tgamma(al)) *
           std::pow(d.g * be / gbo, be + al / 2.0);
  double wsum = 0.0;
  for (int m = 1; m <= p.beta; ++m) {
    const double am = boost::math::binomial_coefficient<double>(p.beta - 1, m - 1) *
                      std::pow(gbo, 1.0 - m / 2.0) / std::tgamma(double(m)) *
                      std::pow(d.omega_prime / d.g, m - 1.0) * std::pow(al / be, m / 2.0);
    const double bm = am * std::pow(al * be / gbo, -(al + m) / 2.0);
    const double wm = d.A_mg / 2.0 * bm * std::tgamma(al) * std::tgamma(double(m));
    d.a.push_back(am);
    d.b.push_back(bm);
    d.weights.push_back(wm);
    wsum += wm;
  }
  if (std::abs(wsum - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "Malaga: mixture weights sum to " << wsum << " instead of 1";
    throw DomainError(os.str());
  }
  d.mean_scale = gbo / be;
  return d;
}

PointingParams derive_pointing(const PointingGeometry& g) {
  if (!(g.beam_width > 0.0)) throw DomainError("pointing: beam width must be positive");
  if (!(g.aperture_radius > 0.0)) throw DomainError("pointing: aperture radius must be positive");
  PointingParams p;
  p.upsilon = std::sqrt(std::numbers::pi / 2.0) * g.aperture_radius / g.beam_width;
  const double e = boost::math::erf(p.upsilon);
  p.A0 = e * e;
  p.w_zeq_sq = g.beam_width * g.beam_width * std::sqrt(std::numbers::pi) * e /
               (2.0 * p.upsilon * std::exp(-p.upsilon * p.upsilon));
  p.xi = std::visit(overloaded{
                        [](const DirectJitter& j) {
                          if (!(j.sigma_s > 0.0)) throw DomainError("pointing: sigma_s must be positive");
                          return 4.0 * j.sigma_s * j.sigma_s;
                        },
                        [](const RisJitter& j) {
                          if (!(j.sigma_theta > 0.0) || !(j.sigma_beta > 0.0))
                            throw DomainError("pointing: RIS jitter variances must be positive");
                          const double d = 1e3 * j.d_km, d2 = 1e3 * j.d2_km;
                          return 4.0 * j.sigma_theta * j.sigma_theta * d * d +
                                 16.0 * j.sigma_beta * j.sigma_beta * d2 * d2;
                        }},
                    g.jitter);
  p.rho_sq = g.rho_sq_override ? *g.rho_sq_override : p.w_zeq_sq / p.xi;
  if (!(p.rho_sq > 0.0)) throw DomainError("pointing: rho^2 must be positive");
  return p;
}

double DeterministicFog::gain() const { return std::exp(-tau_per_km * d_km); }

double beer_lambert_tau(double V, double lambda_nm) {
  if (!(V > 0.0)) throw DomainError("visibility must be positive");
  double q;
  if (V > 50.0) q = 1.6;
  else if (V > 6.0) q = 1.3;
  else if (V > 1.0) q = 0.16 * V + 0.34;
  else if (V > 0.5) q = V - 0.5;
  else q = 0.0;
  return 3.19 / V * std::pow(lambda_nm / 550.0, -q);
}

void validate_fog(const FogParams& f) {
  std::visit(overloaded{[](const NoFog&) {},
                        [](const RandomFog& r) {
                          if (r.k < 1) throw DomainError("fog: shape k must be a positive integer");
                          if (!(r.beta_fog > 0.0) || !(r.d_km > 0.0))
                            throw DomainError("fog: beta_fog and d must be positive");
                        },
                        [](const DeterministicFog& d) {
                          if (d.tau_per_km < 0.0 || !(d.d_km > 0.0))
                            throw DomainError("fog: deterministic attenuation needs tau >= 0, d > 0");
                        }},
             f);
}

// ---------------------------------------------------------------------------

UnifiedChannelParams unify(const TurbulenceParams& turb, const PointingParams& pt, const FogParams& fog) {
  validate_fog(fog);
  UnifiedChannelParams u;
  const double r2 = pt.rho_sq, A0 = pt.A0;
  std::visit(overloaded{
                 [&](const GammaGamma& t) {
                   if (!(t.alpha > 0.0) || !(t.beta > 0.0)) throw DomainError("GG: shapes must be positive");
                   u.psi = t.alpha * t.beta * r2 / (A0 * std::tgamma(t.alpha) * std::tgamma(t.beta));
                   u.phi = 1.0;
                   u.P = 1;
                   u.zeta = {1.0};
                   u.C = {t.alpha * t.beta / A0};
                   u.m = 3, u.n = 0, u.p = 1, u.q = 3;
                   u.a = {r2};
                   u.b = {r2 - 1.0, t.alpha - 1.0, t.beta - 1.0};
                 },
                 [&](const Malaga& t) {
                   const MalagaDerived d = derive_malaga(t);
                   u.psi = r2 * d.A_mg / 2.0;
                   u.phi = 0.0;
                   u.P = t.beta;
                   u.zeta = d.b;
                   u.C.assign(t.beta, t.alpha * t.beta / ((d.g * t.beta + d.omega_prime) * A0));
                   u.m = 3, u.n = 0, u.p = 1, u.q = 3;
                   u.a = {r2 + 1.0};
                   u.b = {r2, t.alpha, 0.0};  // third entry is l, filled per term
                 },
                 [&](const FisherSnedecor& t) {
                   if (!(t.alpha > 1.0) || !(t.beta > 1.0)) throw DomainError("F: shapes must exceed 1");
                   // psi computed in log space: Gamma(alpha_F) overflows for large shapes
                   u.psi = std::exp(std::log(t.alpha * r2 / ((t.beta - 1.0) * A0)) - lg(t.alpha) - lg(t.beta));
                   u.phi = 1.0;
                   u.P = 1;
                   u.zeta = {1.0};
                   u.C = {t.alpha / ((t.beta - 1.0) * A0)};
                   u.m = 2, u.n = 1, u.p = 2, u.q = 2;
                   u.a = {-t.beta, r2};
                   u.b = {t.alpha - 1.0, r2 - 1.0};
                 }},
             turb);
  if (const auto* det = std::get_if<DeterministicFog>(&fog)) {
    const double g = det->gain();
    u.psi *= std::pow(g, -u.phi);
    for (auto& c : u.C) c /= g;
  }
  u.fog = fog;
  u.origin = HopModel{turb, pt, fog};
  return u;
}

UnifiedChannelParams unify(const HopModel& hop) { return unify(hop.turbulence, hop.pointing, hop.fog); }

namespace {

// b list of term l (Malaga carries l in its last slot).
std::vector<double> b_of(const UnifiedChannelParams& u, int l) {
  std::vector<double> b = u.b;
  b.back() = double(l + 1);
  return b;
}

bool is_malaga(const UnifiedChannelParams& u) {
  return u.origin && std::holds_alternative<Malaga>(u.origin->turbulence);
}

// psi may be tiny (large F shapes); carry it as a log.
double log_psi(const UnifiedChannelParams& u) {
  if (u.origin) {
    if (const auto* f = std::get_if<FisherSnedecor>(&u.origin->turbulence)) {
      double lp = std::log(f->alpha * u.origin->pointing.rho_sq / ((f->beta - 1.0) * u.origin->pointing.A0)) -
                  lg(f->alpha) - lg(f->beta);
      if (const auto* det = std::get_if<DeterministicFog>(&u.fog)) lp -= u.phi * std::log(det->gain());
      return lp;
    }
  }
  return std::log(u.psi);
}

}  // namespace

std::vector<FoxHSpec> mellin_terms(const UnifiedChannelParams& u) {
  std::vector<FoxHSpec> out;
  const RandomFog* rf = std::get_if<RandomFog>(&u.fog);
  const bool malaga = is_malaga(u);
  for (int l = 0; l < u.P; ++l) {
    const std::vector<double> b = malaga ? b_of(u, l) : u.b;
    FoxHSpec t;
    for (int w = 0; w < u.q; ++w)
      (w < u.m ? t.numerator_lower : t.denominator_lower).push_back({u.phi + b[w], 1.0, 1});
    for (int w = 0; w < u.p; ++w)
      (w < u.n ? t.numerator_upper : t.denominator_upper).push_back({u.phi + u.a[w], 1.0, 1});
    double log_lead = log_psi(u) + std::log(u.zeta[l]) - u.phi * std::log(u.C[l]);
    if (rf) {
      const double v = rf->v();
      t.numerator_lower.push_back({v, 1.0, rf->k});
      t.denominator_upper.push_back({v + 1.0, 1.0, rf->k});
      log_lead += rf->k * std::log(v);
    }
    t.argument_scale = u.C[l];
    t.leading_coefficient = 1.0;
    t.leading_log_scale = log_lead;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<FoxHSpec> multiply_mellin(const std::vector<FoxHSpec>& x, const std::vector<FoxHSpec>& y) {
  std::vector<FoxHSpec> out;
  out.reserve(x.size() * y.size());
  auto cat = [](std::vector<GammaFactor>& dst, const std::vector<GammaFactor>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
  };
  for (const auto& a : x)
    for (const auto& b : y) {
      FoxHSpec t = a;
      cat(t.numerator_lower, b.numerator_lower);
      cat(t.numerator_upper, b.numerator_upper);
      cat(t.denominator_lower, b.denominator_lower);
      cat(t.denominator_upper, b.denominator_upper);
      t.argument_scale = a.argument_scale * b.argument_scale;
      t.leading_coefficient = a.leading_coefficient * b.leading_coefficient;
      t.leading_log_scale = a.leading_log_scale + b.leading_log_scale;
      out.push_back(std::move(t));
    }
  return out;
}

std::vector<FoxHSpec> product_mellin(const std::vector<UnifiedChannelParams>& hops) {
  if (hops.empty()) throw DomainError("product: at least one hop required");
  std::vector<FoxHSpec> acc = mellin_terms(hops.front());
  for (std::size_t j = 1; j < hops.size(); ++j) acc = multiply_mellin(acc, mellin_terms(hops[j]));
  return acc;
}

std::vector<FoxHSpec> pdf_terms(std::vector<FoxHSpec> m) {
  for (auto& t : m) t.argument_power_offset = -1.0;
  return m;
}

std::vector<FoxHSpec> cdf_terms(std::vector<FoxHSpec> m) {
  for (auto& t : m) {
    t.numerator_upper.push_back({1.0, 1.0, 1});    // Gamma(s)
    t.denominator_lower.push_back({0.0, 1.0, 1});  // 1/Gamma(1+s)
  }
  return m;
}

std::vector<FoxHSpec> mgf_terms(std::vector<FoxHSpec> m) {
  for (auto& t : m) t.numerator_upper.push_back({1.0, 1.0, 1});
  return m;
}

double mellin_moment(const std::vector<FoxHSpec>& mellin, double r) {
  double total = 0.0;
  const double s = -r;
  for (const auto& t : mellin) {
    double lv = t.leading_log_scale + std::log(std::abs(t.leading_coefficient)) + s * std::log(t.argument_scale);
    int sign = t.leading_coefficient < 0 ? -1 : 1;
    auto acc = [&](double arg, int power) {
      int sg = 1;
      lv += power * log_gamma_real(arg, &sg);
      if (sg < 0 && (power % 2)) sign = -sign;
    };
    for (const auto& f : t.numerator_lower) acc(f.coefficient - f.scale * s, f.multiplicity);
    for (const auto& f : t.numerator_upper) acc(1.0 - f.coefficient + f.scale * s, f.multiplicity);
    for (const auto& f : t.denominator_lower) acc(1.0 - f.coefficient + f.scale * s, -f.multiplicity);
    for (const auto& f : t.denominator_upper) acc(f.coefficient - f.scale * s, -f.multiplicity);
    total += sign * std::exp(lv);
  }
  return total;
}

double mellin_moment(const UnifiedChannelParams& u, double r) { return mellin_moment(mellin_terms(u), r); }

double physical_moment(const HopModel& hop, double r) {
  double turb = std::visit(
      overloaded{[&](const GammaGamma& t) {
                   return std::exp(lg(t.alpha + r) + lg(t.beta + r) - lg(t.alpha) - lg(t.beta) -
                                   r * std::log(t.alpha * t.beta));
                 },
                 [&](const FisherSnedecor& t) {
                   if (!(r < t.beta)) return std::numeric_limits<double>::infinity();
                   return std::exp(r * std::log((t.beta - 1.0) / t.alpha) + lg(t.alpha + r) + lg(t.beta - r) -
                                   lg(t.alpha) - lg(t.beta));
                 },
                 [&](const Malaga& t) {
                   const MalagaDerived d = derive_malaga(t);
                   double s = 0.0;
                   for (int m = 1; m <= t.beta; ++m) {
                     const double scale = m * d.mean_scale;
                     s += d.weights[m - 1] * std::pow(scale, r) *
                          std::exp(lg(t.alpha + r) + lg(m + r) - lg(t.alpha) - lg(double(m)) -
                                   r * std::log(t.alpha * m));
                   }
                   return s;
                 }},
      hop.turbulence);
  const double point = std::pow(hop.pointing.A0, r) * hop.pointing.rho_sq / (hop.pointing.rho_sq + r);
  const double fog = std::visit(overloaded{[](const NoFog&) { return 1.0; },
                                           [&](const RandomFog& f) { return std::pow(f.v() / (f.v() + r), f.k); },
                                           [&](const DeterministicFog& f) { return std::pow(f.gain(), r); }},
                                hop.fog);
  return turb * point * fog;
}

// ---------------------------------------------------------------------------

std::vector<FoxHSpec> combined_pdf_spec(const UnifiedChannelParams& u) {
  std::vector<FoxHSpec> out;
  const RandomFog* rf = std::get_if<RandomFog>(&u.fog);
  const bool malaga = is_malaga(u);
  for (int l = 0; l < u.P; ++l) {
    const std::vector<double> b = malaga ? b_of(u, l) : u.b;
    FoxHSpec t;
    for (int w = 0; w < u.q; ++w) (w < u.m ? t.numerator_lower : t.denominator_lower).push_back({b[w], 1.0, 1});
    for (int w = 0; w < u.p; ++w) (w < u.n ? t.numerator_upper : t.denominator_upper).push_back({u.a[w], 1.0, 1});
    double log_lead = log_psi(u) + std::log(u.zeta[l]);
    if (rf) {
      const double v = rf->v();
      t.numerator_lower.push_back({v - u.phi, 1.0, rf->k});
      t.denominator_upper.push_back({v + 1.0 - u.phi, 1.0, rf->k});
      log_lead += rf->k * std::log(v);
    }
    t.argument_scale = u.C[l];
    t.leading_log_scale = log_lead;
    t.argument_power_offset = u.phi - 1.0;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<FoxHSpec> combined_cdf_spec(const UnifiedChannelParams& u) {
  std::vector<FoxHSpec> out = combined_pdf_spec(u);
  for (auto& t : out) {
    t.numerator_upper.insert(t.numerator_upper.begin(), GammaFactor{1.0 - u.phi, 1.0, 1});
    t.denominator_lower.push_back({-u.phi, 1.0, 1});
    t.argument_power_offset = u.phi;
  }
  return out;
}

double combined_pdf(const UnifiedChannelParams& u, double x) {
  if (!(x > 0.0)) return 0.0;
  return FoxHEvaluator(combined_pdf_spec(u))(x);
}

double combined_cdf(const UnifiedChannelParams& u, double x) {
  if (!(x > 0.0)) return 0.0;
  return FoxHEvaluator(combined_cdf_spec(u))(x);
}

// ---------------------------------------------------------------------------

ProductStats::ProductStats(const std::vector<UnifiedChannelParams>& hops, EvalOptions opts)
    : ProductStats(product_mellin(hops), opts) {}

ProductStats::ProductStats(std::vector<FoxHSpec> mellin, EvalOptions opts)
    : mellin_(std::move(mellin)),
      pdf_(pdf_terms(mellin_), opts),
      cdf_(cdf_terms(mellin_), opts),
      mgf_(mgf_terms(mellin_), opts) {}

double ProductStats::pdf(double x) const {
  if (x > 0.0) return pdf_(x);
  const double P = dominant_pole(mellin_);
  if (P > 1.0) return 0.0;
  if (P < 1.0) return std::numeric_limits<double>::infinity();
  return fox_h_small_argument(pdf_.terms(), 1e-300).value();
}

double ProductStats::cdf(double x) const {
  if (!(x > 0.0)) return 0.0;
  return cdf_(x);
}

EvalResult ProductStats::cdf_detailed(double x) const {
  if (!(x > 0.0)) return {0.0, 0.0, 0};
  return cdf_.evaluate(x);
}

double ProductStats::mgf(double s) const {
  if (s < 0.0) throw DomainError("mgf: argument must be non-negative");
  if (s == 0.0) return 1.0;
  return mgf_(1.0 / s);
}

// ---------------------------------------------------------------------------

std::vector<UnifiedChannelParams> HopChain::hops_of(int element) const {
  if (!element_hops.empty()) return element_hops.at(element);
  return hops;
}

void HopChain::validate() const {
  if (elements < 1) throw DomainError("chain: at least one element required");
  if (!element_hops.empty() && static_cast<int>(element_hops.size()) != elements)
    throw DomainError("chain: element_hops must list every element");
  for (int i = 0; i < elements; ++i)
    if (hops_of(i).empty()) throw DomainError("chain: every element needs at least one hop");
}

std::vector<std::vector<FoxHSpec>> element_mellin(const HopChain& chain) {
  chain.validate();
  std::vector<std::vector<FoxHSpec>> out;
  if (chain.element_hops.empty()) {
    out.assign(chain.elements, product_mellin(chain.hops));
  } else {
    for (int i = 0; i < chain.elements; ++i) out.push_back(product_mellin(chain.hops_of(i)));
  }
  return out;
}

namespace {

FoxHMultiSpec sum_spec(const HopChain& chain, double outer_den_coefficient) {
  FoxHMultiSpec s;
  for (auto& m : element_mellin(chain)) {
    for (auto& t : m) t.numerator_upper.push_back({1.0, 1.0, 1});
    s.per_variable.push_back(std::move(m));
  }
  s.outer_denominator.push_back({outer_den_coefficient, std::vector<double>(chain.elements, 1.0), 1});
  return s;
}

}  // namespace

FoxHMultiSpec sum_cdf_spec(const HopChain& chain) { return sum_spec(chain, 1.0); }
FoxHMultiSpec sum_pdf_spec(const HopChain& chain) { return sum_spec(chain, 0.0); }

SumStats::SumStats(const HopChain& chain, MultiEvalOptions opts)
    : n_(chain.elements), cdf_(sum_cdf_spec(chain), opts), pdf_(sum_pdf_spec(chain), opts) {}

MultiEvalResult SumStats::cdf(double x) const {
  if (!(x > 0.0)) return {};
  std::vector<double> z(n_, x);
  return cdf_.evaluate(z);
}

MultiEvalResult SumStats::pdf(double x) const {
  if (!(x > 0.0)) return {};
  std::vector<double> z(n_, x);
  MultiEvalResult r = pdf_.evaluate(z);
  r.value /= x;
  r.error_estimate /= x;
  r.std_error /= x;
  return r;
}

// ---------------------------------------------------------------------------

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

void DetectionConfig::validate() const {
  if (t != 1 && t != 2) throw DomainError("detection: t must be 1 (heterodyne) or 2 (IM/DD)");
  if (!(sigma_nu_sq > 0.0)) throw DomainError("detection: noise variance must be positive");
}

double DetectionConfig::gamma0() const {
  validate();
  return std::pow(dbm_to_watt(P_T_dBm), t) / sigma_nu_sq;
}

double DetectionConfig::gamma0_dB() const { return 10.0 * std::log10(gamma0()); }

double DetectionConfig::mu_t() const { return t == 1 ? 1.0 : std::exp(1.0) / (2.0 * std::numbers::pi); }

double snr_cdf(const std::function<double(double)>& channel_cdf, const DetectionConfig& det, double gamma) {
  if (!(gamma > 0.0)) return 0.0;
  return channel_cdf(std::pow(gamma / det.gamma0(), 1.0 / det.t));
}

double snr_pdf(const std::function<double(double)>& channel_pdf, const DetectionConfig& det, double gamma) {
  if (!(gamma > 0.0)) return 0.0;
  const double g0 = det.gamma0();
  const double t = det.t;
  return channel_pdf(std::pow(gamma / g0, 1.0 / t)) / (t * std::pow(g0, 1.0 / t) * std::pow(gamma, 1.0 - 1.0 / t));
}

}  // namespace fso
