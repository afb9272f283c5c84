#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "fso/specfun.hpp"

namespace fso {

// --- turbulence -------------------------------------------------------------

struct GammaGamma {
  double alpha = 3.01;
  double beta = 3.0;
};

struct Malaga {
  double alpha = 3.01;
  int beta = 3;
  double omega = 0.4;
  double b0 = 0.3;
  double rho_coupling = 0.596;
  double phase_diff = 0.0;
};

struct FisherSnedecor {
  double alpha = 4.85;
  double beta = 6.55;
};

using TurbulenceParams = std::variant<GammaGamma, Malaga, FisherSnedecor>;

struct MalagaDerived {
  double g = 0.0;
  double omega_prime = 0.0;
  double A_mg = 0.0;
  std::vector<double> a;        // a_m, m = 1..beta
  std::vector<double> b;        // b_m
  std::vector<double> weights;  // GG mixture weights w_m
  double mean_scale = 0.0;      // (g beta + Omega') / beta
};

MalagaDerived derive_malaga(const Malaga& m);

// --- pointing ---------------------------------------------------------------

struct DirectJitter {
  double sigma_s = 0.3;  // m
};

struct RisJitter {
  double sigma_theta = 1e-3;  // rad
  double sigma_beta = 1e-3;   // rad
  double d_km = 1.0;          // total path length
  double d2_km = 0.5;         // RIS to receiver
};

struct PointingGeometry {
  double aperture_radius = 0.1;  // m
  double beam_width = 1.5;       // m, at the receiver
  std::variant<DirectJitter, RisJitter> jitter = DirectJitter{};
  std::optional<double> rho_sq_override;
};

struct PointingParams {
  double upsilon = 0.0;
  double A0 = 1.0;
  double w_zeq_sq = 0.0;
  double xi = 0.0;
  double rho_sq = 1.0;
};

PointingParams derive_pointing(const PointingGeometry& g);

// --- fog --------------------------------------------------------------------

struct NoFog {};

struct RandomFog {
  int k = 2;
  double beta_fog = 13.12;
  double d_km = 1.0;
  double v() const { return 4.343 / (d_km * beta_fog); }
};

struct DeterministicFog {
  double tau_per_km = 0.0;
  double d_km = 1.0;
  double gain() const;
};

using FogParams = std::variant<NoFog, RandomFog, DeterministicFog>;

// Beer-Lambert attenuation per km from visibility (Kim size-distribution exponent).
double beer_lambert_tau(double visibility_km, double wavelength_nm);
void validate_fog(const FogParams& f);

// --- one hop ----------------------------------------------------------------

struct HopModel {
  TurbulenceParams turbulence;
  PointingParams pointing;
  FogParams fog;
};

struct UnifiedChannelParams {
  double psi = 1.0;
  double phi = 0.0;
  int P = 1;
  std::vector<double> zeta;
  std::vector<double> C;
  int m = 0, n = 0, p = 0, q = 0;
  std::vector<double> a;
  std::vector<double> b;
  FogParams fog;
  std::optional<HopModel> origin;
};

UnifiedChannelParams unify(const TurbulenceParams& turb, const PointingParams& point, const FogParams& fog = NoFog{});
UnifiedChannelParams unify(const HopModel& hop);

// Mellin form E[h^{-s}] = sum_t lead_t C_t^s Theta_t(s), one FoxHSpec per term.
std::vector<FoxHSpec> mellin_terms(const UnifiedChannelParams& u);
// Mellin form of the product of independent variables.
std::vector<FoxHSpec> multiply_mellin(const std::vector<FoxHSpec>& x, const std::vector<FoxHSpec>& y);
std::vector<FoxHSpec> product_mellin(const std::vector<UnifiedChannelParams>& hops);

// Integrand transforms of a Mellin form.
std::vector<FoxHSpec> pdf_terms(std::vector<FoxHSpec> mellin);
std::vector<FoxHSpec> cdf_terms(std::vector<FoxHSpec> mellin);
std::vector<FoxHSpec> mgf_terms(std::vector<FoxHSpec> mellin);

// E[h^r] from the Gamma ratios of a Mellin form (r inside the strip).
double mellin_moment(const std::vector<FoxHSpec>& mellin, double r);
double mellin_moment(const UnifiedChannelParams& u, double r);
// E[h^r] directly from the physical hop (GG/F/Malaga moment times pointing and fog moments).
double physical_moment(const HopModel& hop, double r);

// Literal unshifted single-hop forms: psi v^k x^{phi-1} sum zeta G(...) and its integral.
std::vector<FoxHSpec> combined_pdf_spec(const UnifiedChannelParams& u);
std::vector<FoxHSpec> combined_cdf_spec(const UnifiedChannelParams& u);
double combined_pdf(const UnifiedChannelParams& u, double x);
double combined_cdf(const UnifiedChannelParams& u, double x);

// --- products and sums ------------------------------------------------------

class ProductStats {
 public:
  explicit ProductStats(const std::vector<UnifiedChannelParams>& hops, EvalOptions opts = {});
  explicit ProductStats(std::vector<FoxHSpec> mellin, EvalOptions opts = {});

  double pdf(double x) const;
  double cdf(double x) const;
  EvalResult cdf_detailed(double x) const;
  double mgf(double s) const;
  const std::vector<FoxHSpec>& mellin() const { return mellin_; }

 private:
  std::vector<FoxHSpec> mellin_;
  FoxHEvaluator pdf_;
  FoxHEvaluator cdf_;
  FoxHEvaluator mgf_;
};

struct HopChain {
  std::vector<UnifiedChannelParams> hops;  // L hops of every element
  int elements = 1;
  // Optional i.ni.d. elements: one hop list per element, overrides `hops`.
  std::vector<std::vector<UnifiedChannelParams>> element_hops;

  std::vector<UnifiedChannelParams> hops_of(int element) const;
  void validate() const;
};

// Per-element Mellin forms of h_i = prod_j h_ij.
std::vector<std::vector<FoxHSpec>> element_mellin(const HopChain& chain);

// Multivariate spec of P(sum_i h_i <= x) (evaluate with every multiplier = x)
// and of x * pdf(x).
FoxHMultiSpec sum_cdf_spec(const HopChain& chain);
FoxHMultiSpec sum_pdf_spec(const HopChain& chain);

class SumStats {
 public:
  explicit SumStats(const HopChain& chain, MultiEvalOptions opts = {});
  MultiEvalResult cdf(double x) const;
  MultiEvalResult pdf(double x) const;
  int elements() const { return n_; }

 private:
  int n_;
  FoxHMultiEvaluator cdf_;
  FoxHMultiEvaluator pdf_;
};

// --- SNR domain -------------------------------------------------------------

struct DetectionConfig {
  int t = 1;                  // 1 heterodyne, 2 IM/DD
  double P_T_dBm = 20.0;
  double sigma_nu_sq = 1e-14;
  double gamma0() const;
  double gamma0_dB() const;
  double mu_t() const;
  void validate() const;
};

double dbm_to_watt(double dbm);

// gamma = gamma0 h^t
double snr_cdf(const std::function<double(double)>& channel_cdf, const DetectionConfig& det, double gamma);
double snr_pdf(const std::function<double(double)>& channel_pdf, const DetectionConfig& det, double gamma);

}  // namespace fso
