#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <variant>

#include "fso/channels.hpp"

namespace fso {

struct ModulationParams {
  double p = 1.0;
  double q = 1.0;
  // CBFSK, CBPSK, NBFSK, DBPSK (case insensitive)
  static ModulationParams preset(const std::string& name);
  void validate() const;
};

struct NumericsConfig {
  double epsilon = 1e-6;  // final-value regularizer on the normalized SNR gamma/gamma0
  double tol = 1e-8;
  int max_refinements = 4;
  bool resolve_pole_ties = false;
  // Allow randomized (lattice) estimates for multivariate integrals with more than two variables.
  bool randomized_multi = false;
  std::uint64_t seed = 0x5eed;
  void validate() const;
};

enum class Method { exact, asymptotic, quadrature_baseline, monte_carlo };
std::string to_string(Method m);

struct MetricResult {
  double value = 0.0;
  double error_estimate = 0.0;
  Method method = Method::exact;
  std::string warning;
};

enum class DiversityKind { outage, ber };

// Analytic metrics of one link (N = 1 is the direct link or a single product
// chain; N >= 2 is the RIS sum). Evaluators are built once per transform and reused
// across SNR points.
class LinkAnalyzer {
 public:
  explicit LinkAnalyzer(HopChain chain, NumericsConfig num = {});
  ~LinkAnalyzer();

  int elements() const { return chain_.elements; }
  const HopChain& chain() const { return chain_; }

  MetricResult outage_exact(const DetectionConfig& det, double gamma_th) const;
  MetricResult outage_asymptotic(const DetectionConfig& det, double gamma_th) const;
  MetricResult ber_exact(const DetectionConfig& det, const ModulationParams& mod) const;
  MetricResult ber_asymptotic(const DetectionConfig& det, const ModulationParams& mod) const;
  MetricResult capacity(const DetectionConfig& det) const;
  MetricResult snr_moment(const DetectionConfig& det, double r) const;

  // Direct quadrature over the channel pdf / cdf.
  MetricResult outage_baseline(const DetectionConfig& det, double gamma_th) const;
  MetricResult ber_baseline(const DetectionConfig& det, const ModulationParams& mod) const;
  MetricResult capacity_baseline(const DetectionConfig& det) const;
  MetricResult moment_baseline(const DetectionConfig& det, double r) const;

  // Channel statistics of h (sum over elements).
  double channel_cdf(double x) const;
  double channel_pdf(double x) const;

  double diversity_order(const DetectionConfig& det, DiversityKind kind) const;

 private:
  struct Cache;
  std::shared_ptr<FoxHEvaluator> one(const std::string& key, const std::function<std::vector<FoxHSpec>()>& make) const;
  std::shared_ptr<FoxHMultiEvaluator> multi(const std::string& key, const std::function<FoxHMultiSpec()>& make) const;
  double integer_sum_moment(int n) const;
  MetricResult moment_at(const DetectionConfig& det, double r, double eps) const;
  MetricResult capacity_at(const DetectionConfig& det) const;
  // int kernel(u) (1 - F(e^u)) du over the real line, F the exact sum cdf; primitive(-inf) = 0.
  MetricResult integrate_tail(const std::function<double(double)>& kernel,
                              const std::function<double(double)>& primitive) const;
  // Integral of weight(x) pdf(x) dx over the bulk of the channel law, in u = ln x.
  double integrate_over_h(const std::function<double(double)>& weight, double* err) const;
  std::pair<double, double> log_support() const;
  // x pdf(x) and its error estimate
  std::pair<double, double> density_of_log(double x) const;

  HopChain chain_;
  NumericsConfig num_;
  std::vector<FoxHSpec> mellin_;  // N = 1 only
  std::unique_ptr<Cache> cache_;
};

// Smallest right pole of each element's Mellin form, i.e. min over hops of {phi + b, v}.
std::vector<double> element_dominant_poles(const HopChain& chain);
// DL: min{...}/t. RIS (N >= 2): sum_i (p_i - kappa)/t with kappa = 0 (outage) or 1 (ber).
double diversity_order(const HopChain& chain, const DetectionConfig& det, DiversityKind kind);

MetricResult outage_exact(const HopChain& chain, const DetectionConfig& det, double gamma_th,
                          const NumericsConfig& num = {});
MetricResult outage_asymptotic(const HopChain& chain, const DetectionConfig& det, double gamma_th,
                               const NumericsConfig& num = {});
MetricResult ber_exact(const HopChain& chain, const DetectionConfig& det, const ModulationParams& mod,
                       const NumericsConfig& num = {});
MetricResult ber_asymptotic(const HopChain& chain, const DetectionConfig& det, const ModulationParams& mod,
                            const NumericsConfig& num = {});
MetricResult capacity(const HopChain& chain, const DetectionConfig& det, const NumericsConfig& num = {});
MetricResult snr_moment(const HopChain& chain, const DetectionConfig& det, double r,
                        const NumericsConfig& num = {});

// Spec builders (exposed for tests).
std::vector<FoxHSpec> ber_terms(std::vector<FoxHSpec> mellin, int t, double p);
std::vector<FoxHSpec> capacity_terms(std::vector<FoxHSpec> mellin, int t);
std::vector<FoxHSpec> moment_terms(std::vector<FoxHSpec> mellin, int t, double r);
FoxHMultiSpec sum_ber_spec(const HopChain& chain, int t, double p);

}  // namespace fso
