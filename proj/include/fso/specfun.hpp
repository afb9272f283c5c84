#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace fso {

using cplx = std::complex<double>;

// Principal-branch log Gamma. Throws DomainError at the poles 0, -1, -2, ...
cplx log_gamma_complex(cplx z);

// log|Gamma(x)| for real x, sign of Gamma(x) written to *sign.
double log_gamma_real(double x, int* sign);

struct GammaFactor {
  double coefficient = 0.0;
  double scale = 1.0;
  int multiplicity = 1;
};

// Fox H term
//   leading * exp(leading_log_scale) * x^offset * (1/2 pi i) Int Theta(s) (argument_scale * x)^s ds
// with
//   Theta(s) = prod Gamma(b - B s) prod Gamma(1 - a + A s)
//            / (prod Gamma(1 - b + B s) prod Gamma(a - A s)).
// numerator_lower supplies the right poles, numerator_upper the left ones.
struct FoxHSpec {
  std::vector<GammaFactor> numerator_lower;
  std::vector<GammaFactor> numerator_upper;
  std::vector<GammaFactor> denominator_lower;
  std::vector<GammaFactor> denominator_upper;
  double argument_scale = 1.0;
  double leading_coefficient = 1.0;
  double leading_log_scale = 0.0;
  double argument_power_offset = 0.0;

  // Orders of H^{m,n}_{p,q} counting multiplicities.
  int m() const;
  int n() const;
  int p() const;
  int q() const;
  // m + n - (p + q)/2 with unit scales; for general scales the decay index is
  // sum of numerator scales minus sum of denominator scales (halved).
  double delta() const;
  void validate() const;
};

// Build the Meijer G^{m,n}_{p,q}(x | a; b) spec.
FoxHSpec meijer_g_spec(int m, int n, std::span<const double> a, std::span<const double> b);

// A factor Gamma(c + d s)^power of the integrand; power < 0 for denominators.
struct LinearGamma {
  double c = 0.0;
  double d = 0.0;
  int power = 1;
};

std::vector<LinearGamma> integrand_factors(const FoxHSpec& spec);

// log of lead * C^s * Theta(s) (a negative leading coefficient contributes i*pi).
cplx log_mellin_kernel(const FoxHSpec& spec, cplx s);

// sup of the left poles and inf of the right poles over a set of terms.
struct PoleStrip {
  double left;
  double right;
};
PoleStrip pole_strip(std::span<const FoxHSpec> terms);

struct ContourPlan {
  std::vector<double> anchors;
  std::vector<double> truncations;
  int nodes = 0;
  double error_estimate = 0.0;
  double truncation() const;
};

struct EvalOptions {
  double rel_tol = 1e-10;
  double abs_tol = 0.0;
  double tail_tol = 1e-16;
  int initial_nodes = 2048;
  int max_refinements = 4;
  double anchor_position = 0.5;
  std::optional<double> anchor;
};

struct EvalResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int nodes = 0;
};

ContourPlan plan_contour(const FoxHSpec& spec, double tail_tol = 1e-16);
ContourPlan plan_contour(std::span<const FoxHSpec> terms, const EvalOptions& opts);

// Sum of H terms sharing one vertical contour. The Gamma part of the integrand
// does not depend on x, so it is tabulated once at construction; each
// evaluation only pays for the x^s phases.
class FoxHEvaluator {
 public:
  explicit FoxHEvaluator(std::vector<FoxHSpec> terms, EvalOptions opts = {});
  explicit FoxHEvaluator(const FoxHSpec& spec, EvalOptions opts = {});

  EvalResult evaluate(double x) const;
  double operator()(double x) const { return evaluate(x).value; }
  const ContourPlan& plan() const { return plan_; }
  const std::vector<FoxHSpec>& terms() const { return terms_; }

 private:
  struct Level {
    std::vector<double> y;
    std::vector<cplx> weighted;  // quadrature weight * kernel / exp(log_ref)
    double log_ref = 0.0;
    double abs_sum = 0.0;
  };
  // Several parallel contours: rounding grows like x^(c - pole), so each x uses
  // whichever anchor has the smallest absolute integral.
  struct Contour {
    double anchor = 0.0;
    double truncation = 1.0;
  };
  struct LevelCache;
  Level build_level(std::size_t contour, int nodes) const;
  const Level& level(std::size_t contour, int index) const;
  std::size_t pick_contour(double log_x) const;
  void integrate(const Level& lv, double anchor, double log_x, double* value, double* magnitude) const;

  std::vector<FoxHSpec> terms_;
  EvalOptions opts_;
  ContourPlan plan_;
  double offset_ = 0.0;
  std::vector<Contour> contours_;
  int levels_per_contour_ = 2;
  // Node tables are built on first use and then shared; call_once keeps this thread safe.
  std::shared_ptr<LevelCache> cache_;
};

EvalResult eval_fox_h_detailed(const FoxHSpec& spec, double x, const EvalOptions& opts = {});
double eval_fox_h(const FoxHSpec& spec, double x, const EvalOptions& opts = {});
double eval_meijer_g(int m, int n, std::span<const double> a, std::span<const double> b, double x,
                     const EvalOptions& opts = {});

// ---------------------------------------------------------------------------
// Multivariate H. The outer factors are Gamma(c + sum_i d_i s_i)^mult, every
// variable carries a sum of one-variable terms on a common contour.

struct JointGammaFactor {
  double coefficient = 0.0;
  std::vector<double> scales;
  int multiplicity = 1;
};

struct FoxHMultiSpec {
  std::vector<JointGammaFactor> outer_numerator;
  std::vector<JointGammaFactor> outer_denominator;
  std::vector<std::vector<FoxHSpec>> per_variable;
  double leading_coefficient = 1.0;
  double leading_log_scale = 0.0;

  std::size_t dimension() const { return per_variable.size(); }
  void validate() const;
};

struct MultiEvalOptions {
  double rel_tol = 1e-8;
  double abs_tol = 0.0;
  double tail_tol = 1e-14;
  int initial_nodes = 256;
  int max_refinements = 2;
  bool deterministic = true;
  std::uint64_t seed = 0x5eed;
  int lattice_points = 32749;
  int random_shifts = 16;
};

struct MultiEvalResult {
  double value = 0.0;
  double error_estimate = 0.0;
  double std_error = 0.0;
  bool randomized = false;
};

class FoxHMultiEvaluator {
 public:
  explicit FoxHMultiEvaluator(FoxHMultiSpec spec, MultiEvalOptions opts = {});
  ~FoxHMultiEvaluator();
  FoxHMultiEvaluator(FoxHMultiEvaluator&&) noexcept;
  FoxHMultiEvaluator& operator=(FoxHMultiEvaluator&&) noexcept;

  // Multiplies the argument of every variable i by multipliers[i].
  MultiEvalResult evaluate(std::span<const double> multipliers) const;
  MultiEvalResult evaluate() const;
  const ContourPlan& plan() const;
  const FoxHMultiSpec& spec() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

MultiEvalResult eval_fox_h_multi(const FoxHMultiSpec& spec, const MultiEvalOptions& opts = {});

// ---------------------------------------------------------------------------
// Small-argument behaviour from the residues at the right poles.

struct ScaledValue {
  double log_magnitude = -INFINITY;
  int sign = 0;
  double value() const;
};

struct ResidueOptions {
  bool resolve_ties = false;
  // true: leading residue of every right-pole family (each term); false: dominant pole only.
  bool every_family = true;
  int circle_points = 64;
};

ScaledValue fox_h_small_argument(std::span<const FoxHSpec> terms, double x,
                                 const ResidueOptions& opts = {});
ScaledValue fox_h_multi_small_argument(const FoxHMultiSpec& spec, std::span<const double> multipliers,
                                       const ResidueOptions& opts = {});

// Smallest right pole over all terms (the exponent of the leading residue, before offset).
double dominant_pole(std::span<const FoxHSpec> terms);

}  // namespace fso
