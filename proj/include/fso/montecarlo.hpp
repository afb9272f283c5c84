#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fso/channels.hpp"

namespace fso {

using Rng = std::mt19937_64;

struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

// Engine for one batch of a stream. Counter based, so any split of the batches
// over workers reproduces the same draws.
Rng make_rng(const RngStream& s, std::uint64_t batch = 0);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t n_samples = 0;
  std::string warning;
};

double sample_turbulence(const TurbulenceParams& turb, Rng& rng);
double sample_pointing(const PointingParams& point, Rng& rng);
double sample_fog(const FogParams& fog, Rng& rng);
double sample_hop(const HopModel& hop, Rng& rng);

// Precomputed sampler for sum_i prod_j h_ij. Hops must carry their physical origin.
class ChainSampler {
 public:
  explicit ChainSampler(const HopChain& chain);
  double operator()(Rng& rng) const;
  int elements() const { return static_cast<int>(elements_.size()); }

 private:
  struct Hop {
    HopModel model;
    MalagaDerived malaga;
    std::vector<double> mixture_cdf;
  };
  double draw(const Hop& h, Rng& rng) const;
  std::vector<std::vector<Hop>> elements_;
};

// n channel draws (not SNR) in batch order.
std::vector<double> sample_end_to_end(const HopChain& chain, std::int64_t n, const RngStream& stream);

enum class MetricKind { outage, ber, capacity, moment };

struct McMetricRequest {
  MetricKind kind = MetricKind::outage;
  double gamma_th = 1.0;  // linear threshold for outage
  double p = 1.0, q = 1.0;  // modulation for BER
  double r = 1.0;           // moment order
};

McEstimate estimate_metric(const McMetricRequest& req, const HopChain& chain, const DetectionConfig& det,
                           std::int64_t n, const RngStream& stream);

// Several SNR scalings from the same channel draws (one pass, common random numbers).
std::vector<McEstimate> estimate_metric_sweep(const McMetricRequest& req, const HopChain& chain,
                                              const std::vector<DetectionConfig>& dets, std::int64_t n,
                                              const RngStream& stream);

// Per-sample conditional bit error probability Gamma(p, q g) / (2 Gamma(p)).
double conditional_ber(double p, double q, double gamma);

}  // namespace fso
