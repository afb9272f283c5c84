#include "fso/montecarlo.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "fso/errors.hpp"

namespace fso {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::int64_t kBatch = 1 << 14;

double gamma_draw(double shape, double scale, Rng& rng) {
  return std::gamma_distribution<double>(shape, scale)(rng);
}

double unit_gg(double alpha, double beta, Rng& rng) {
  return gamma_draw(alpha, 1.0 / alpha, rng) * gamma_draw(beta, 1.0 / beta, rng);
}

double f_draw(const FisherSnedecor& f, Rng& rng) {
  const double u = gamma_draw(f.alpha, 1.0, rng), v = gamma_draw(f.beta, 1.0, rng);
  return (f.beta - 1.0) * u / (f.alpha * v);
}

std::vector<double> malaga_mixture(const MalagaDerived& d) {
  std::vector<double> cdf;
  double s = 0.0;
  for (double w : d.weights) cdf.push_back(s += w);
  if (std::abs(s - 1.0) > 1e-9) throw DomainError("Malaga: mixture weights do not sum to 1");
  cdf.back() = 1.0;
  return cdf;
}

double malaga_draw(const Malaga& m, const MalagaDerived& d, const std::vector<double>& cdf, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const int l = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()) + 1;
  return l * d.mean_scale * unit_gg(m.alpha, std::min<int>(l, cdf.size()), rng);
}

// Welford accumulator, merged batch by batch in a fixed order.
struct Moments {
  std::int64_t n = 0;
  double mean = 0.0, m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0) return;
    const std::int64_t t = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / t;
    m2 += o.m2 + d * d * static_cast<double>(n) * o.n / t;
    n = t;
  }
  McEstimate estimate() const {
    McEstimate e;
    e.mean = mean;
    e.n_samples = n;
    e.std_error = n > 1 ? std::sqrt(m2 / (n - 1) / n) : 0.0;
    if (n < 10000) e.warning = "fewer than 1e4 samples: precision is poor";
    return e;
  }
};

double metric_value(const McMetricRequest& req, const DetectionConfig& det, double h) {
  const double g = det.gamma0() * std::pow(h, det.t);
  switch (req.kind) {
    case MetricKind::outage:
      return g <= req.gamma_th ? 1.0 : 0.0;
    case MetricKind::ber:
      return conditional_ber(req.p, req.q, g);
    case MetricKind::capacity:
      return std::log2(1.0 + det.mu_t() * g);
    case MetricKind::moment:
      return std::pow(g, req.r);
  }
  return 0.0;
}

}  // namespace

Rng make_rng(const RngStream& s, std::uint64_t batch) {
  const std::uint64_t k = mix64(mix64(mix64(s.seed) ^ s.stream_id) ^ batch);
  std::seed_seq seq{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  return Rng(seq);
}

double sample_turbulence(const TurbulenceParams& turb, Rng& rng) {
  return std::visit(overloaded{[&](const GammaGamma& t) { return unit_gg(t.alpha, t.beta, rng); },
                               [&](const FisherSnedecor& t) { return f_draw(t, rng); },
                               [&](const Malaga& t) {
                                 const MalagaDerived d = derive_malaga(t);
                                 return malaga_draw(t, d, malaga_mixture(d), rng);
                               }},
                    turb);
}

double sample_pointing(const PointingParams& point, Rng& rng) {
  // 2 r^2 / w_zeq^2 is exponential with mean 1/rho^2 for Rayleigh r with sigma^2 = xi/4.
  const double e = std::exponential_distribution<double>(1.0)(rng);
  return point.A0 * std::exp(-e / point.rho_sq);
}

double sample_fog(const FogParams& fog, Rng& rng) {
  return std::visit(overloaded{[](const NoFog&) { return 1.0; },
                               [](const DeterministicFog& d) { return d.gain(); },
                               [&](const RandomFog& f) {
                                 if (f.k < 1) throw DomainError("fog: shape k must be a positive integer");
                                 return std::exp(-gamma_draw(f.k, 1.0 / f.v(), rng));
                               }},
                    fog);
}

double sample_hop(const HopModel& hop, Rng& rng) {
  return sample_turbulence(hop.turbulence, rng) * sample_pointing(hop.pointing, rng) * sample_fog(hop.fog, rng);
}

ChainSampler::ChainSampler(const HopChain& chain) {
  chain.validate();
  for (int i = 0; i < chain.elements; ++i) {
    std::vector<Hop> hops;
    for (const auto& u : chain.hops_of(i)) {
      if (!u.origin) throw DomainError("sampler: hop has no physical parameters");
      Hop h{*u.origin, {}, {}};
      validate_fog(h.model.fog);
      if (const auto* m = std::get_if<Malaga>(&h.model.turbulence)) {
        h.malaga = derive_malaga(*m);
        h.mixture_cdf = malaga_mixture(h.malaga);
      }
      hops.push_back(std::move(h));
    }
    elements_.push_back(std::move(hops));
  }
}

double ChainSampler::draw(const Hop& h, Rng& rng) const {
  double t;
  if (const auto* m = std::get_if<Malaga>(&h.model.turbulence)) {
    t = malaga_draw(*m, h.malaga, h.mixture_cdf, rng);
  } else {
    t = sample_turbulence(h.model.turbulence, rng);
  }
  return t * sample_pointing(h.model.pointing, rng) * sample_fog(h.model.fog, rng);
}

double ChainSampler::operator()(Rng& rng) const {
  double sum = 0.0;
  for (const auto& hops : elements_) {
    double prod = 1.0;
    for (const auto& h : hops) prod *= draw(h, rng);
    sum += prod;
  }
  return sum;
}

std::vector<double> sample_end_to_end(const HopChain& chain, std::int64_t n, const RngStream& stream) {
  const ChainSampler s(chain);
  std::vector<double> out;
  out.reserve(n);
  for (std::int64_t b = 0; b * kBatch < n; ++b) {
    Rng rng = make_rng(stream, b);
    const std::int64_t end = std::min(n, (b + 1) * kBatch);
    for (std::int64_t j = b * kBatch; j < end; ++j) out.push_back(s(rng));
  }
  return out;
}

double conditional_ber(double p, double q, double gamma) {
  return 0.5 * boost::math::gamma_q(p, q * gamma);
}

std::vector<McEstimate> estimate_metric_sweep(const McMetricRequest& req, const HopChain& chain,
                                              const std::vector<DetectionConfig>& dets, std::int64_t n,
                                              const RngStream& stream) {
  for (const auto& d : dets) d.validate();
  if (n < 1) throw DomainError("estimate_metric: at least one sample required");
  const ChainSampler s(chain);
  std::vector<Moments> total(dets.size());
  for (std::int64_t b = 0; b * kBatch < n; ++b) {
    Rng rng = make_rng(stream, b);
    std::vector<Moments> part(dets.size());
    const std::int64_t end = std::min(n, (b + 1) * kBatch);
    for (std::int64_t j = b * kBatch; j < end; ++j) {
      const double h = s(rng);
      for (std::size_t k = 0; k < dets.size(); ++k) part[k].add(metric_value(req, dets[k], h));
    }
    for (std::size_t k = 0; k < dets.size(); ++k) total[k].merge(part[k]);
  }
  std::vector<McEstimate> out;
  for (const auto& m : total) out.push_back(m.estimate());
  return out;
}

McEstimate estimate_metric(const McMetricRequest& req, const HopChain& chain, const DetectionConfig& det,
                           std::int64_t n, const RngStream& stream) {
  return estimate_metric_sweep(req, chain, {det}, n, stream).front();
}

}  // namespace fso
