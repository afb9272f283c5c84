#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "fso/channels.hpp"
#include "fso/montecarlo.hpp"

using namespace fso;

namespace {

PointingParams pointing() { return derive_pointing({0.1, 1.5, DirectJitter{0.3}, 2.25}); }

// sqrt(n) D_n; the Kolmogorov 0.1% critical value is 1.95.
double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - F, F - i / n});
  }
  return std::sqrt(n) * d;
}

std::vector<double> draw(const std::function<double(Rng&)>& f, int n, std::uint64_t seed) {
  Rng rng = make_rng({seed, 0});
  std::vector<double> out(n);
  for (auto& v : out) v = f(rng);
  return out;
}

HopChain dl_chain() {
  HopChain c;
  c.hops = {unify(HopModel{FisherSnedecor{}, pointing(), RandomFog{2, 13.12, 1.0}})};
  return c;
}

}  // namespace

TEST(Sampling, PointingMatchesClosedForm) {
  const PointingParams p = pointing();
  const auto xs = draw([&](Rng& r) { return sample_pointing(p, r); }, 200000, 11);
  EXPECT_LT(ks_statistic(xs, [&](double y) { return std::pow(std::min(y / p.A0, 1.0), p.rho_sq); }), 1.95);
  EXPECT_LE(*std::max_element(xs.begin(), xs.end()), p.A0);
}

TEST(Sampling, RandomFogMatchesClosedForm) {
  for (const RandomFog f : {RandomFog{2, 13.12, 1.0}, RandomFog{5, 12.06, 0.5}}) {
    const auto xs = draw([&](Rng& r) { return sample_fog(f, r); }, 200000, 12);
    EXPECT_LT(ks_statistic(xs, [&](double y) { return boost::math::gamma_q(f.k, -f.v() * std::log(y)); }), 1.95);
  }
  const DeterministicFog d{0.5, 2.0};
  Rng rng = make_rng({1, 0});
  EXPECT_DOUBLE_EQ(sample_fog(d, rng), d.gain());
}

TEST(Sampling, TurbulenceHasUnitMean) {
  for (const TurbulenceParams& t : {TurbulenceParams{GammaGamma{}}, TurbulenceParams{FisherSnedecor{}}}) {
    const auto xs = draw([&](Rng& r) { return sample_turbulence(t, r); }, 400000, 13);
    double m = 0.0, m2 = 0.0;
    for (double x : xs) m += x, m2 += x * x;
    m /= xs.size();
    const double se = std::sqrt((m2 / xs.size() - m * m) / xs.size());
    EXPECT_NEAR(m, 1.0, 4.5 * se);
  }
}

TEST(Sampling, HopMatchesAnalyticCdf) {
  const HopModel hop{GammaGamma{3.01, 3.0}, pointing(), RandomFog{2, 13.12, 1.0}};
  const ProductStats st({unify(hop)});
  const auto xs = draw([&](Rng& r) { return sample_hop(hop, r); }, 20000, 14);
  EXPECT_LT(ks_statistic(xs, [&](double y) { return st.cdf(y); }), 1.95);

  const HopModel mal{Malaga{}, pointing(), NoFog{}};
  const ProductStats sm({unify(mal)});
  const auto ms = draw([&](Rng& r) { return sample_hop(mal, r); }, 20000, 15);
  EXPECT_LT(ks_statistic(ms, [&](double y) { return sm.cdf(y); }), 1.95);
}

TEST(Sampling, SumMatchesAnalyticCdf) {
  HopChain c;
  const UnifiedChannelParams h = unify(HopModel{FisherSnedecor{}, pointing(), RandomFog{2, 13.12, 0.5}});
  c.hops = {h, h};
  c.elements = 2;
  const SumStats st(c);
  const auto xs = sample_end_to_end(c, 10000, {3, 0});
  EXPECT_LT(ks_statistic(xs, [&](double y) { return st.cdf(y).value; }), 1.95);
}

TEST(Streams, Reproducible) {
  const HopChain c = dl_chain();
  const auto a = sample_end_to_end(c, 50000, {42, 1});
  const auto b = sample_end_to_end(c, 50000, {42, 1});
  EXPECT_EQ(a, b);
  const auto other = sample_end_to_end(c, 50000, {42, 2});
  EXPECT_NE(a, other);
}

// Draws are keyed by (seed, stream, batch), so a longer run extends a shorter one.
TEST(Streams, PrefixStable) {
  const HopChain c = dl_chain();
  const auto small = sample_end_to_end(c, 20000, {7, 0});
  const auto large = sample_end_to_end(c, 70000, {7, 0});
  ASSERT_EQ(large.size(), 70000u);
  EXPECT_TRUE(std::equal(small.begin(), small.end(), large.begin()));
}

TEST(Estimates, SumMeanIsSumOfMeans) {
  HopChain c = dl_chain();
  c.elements = 20;
  const double want = 20.0 * physical_moment(HopModel{FisherSnedecor{}, pointing(), RandomFog{2, 13.12, 1.0}}, 1.0);
  const McEstimate e = estimate_metric({MetricKind::moment, 1.0, 1.0, 1.0, 1.0}, c, {1, 30.0, 1.0}, 200000, {5, 0});
  // t = 1 and sigma^2 = 1 at 30 dBm: gamma = h, so the first moment is E[h]
  EXPECT_NEAR(e.mean, want, 4.5 * e.std_error);
  EXPECT_TRUE(e.warning.empty());
}

TEST(Estimates, SmallRunsWarn) {
  const McEstimate e = estimate_metric({}, dl_chain(), {}, 500, {1, 0});
  EXPECT_FALSE(e.warning.empty());
  EXPECT_EQ(e.n_samples, 500);
}

TEST(Estimates, SweepUsesCommonNumbers) {
  const HopChain c = dl_chain();
  std::vector<DetectionConfig> dets;
  for (double p = 0.0; p <= 40.0; p += 10.0) dets.push_back({1, p, 1e-14});
  const McMetricRequest cap{MetricKind::capacity};
  const auto sweep = estimate_metric_sweep(cap, c, dets, 20000, {9, 0});
  ASSERT_EQ(sweep.size(), dets.size());
  for (std::size_t i = 1; i < sweep.size(); ++i) EXPECT_GT(sweep[i].mean, sweep[i - 1].mean);
  const McEstimate single = estimate_metric(cap, c, dets[2], 20000, {9, 0});
  EXPECT_DOUBLE_EQ(single.mean, sweep[2].mean);
}

TEST(Estimates, ConditionalBer) {
  EXPECT_NEAR(conditional_ber(1.0, 1.0, 0.0), 0.5, 1e-15);
  EXPECT_NEAR(conditional_ber(1.0, 1.0, 2.0), 0.5 * std::exp(-2.0), 1e-15);
  EXPECT_NEAR(conditional_ber(0.5, 1.0, 2.0), 0.5 * std::erfc(std::sqrt(2.0)), 1e-15);
}
