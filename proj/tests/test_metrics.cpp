#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fso/channels.hpp"
#include "fso/errors.hpp"
#include "fso/metrics.hpp"
#include "fso/montecarlo.hpp"

using namespace fso;

namespace {

PointingParams dl_pointing() { return derive_pointing({0.1, 1.5, DirectJitter{0.3}, 2.25}); }

HopModel dl_hop(const FogParams& fog = RandomFog{2, 13.12, 1.0}, const TurbulenceParams& t = FisherSnedecor{}) {
  return {t, dl_pointing(), fog};
}

HopChain dl_chain(const FogParams& fog = RandomFog{2, 13.12, 1.0}, const TurbulenceParams& t = FisherSnedecor{}) {
  HopChain c;
  c.hops = {unify(dl_hop(fog, t))};
  return c;
}

// Two half-kilometre hops per element through the surface.
HopChain ris_chain(int n) {
  HopChain c;
  const PointingParams p = derive_pointing({0.1, 1.5, RisJitter{1e-3, 0.5e-3, 1.0, 0.5}, 2.25});
  const UnifiedChannelParams h = unify(HopModel{FisherSnedecor{}, p, RandomFog{2, 13.12, 0.5}});
  c.hops = {h, h};
  c.elements = n;
  return c;
}

NumericsConfig tied() {
  NumericsConfig n;
  n.resolve_pole_ties = true;
  return n;
}

const double kThreshold = std::pow(10.0, 0.5);  // 5 dB

void expect_rel(double got, double want, double tol) {
  EXPECT_NEAR(got, want, tol * std::abs(want)) << "want " << want;
}

}  // namespace

TEST(Modulation, Presets) {
  EXPECT_EQ(ModulationParams::preset("CBFSK").p, 0.5);
  EXPECT_EQ(ModulationParams::preset("cbpsk").q, 1.0);
  EXPECT_EQ(ModulationParams::preset("NBFSK").q, 0.5);
  EXPECT_EQ(ModulationParams::preset("DBPSK").p, 1.0);
  EXPECT_THROW(ModulationParams::preset("qam"), ConfigError);
  EXPECT_THROW((ModulationParams{0.0, 1.0}.validate()), DomainError);
}

TEST(Numerics, Validation) {
  NumericsConfig n;
  EXPECT_NO_THROW(n.validate());
  n.epsilon = 0.0;
  EXPECT_THROW(n.validate(), DomainError);
  n.epsilon = 1e-2;
  EXPECT_THROW(n.validate(), DomainError);
}

TEST(Diversity, DirectLinkFogLimited) {
  const DetectionConfig hd{1, 20.0, 1e-14}, im{2, 20.0, 1e-14};
  EXPECT_NEAR(diversity_order(dl_chain(), hd, DiversityKind::outage), 4.343 / 13.12, 1e-12);
  EXPECT_NEAR(diversity_order(dl_chain(), hd, DiversityKind::outage), 0.331, 1e-3);
  EXPECT_NEAR(diversity_order(dl_chain(RandomFog{5, 12.06, 1.0}), hd, DiversityKind::outage), 0.36, 1e-3);
  EXPECT_NEAR(diversity_order(dl_chain(), im, DiversityKind::outage),
              0.5 * diversity_order(dl_chain(), hd, DiversityKind::outage), 1e-15);
  // without fog the pointing term rho^2 = 2.25 is the smallest pole
  EXPECT_NEAR(diversity_order(dl_chain(NoFog{}), hd, DiversityKind::outage), 2.25, 1e-12);
}

TEST(Diversity, SurfaceAddsElementPoles) {
  const DetectionConfig hd{1, 20.0, 1e-14};
  const double v = 4.343 / (13.12 * 0.5);
  const std::vector<double> poles = element_dominant_poles(ris_chain(3));
  ASSERT_EQ(poles.size(), 3u);
  for (double p : poles) EXPECT_NEAR(p, v, 1e-12);
  EXPECT_NEAR(diversity_order(ris_chain(3), hd, DiversityKind::outage), 3.0 * v, 1e-12);
}

TEST(DirectLink, ExactMatchesQuadrature) {
  const LinkAnalyzer a(dl_chain());
  const ModulationParams mod = ModulationParams::preset("DBPSK");
  for (int t : {1, 2}) {
    for (double P : {10.0, 30.0}) {
      const DetectionConfig d{t, P, 1e-14};
      expect_rel(a.outage_exact(d, kThreshold).value, a.outage_baseline(d, kThreshold).value, 1e-7);
      expect_rel(a.ber_exact(d, mod).value, a.ber_baseline(d, mod).value, 1e-7);
      expect_rel(a.capacity(d).value, a.capacity_baseline(d).value, 1e-7);
      expect_rel(a.snr_moment(d, 1.0).value, a.moment_baseline(d, 1.0).value, 1e-5);
    }
  }
}

TEST(DirectLink, MomentIsScaledChannelMoment) {
  const HopModel hop = dl_hop();
  const LinkAnalyzer a(dl_chain());
  for (int t : {1, 2}) {
    const DetectionConfig d{t, 20.0, 1e-14};
    for (double r : {1.0, 1.5}) {
      const MetricResult m = a.snr_moment(d, r);
      expect_rel(m.value, std::pow(d.gamma0(), r) * physical_moment(hop, r * t), 1e-5);
    }
    EXPECT_NEAR(a.snr_moment(d, 0.0).value, 1.0, 1e-6);
  }
}

TEST(DirectLink, BoundsAndMonotonicity) {
  const LinkAnalyzer a(dl_chain());
  const ModulationParams mod = ModulationParams::preset("DBPSK");
  double po = 1.0, pb = 0.5, pc = 0.0, pm = 0.0;
  for (double P = 0.0; P <= 40.0; P += 5.0) {
    const DetectionConfig d{1, P, 1e-14};
    const double o = a.outage_exact(d, kThreshold).value, b = a.ber_exact(d, mod).value;
    const double c = a.capacity(d).value, m = a.snr_moment(d, 1.0).value;
    EXPECT_GE(o, 0.0);
    EXPECT_LE(o, po);
    EXPECT_GE(b, 0.0);
    EXPECT_LE(b, pb);
    EXPECT_GT(c, pc);
    EXPECT_GT(m, pm);
    po = o, pb = b, pc = c, pm = m;
  }
}

TEST(DirectLink, HeterodyneBeatsDirectDetection) {
  const LinkAnalyzer a(dl_chain());
  const ModulationParams mod = ModulationParams::preset("DBPSK");
  for (double P : {0.0, 20.0, 40.0}) {
    const DetectionConfig hd{1, P, 1e-14}, im{2, P, 1e-14};
    EXPECT_LT(a.outage_exact(hd, kThreshold).value, a.outage_exact(im, kThreshold).value);
    EXPECT_LT(a.ber_exact(hd, mod).value, a.ber_exact(im, mod).value);
  }
}

TEST(DirectLink, LowSnrLimits) {
  const LinkAnalyzer a(dl_chain(NoFog{}, GammaGamma{}));
  const DetectionConfig d{1, -170.0, 1e-14};  // gamma0 = 1e-6
  EXPECT_NEAR(a.outage_exact(d, kThreshold).value, 1.0, 1e-9);
  EXPECT_NEAR(a.ber_exact(d, ModulationParams::preset("DBPSK")).value, 0.5, 1e-6);
  EXPECT_LT(a.capacity(d).value, 1e-7);
}

TEST(DirectLink, AsymptoteApproachesExact) {
  const LinkAnalyzer a(dl_chain(NoFog{}, GammaGamma{}));
  const DetectionConfig lo{1, 20.0, 1e-14}, hi{1, 60.0, 1e-14};
  const double r_lo = a.outage_asymptotic(lo, kThreshold).value / a.outage_exact(lo, kThreshold).value;
  const double r_hi = a.outage_asymptotic(hi, kThreshold).value / a.outage_exact(hi, kThreshold).value;
  EXPECT_LT(std::abs(r_hi - 1.0), std::abs(r_lo - 1.0) + 1e-12);
  EXPECT_NEAR(r_hi, 1.0, 1e-3);
}

TEST(Surface, TwoElementsMatchMonteCarlo) {
  const HopChain c = ris_chain(2);
  const LinkAnalyzer a(c, tied());
  const ModulationParams mod = ModulationParams::preset("DBPSK");
  for (int t : {1, 2}) {
    const DetectionConfig d{t, 20.0, 1e-14};
    const std::int64_t n = 400000;
    const McEstimate o = estimate_metric({MetricKind::outage, kThreshold}, c, d, n, {21, 0});
    const McEstimate b = estimate_metric({MetricKind::ber, 1.0, mod.p, mod.q}, c, d, n, {21, 1});
    const McEstimate cap = estimate_metric({MetricKind::capacity}, c, d, n, {21, 2});
    EXPECT_NEAR(a.outage_exact(d, kThreshold).value, o.mean, 4.5 * o.std_error);
    EXPECT_NEAR(a.ber_exact(d, mod).value, b.mean, 4.5 * b.std_error);
    EXPECT_NEAR(a.capacity(d).value, cap.mean, 4.5 * cap.std_error);
  }
}

TEST(Surface, IntegerMomentIsBinomial) {
  const HopChain c = ris_chain(2);
  const LinkAnalyzer a(c, tied());
  const std::vector<UnifiedChannelParams> one = c.hops;
  const double m1 = mellin_moment(product_mellin(one), 1.0), m2 = mellin_moment(product_mellin(one), 2.0);
  const DetectionConfig hd{1, 20.0, 1e-14}, im{2, 20.0, 1e-14};
  expect_rel(a.snr_moment(hd, 1.0).value, hd.gamma0() * 2.0 * m1, 1e-12);
  expect_rel(a.snr_moment(hd, 2.0).value, std::pow(hd.gamma0(), 2) * (2.0 * m2 + 2.0 * m1 * m1), 1e-12);
  expect_rel(a.snr_moment(im, 1.0).value, im.gamma0() * (2.0 * m2 + 2.0 * m1 * m1), 1e-12);
}

TEST(Surface, FractionalMomentMatchesQuadrature) {
  const LinkAnalyzer a(ris_chain(2), tied());
  const DetectionConfig d{1, 20.0, 1e-14};
  for (double r : {0.5, 1.3}) expect_rel(a.snr_moment(d, r).value, a.moment_baseline(d, r).value, 1e-6);
  expect_rel(a.capacity(d).value, a.capacity_baseline(d).value, 1e-7);
}

TEST(Surface, TiedPolesNeedOptIn) {
  const DetectionConfig d{1, 40.0, 1e-14};
  EXPECT_THROW(LinkAnalyzer(ris_chain(2)).outage_asymptotic(d, kThreshold), DegeneratePoleError);
  const LinkAnalyzer a(ris_chain(2), tied());
  expect_rel(a.outage_asymptotic(d, kThreshold).value, a.outage_exact(d, kThreshold).value, 0.05);
}

TEST(Surface, ManyElementsNeedRandomizedMode) {
  const DetectionConfig d{1, 20.0, 1e-14};
  EXPECT_THROW(LinkAnalyzer(ris_chain(3), tied()).outage_exact(d, kThreshold), UnsupportedModeError);
}

TEST(Surface, MoreElementsLowerOutage) {
  const DetectionConfig d{2, 30.0, 1e-14};
  const HopChain one = ris_chain(1), two = ris_chain(2);
  EXPECT_LT(LinkAnalyzer(two, tied()).outage_exact(d, kThreshold).value,
            LinkAnalyzer(one, tied()).outage_exact(d, kThreshold).value);
}
