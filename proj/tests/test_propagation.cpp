#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "surfmimo/config.hpp"
#include "surfmimo/propagation.hpp"

using namespace surfmimo;

namespace {

MaterialParams test_material(double refl = 0.6) {
  return MaterialParams("test", {{1e9, 0.5, 60.0}, {3e9, 0.7, 150.0}}, 0.01, refl);
}

}  // namespace

TEST(FrequencyBand, AcceptsIsmChannels) {
  EXPECT_EQ(FrequencyBand(2.437e9, 40e6).band_id(), IsmBand::ism_2_4ghz);
  EXPECT_EQ(FrequencyBand(915e6, 20e6).band_id(), IsmBand::ism_915mhz);
  EXPECT_EQ(FrequencyBand(5190e6, 40e6).band_id(), IsmBand::ism_5ghz);
  EXPECT_DOUBLE_EQ(FrequencyBand(2.437e9, 40e6).low_edge_hz(), 2.417e9);
}

TEST(FrequencyBand, RejectsBadInputs) {
  EXPECT_THROW(FrequencyBand(2.437e9, 80e6), ConfigError);
  EXPECT_THROW(FrequencyBand(3.0e9, 20e6), ConfigError);
  EXPECT_THROW(FrequencyBand(2.4e9, 40e6), ConfigError);  // straddles the lower edge
  EXPECT_THROW(FrequencyBand(-1.0, 20e6), ConfigError);
}

TEST(MaterialParams, InterpolatesLinearly) {
  const auto m = test_material();
  EXPECT_DOUBLE_EQ(m.alpha(2e9), 0.6);
  EXPECT_DOUBLE_EQ(m.beta(2e9), 105.0);
  EXPECT_TRUE(m.covers(1e9));
  EXPECT_FALSE(m.covers(3.1e9));
  EXPECT_THROW(m.alpha(0.5e9), CoverageError);
}

TEST(MaterialParams, RejectsInvalidTables) {
  EXPECT_THROW(MaterialParams("x", {}, 0.01, 0.5), ConfigError);
  EXPECT_THROW(MaterialParams("x", {{1e9, 0.5, 60.0}}, 0.0, 0.5), ConfigError);
  EXPECT_THROW(MaterialParams("x", {{1e9, 0.5, 60.0}}, 0.01, 1.5), ConfigError);
  EXPECT_THROW(MaterialParams("x", {{1e9, -0.5, 60.0}}, 0.01, 0.5), ConfigError);
  // beta at or below omega / c means a phase velocity of at least c
  EXPECT_THROW(MaterialParams("x", {{1e9, 0.5, 20.0}}, 0.01, 0.5), DegenerateMaterialError);
  EXPECT_THROW(MaterialParams("x", {{1e9, 0.5, 60.0}, {1e9, 0.6, 70.0}}, 0.01, 0.5), ConfigError);
}

TEST(MaterialParams, FromConductorUsesSkinDepth) {
  const double f[] = {1e9, 4e9};
  const auto m = MaterialParams::from_conductor("cu", 5.8e7, kVacuumPermeability, f, 0.01, 0.5);
  const double k1 = std::sqrt(kPi * 1e9 * kVacuumPermeability * 5.8e7);
  EXPECT_NEAR(m.alpha(1e9), k1, 1e-9 * k1);
  EXPECT_DOUBLE_EQ(m.alpha(1e9), m.beta(1e9));
  // scales with sqrt(f)
  EXPECT_NEAR(m.beta(4e9) / m.beta(1e9), 2.0, 1e-12);
  EXPECT_THROW(MaterialParams::from_conductor("cu", 0.0, kVacuumPermeability, f, 0.01, 0.5), ConfigError);
}

TEST(SurfaceGain, UnitMagnitudeAtD0WithoutLoss) {
  const auto m = test_material();
  const Complex g = surface_gain(0.01, 1e9, m);
  EXPECT_NEAR(std::abs(g), std::exp(-0.5 * 0.01), 1e-15);
  EXPECT_NEAR(std::arg(g), -60.0 * 0.01, 1e-15);
}

TEST(SurfaceGain, LogLinearInDistance) {
  const auto m = test_material();
  for (double d = 0.01; d <= 5.0; d += 0.0731) {
    const double lhs = std::log(std::abs(surface_gain(d, 2e9, m)) * d / m.d0());
    EXPECT_NEAR(lhs, -m.alpha(2e9) * d, 1e-12);
  }
}

TEST(SurfaceGain, DecaysMonotonically) {
  const auto m = test_material();
  double prev = std::abs(surface_gain(m.d0(), 2e9, m));
  for (double d = 0.02; d < 5.0; d += 0.05) {
    const double cur = std::abs(surface_gain(d, 2e9, m));
    EXPECT_LT(cur, prev);
    prev = cur;
  }
}

TEST(SurfaceGain, HigherFrequencyLosesMore) {
  const auto m = test_material();
  EXPECT_LT(std::abs(surface_gain(1.0, 2.9e9, m)), std::abs(surface_gain(1.0, 1.1e9, m)));
}

TEST(SurfaceGain, PhaseAccumulatesAtBeta) {
  const auto m = test_material();
  const Complex a = surface_gain(0.5, 2e9, m);
  const Complex b = surface_gain(0.5 + 0.01, 2e9, m);
  EXPECT_NEAR(std::arg(b / a), -m.beta(2e9) * 0.01, 1e-12);
}

TEST(SurfaceGain, Errors) {
  const auto m = test_material();
  EXPECT_THROW(surface_gain(0.005, 2e9, m), NearFieldError);
  EXPECT_THROW(surface_gain(0.0, 2e9, m), DomainError);
  EXPECT_THROW(surface_gain(-1.0, 2e9, m), DomainError);
  EXPECT_THROW(surface_gain(std::nan(""), 2e9, m), DomainError);
  EXPECT_THROW(surface_gain(1.0, 5e9, m), CoverageError);
}

TEST(AirGain, ExponentLaw) {
  for (double p : {1.0, 2.0}) {
    const AirModel air{0.05, p};
    for (double d : {0.05, 0.1, 0.77, 3.0}) {
      EXPECT_NEAR(std::abs(air_gain(d, 2.4e9, air)), std::pow(0.05 / d, p), 1e-15);
    }
  }
}

TEST(AirGain, PhaseIsFreeSpace) {
  const double d = 0.8;
  const Complex g = air_gain(d, 2.4e9);
  const double expected = std::remainder(-kTwoPi * 2.4e9 * d / kSpeedOfLight, kTwoPi);
  EXPECT_NEAR(std::remainder(std::arg(g) - expected, kTwoPi), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(air_gain(0.05, 2.4e9)), 1.0, 1e-15);
}

TEST(AirGain, Errors) {
  EXPECT_THROW(air_gain(0.01, 2.4e9), NearFieldError);
  EXPECT_THROW(air_gain(0.0, 2.4e9), DomainError);
}

TEST(PhaseVelocity, BelowLight) {
  const auto m = test_material();
  const double v = phase_velocity(2e9, m);
  EXPECT_NEAR(v, kTwoPi * 2e9 / 105.0, 1e-3);
  EXPECT_LT(v, kSpeedOfLight);
  EXPECT_DOUBLE_EQ(phase_velocity(FrequencyBand(2.437e9, 40e6), m), phase_velocity(2.437e9, m));
}

TEST(Calibrate, RecoversNoiselessParameters) {
  const auto truth = MaterialParams("t", {{1e9, 0.35, 60.0}}, 0.02, 0.5);
  std::vector<AttenuationSample> s;
  for (double d = 0.1; d <= 3.0; d += 0.2) s.push_back({d, received_power_dbm(-3.0, d, 1e9, truth)});
  const auto r = calibrate(s, -3.0);
  EXPECT_NEAR(r.alpha_np_per_m, 0.35, 1e-9);
  EXPECT_NEAR(r.d0_m, 0.02, 1e-9);
  EXPECT_LT(r.residual_rms_db, 1e-9);
  EXPECT_FALSE(r.alpha_clamped);
}

TEST(Calibrate, ThreeCollinearSamplesFitExactly) {
  const auto truth = MaterialParams("t", {{1e9, 1.2, 60.0}}, 0.01, 0.5);
  const AttenuationSample s[] = {{0.5, received_power_dbm(0.0, 0.5, 1e9, truth)},
                                 {1.0, received_power_dbm(0.0, 1.0, 1e9, truth)},
                                 {2.0, received_power_dbm(0.0, 2.0, 1e9, truth)}};
  const auto r = calibrate(s, 0.0);
  EXPECT_NEAR(r.residual_rms_db, 0.0, 1e-9);
  EXPECT_NEAR(r.alpha_np_per_m, 1.2, 1e-9);
}

// Noisy samples: the closed-form fit must agree with a brute-force search of
// the same least-squares objective, and land near the truth.
TEST(Calibrate, NoisyFitMatchesGridSearch) {
  const double alpha = 0.6;
  const double d0 = 0.015;
  const auto truth = MaterialParams("t", {{1e9, alpha, 60.0}}, d0, 0.5);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<AttenuationSample> s;
  for (int k = 0; k < 20; ++k) {
    const double d = 0.2 + 0.2 * k;
    s.push_back({d, received_power_dbm(0.0, d, 1e9, truth) + noise(rng)});
  }
  const auto r = calibrate(s, 0.0);

  auto sse = [&](double a, double g0) {
    double e = 0.0;
    for (const auto& x : s) {
      const double model = 20.0 * std::log10(std::exp(-a * x.distance_m) * g0 / x.distance_m);
      e += (x.power_dbm - model) * (x.power_dbm - model);
    }
    return e;
  };
  double best = 1e300, best_a = 0.0, best_d0 = 0.0;
  for (double a = 0.3; a <= 0.9; a += 0.0005) {
    for (double g = 0.010; g <= 0.020; g += 0.00002) {
      const double e = sse(a, g);
      if (e < best) {
        best = e;
        best_a = a;
        best_d0 = g;
      }
    }
  }
  EXPECT_LE(sse(r.alpha_np_per_m, r.d0_m), best + 1e-9);
  EXPECT_NEAR(r.alpha_np_per_m, best_a, 1e-3);
  EXPECT_NEAR(r.d0_m, best_d0, 1e-4);
  EXPECT_NEAR(r.alpha_np_per_m, alpha, 0.1 * alpha);
  EXPECT_NEAR(r.d0_m, d0, 0.1 * d0);
}

TEST(Calibrate, Errors) {
  const AttenuationSample two[] = {{1.0, -40.0}, {2.0, -50.0}};
  EXPECT_THROW(calibrate(two, 0.0), FitError);
  const AttenuationSample same[] = {{1.0, -40.0}, {1.0, -41.0}, {1.0, -42.0}};
  EXPECT_THROW(calibrate(same, 0.0), FitError);
  const AttenuationSample bad[] = {{1.0, -40.0}, {-2.0, -41.0}, {3.0, -42.0}};
  EXPECT_THROW(calibrate(bad, 0.0), FitError);
}

TEST(Calibrate, ClampsNonPositiveAlpha) {
  // Power grows faster than 1/d allows: the unconstrained slope is positive.
  const AttenuationSample s[] = {{1.0, -40.0}, {2.0, -30.0}, {3.0, -20.0}};
  const auto r = calibrate(s, 0.0);
  EXPECT_TRUE(r.alpha_clamped);
  EXPECT_DOUBLE_EQ(r.alpha_np_per_m, kMinFittedAlpha);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_GT(r.d0_m, 0.0);
}

TEST(ReceivedPower, SpraypaintLinkBudgetAt16Feet) {
  const auto m = load_material("spraypaint").first;
  EXPECT_GE(received_power_dbm(-3.0, feet(16.0), 2.437e9, m), -70.0);
}
