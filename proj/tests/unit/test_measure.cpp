#include <cmath>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wsob/measure.hpp"

using namespace wsob;

namespace {

double density_at(PushforwardSpec spec, double t, int res = 256) {
    spec.target = {t};
    return pushforward_density(spec, res).values[0];
}

// Mean of the coarea density over a bin, by 8-point midpoint sub-sampling.
double bin_average(PushforwardSpec spec, double lo, double hi) {
    spec.target.clear();
    for (int i = 0; i < 8; ++i) spec.target.push_back(lo + (i + 0.5) * (hi - lo) / 8);
    double s = 0.0;
    for (double v : pushforward_density(spec, 256).values) s += v;
    return s / 8;
}

}  // namespace

TEST(PushforwardDensity, IdentityIsConstantOne) {
    PushforwardSpec spec = make_identity_interval();
    spec.target = PushforwardSpec::bin_centers(spec.image(), 10);
    for (double v : pushforward_density(spec, 64).values) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(PushforwardDensity, ProjectXIsFiberLength) {
    EXPECT_NEAR(density_at(make_project_x_band(2), 0.5), 0.5, 1e-10);
}

TEST(PushforwardDensity, NormSquaredFourDimensionalIsPiSquaredR) {
    EXPECT_NEAR(density_at(make_norm_squared_ball(4), 0.5), pi * pi * 0.5, 1e-6);
}

TEST(PushforwardDensity, TruncationCapsAtOne) {
    PushforwardSpec spec = make_norm_squared_ball(4);
    spec.target = {0.5};
    EXPECT_EQ(pushforward_density(spec, 64, {true}).values[0], 1.0);
}

TEST(MonteCarloDensity, IdentityBinsConcentrate) {
    WeightField mc = monte_carlo_density(make_identity_interval(), 1000000, 100, 7);
    ASSERT_EQ(mc.size(), 100u);
    for (double v : mc.values) {
        EXPECT_GE(v, 0.97);
        EXPECT_LE(v, 1.03);
    }
}

TEST(MonteCarloDensity, NormSquaredBinAtHalfMatchesClosedForm) {
    // 25 bins put a center at t = 0.5; the density is linear so the bin mean equals the center value
    WeightField mc = monte_carlo_density(make_norm_squared_ball(4), 1000000, 25, 3);
    EXPECT_NEAR(mc.points[12].x, 0.5, 1e-12);
    EXPECT_NEAR(mc.values[12], pi * pi * 0.5, 0.03 * pi * pi * 0.5);
}

TEST(MonteCarloDensity, ZeroSamplesIsInvalid) {
    EXPECT_WSOB_ERROR(monte_carlo_density(make_identity_interval(), 0, 10, 1), InvalidArgument);
}

TEST(MonteCarloDensity, SameSeedSameHistogram) {
    WeightField a = monte_carlo_density(make_norm_squared_ball(3), 20000, 16, 11);
    WeightField b = monte_carlo_density(make_norm_squared_ball(3), 20000, 16, 11);
    EXPECT_EQ(a.values, b.values);
}

// Interior bins agree with the coarea density within 5%, or within four binomial standard
// errors where a bin holds too few samples for 5% to be resolvable.
TEST(MonteCarloDensity, AgreesWithCoareaOnCatalog) {
    const long n = 1000000;
    const int bins = 64;
    for (PushforwardSpec spec : catalog_pushforwards()) {
        Interval img = spec.image();
        double w = img.length() / bins, mass = source_mass(spec);
        WeightField mc = monte_carlo_density(spec, n, bins, 5);
        double peak = 0.0;
        for (double v : mc.values) peak = std::max(peak, v);
        bool zero_lo = density_at(spec, img.lo + 1e-9 * img.length()) < 1e-3 * peak;
        bool zero_hi = density_at(spec, img.hi - 1e-9 * img.length()) < 1e-3 * peak;
        for (int i = 0; i < bins; ++i) {
            if ((zero_lo && i < 2) || (zero_hi && i >= bins - 2)) continue;
            double f = bin_average(spec, img.lo + i * w, img.lo + (i + 1) * w);
            double expected_count = n * f * w / mass;
            double tol = std::max(0.05, 4.0 / std::sqrt(expected_count));
            EXPECT_NEAR(mc.values[i], f, tol * f) << spec.name << " bin " << i;
        }
    }
}

TEST(Coarea, RadialAnnulusGivesThreePi) {
    CoareaResult r = coarea_check(make_radial_annulus(1, 2), CoareaIntegrand::One, 512);
    EXPECT_NEAR(r.lhs, 3 * pi, 1e-6);
    EXPECT_NEAR(r.rhs, 3 * pi, 1e-6);
}

TEST(Coarea, ZeroIntegrandGivesZero) {
    CoareaResult r = coarea_check(make_norm_squared_ball(3), [](const VecN&) { return 0.0; }, 64);
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_EQ(r.rhs, 0.0);
}

TEST(Coarea, ProjectXBandGivesTwoThirds) {
    CoareaResult r = coarea_check(make_project_x_band(2), CoareaIntegrand::One, 512);
    EXPECT_NEAR(r.lhs, 2.0 / 3.0, 1e-6);
    EXPECT_NEAR(r.rhs, 2.0 / 3.0, 1e-6);
}

TEST(Coarea, IdentityHoldsForCatalogAndIntegrands) {
    for (const PushforwardSpec& spec : catalog_pushforwards())
        for (CoareaIntegrand g : {CoareaIntegrand::One, CoareaIntegrand::X1Squared, CoareaIntegrand::Xi})
            EXPECT_LE(coarea_check(spec, g, 512).relative_gap(), 0.02) << spec.name << " g=" << to_string(g);
}

TEST(Coarea, DensityMassMatchesSourceMass) {
    for (PushforwardSpec spec : catalog_pushforwards()) {
        Interval img = spec.image();
        spec.target = PushforwardSpec::bin_centers(img, 400);
        double m = 0.0;
        for (double v : pushforward_density(spec, 256).values) m += v * img.length() / 400;
        double src = source_mass(spec);
        EXPECT_NEAR(m, src, 0.02 * src) << spec.name;
    }
}

TEST(LowerBound, LinearDensityHasExponentOne) {
    WeightField f;
    for (int i = 1; i < 1024; ++i) {
        double x = i / 1024.0;
        f.points.push_back({x, 0.0});
        f.values.push_back(x);
    }
    LowerBoundFit fit = fit_lower_bound(f, {}, Interval{0, 1});
    EXPECT_NEAR(fit.alpha, 1.0, 0.1);
    EXPECT_NEAR(fit.c, 1.0, 0.1);
    EXPECT_EQ(fit.violations, 0);
}

TEST(LowerBound, ConstantDensityHasExponentZero) {
    WeightField f;
    for (int i = 1; i < 256; ++i) {
        f.points.push_back({i / 256.0, 0.0});
        f.values.push_back(1.0);
    }
    LowerBoundFit fit = fit_lower_bound(f, {}, Interval{0, 1});
    EXPECT_NEAR(fit.alpha, 0.0, 1e-9);
    EXPECT_EQ(fit.violations, 0);
}

TEST(LowerBound, NormSquaredDensityVanishesLinearly) {
    PushforwardSpec spec = make_norm_squared_ball(4);
    for (int i = 1; i < 200; ++i) spec.target.push_back(i / 400.0);  // t in (0, 1/2): the zero at 0 dominates
    LowerBoundFit fit = fit_lower_bound(pushforward_density(spec, 128), {}, Interval{0, 1});
    EXPECT_NEAR(fit.alpha, 1.0, 0.1);
    EXPECT_EQ(fit.violations, 0);
}

TEST(LowerBound, NeverViolatedOnOwnSample) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        WeightField f;
        for (int i = 1; i < 200; ++i) {
            double x = i / 200.0;
            f.points.push_back({x, 0.0});
            f.values.push_back(std::pow(std::min(x, 1 - x), rng.uniform(0.0, 3.0)) * rng.uniform(0.5, 2.0));
        }
        EXPECT_EQ(fit_lower_bound(f, {}, Interval{0, 1}).violations, 0);
    }
}

TEST(WeightFieldTest, InfiniteValuesAreFlaggedAndSkipped) {
    WeightField f;
    f.points = {{0.1, 0}, {0.2, 0}, {0.3, 0}};
    f.values = {1.0, infinity, 0.0};
    EXPECT_EQ(f.infinite_nodes(), std::vector<int>{1});
    EXPECT_EQ(f.support_nodes(), (std::vector<int>{0, 1}));
    EXPECT_FALSE(f.usable(1));
    EXPECT_FALSE(f.usable(2));
}

TEST(WeightFieldTest, NegativeValuesRejected) {
    WeightField f;
    f.points = {{0.1, 0}};
    f.values = {-1.0};
    EXPECT_WSOB_ERROR(f.validate(), InvalidArgument);
}

TEST(PushforwardSpecJson, RoundTrip) {
    for (const PushforwardSpec& spec : catalog_pushforwards()) {
        PushforwardSpec back = pushforward_from_json(to_json(spec));
        EXPECT_EQ(to_json(back), to_json(spec)) << spec.name;
    }
}
