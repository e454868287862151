#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wsob/experiments.hpp"
#include "wsob/rng.hpp"
#include "wsob/sobolev.hpp"

using namespace wsob;

namespace {

template <class Fn>
std::vector<double> nodal(const GridDomain& g, Fn fn) {
    std::vector<double> u;
    for (const Point& p : g.nodes()) u.push_back(fn(p));
    return u;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

}  // namespace

TEST(DifferenceStencil, ExactOnPolynomialsUpToAccuracy) {
    for (int m = 1; m <= 4; ++m)
        for (int back = 0; back <= m + 2; ++back)
            for (int fwd = 0; fwd <= m + 2; ++fwd) {
                auto st = DifferenceStencil::choose(m, back, fwd, 1.0);
                if (st.empty()) {
                    EXPECT_LT(back + fwd + 1, m + 1);
                    continue;
                }
                for (int o : st.offsets) {
                    EXPECT_GE(o, -back);
                    EXPECT_LE(o, fwd);
                }
                for (int j = 0; j < m + st.accuracy; ++j) {
                    double s = 0.0;
                    for (std::size_t q = 0; q < st.offsets.size(); ++q) s += st.coeffs[q] * std::pow(st.offsets[q], j);
                    EXPECT_NEAR(s, j == m ? factorial(m) : 0.0, 1e-10 * factorial(m))
                        << "m=" << m << " back=" << back << " fwd=" << fwd << " j=" << j;
                }
            }
}

TEST(LpNorm, UnitFunctionOnSquareHasNormOne) {
    GridDomain g = GridDomain::build(DomainSpec::square(), 1.0 / 64);
    EXPECT_NEAR(lp_norm(std::vector<double>(g.size(), 1.0), g, WeightField::constant(g, 1.0), 2), 1.0, 1.0 / 64);
}

TEST(LpNorm, LinearWeightOnInterval) {
    GridDomain g = GridDomain::build(DomainSpec::interval(), 1.0 / 1024);
    WeightField f = WeightField::on_grid(g, [](Point p) { return p.x; });
    EXPECT_NEAR(lp_norm(std::vector<double>(g.size(), 1.0), g, f, 2), 1 / std::sqrt(2.0), 0.01 / std::sqrt(2.0));
}

TEST(LpNorm, CoordinateOnInterval) {
    GridDomain g = GridDomain::build(DomainSpec::interval(), 1.0 / 1024);
    std::vector<double> u = nodal(g, [](Point p) { return p.x; });
    EXPECT_NEAR(lp_norm(u, g, WeightField::constant(g, 1.0), 2), 1 / std::sqrt(3.0), 0.01 / std::sqrt(3.0));
}

TEST(LpNorm, RejectsPBelowOne) {
    GridDomain g = GridDomain::build(DomainSpec::interval(), 1.0 / 16);
    EXPECT_WSOB_ERROR(lp_norm(std::vector<double>(g.size(), 1.0), g, WeightField::constant(g, 1.0), 0.5),
                      InvalidArgument);
}

TEST(SobolevNorm, CoordinateOnIntervalFirstOrder) {
    GridDomain g = GridDomain::build(DomainSpec::interval(), 1.0 / 1024);
    std::vector<double> u = nodal(g, [](Point p) { return p.x; });
    double expected = 1 / std::sqrt(3.0) + 1.0;
    EXPECT_NEAR(sobolev_norm(u, g, WeightField::constant(g, 1.0), 1, 2), expected, 0.01 * expected);
}

TEST(SobolevNorm, ZeroFunctionHasZeroNorm) {
    GridDomain g = GridDomain::build(DomainSpec::power_cusp(2), 1.0 / 32);
    EXPECT_EQ(sobolev_norm(std::vector<double>(g.size(), 0.0), g, WeightField::constant(g, 1.0), 3, 2), 0.0);
}

TEST(SobolevNorm, InverseXOnFlatCuspStableUnderRefinement) {
    auto norm_at = [](double h) {
        GridDomain g = GridDomain::build(DomainSpec::flat_cusp().with_eps_cut(0.01), h);
        std::vector<double> u = nodal(g, [](Point p) { return 1.0 / p.x; });
        return sobolev_norm(u, g, WeightField::constant(g, 1.0), 2, 2);
    };
    double a = norm_at(1.0 / 1024), b = norm_at(1.0 / 2048);
    EXPECT_TRUE(std::isfinite(a));
    EXPECT_NEAR(b, a, 0.01 * a);
}

TEST(SobolevNorm, ConvergesAtSecondOrderOnSquare) {
    // u = x^2 + y: ||u||_2 = sqrt(1/5 + 1/3 + 1/3), ||grad u||_2 = sqrt(4/3 + 1)
    double exact = std::sqrt(13.0 / 15.0) + std::sqrt(7.0 / 3.0);
    std::vector<double> hs, errs;
    for (int n : {64, 128, 256, 512, 1024}) {
        GridDomain g = GridDomain::build(DomainSpec::square(), 1.0 / n);
        std::vector<double> u = nodal(g, [](Point p) { return p.x * p.x + p.y; });
        hs.push_back(1.0 / n);
        errs.push_back(std::abs(sobolev_norm(u, g, WeightField::constant(g, 1.0), 1, 2) - exact));
    }
    EXPECT_GE(fit_exponent(hs, errs).slope, 2.0 - 0.3);
}

TEST(SobolevNorm, MonotoneInWeight) {
    GridDomain g = GridDomain::build(DomainSpec::power_cusp(2), 1.0 / 32);
    WeightField f = WeightField::on_grid(g, [](Point p) { return p.x * p.x; });
    WeightField h = WeightField::on_grid(g, [](Point p) { return p.x; });
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> u(g.size());
        for (double& v : u) v = rng.normal();
        DifferenceOperators ops(g, 2);
        auto lf = sobolev_level_norms(u, ops, f, 2.5), lh = sobolev_level_norms(u, ops, h, 2.5);
        for (std::size_t i = 0; i < lf.size(); ++i) EXPECT_LE(lf[i], lh[i]);
    }
}

TEST(SobolevNorm, SumOfLevelsEquivalentToQuadraticForm) {
    GridDomain g = GridDomain::build(DomainSpec::power_cusp(2), 1.0 / 16);
    WeightField f = WeightField::on_grid(g, [](Point p) { return 2 * p.x * p.x; });
    Rng rng(5);
    for (int k = 0; k <= 3; ++k) {
        SobolevOperator op = assemble_operator(g, f, k);
        DifferenceOperators ops(g, k);
        for (int t = 0; t < 100; ++t) {
            std::vector<double> u(g.size());
            for (double& v : u) v = rng.normal();
            double q = std::sqrt(op.quadratic_form(u)), sq = 0.0, l1 = 0.0;
            for (double v : sobolev_level_norms(u, ops, f, 2)) {
                sq += v * v;
                l1 += v;
            }
            EXPECT_NEAR(q * q, sq, 1e-10 * sq);
            EXPECT_LE(q, l1 * (1 + 1e-12));
            EXPECT_LE(l1, std::sqrt(k + 1.0) * q * (1 + 1e-12));
        }
    }
}

TEST(SobolevNorm, SlicedNormComparableToDomainNorm) {
    struct Case {
        DomainSpec spec;
        double eta_max;
    };
    for (const Case& c : {Case{DomainSpec::disk(), 1.0}, Case{DomainSpec::sector(), 1.0},
                          Case{DomainSpec::power_cusp(2), std::sqrt(2.0)}}) {
        auto u = [](Point p) { return 1.0 + p.x - 0.5 * p.y; };
        auto f = [](Point p) { return 1.0 + p.x * p.x; };
        GridDomain g = GridDomain::build(c.spec, 1.0 / 256);
        double whole = lp_norm(nodal(g, u), g, WeightField::on_grid(g, f), 2);
        double sliced = sliced_lp_norm(c.spec, u, f, 2, c.eta_max);
        EXPECT_GE(sliced / whole, 0.5) << to_string(c.spec.kind);
        EXPECT_LE(sliced / whole, 2.0) << to_string(c.spec.kind);
    }
}

TEST(Operator, SingleNodeZerothOrder) {
    GridDomain g = GridDomain::from_nodes({{0.0, 0.0}}, {1.0}, 1.0, 2);
    WeightField f;
    f.points = g.nodes();
    f.values = {2.0};
    SobolevOperator op = assemble_operator(g, f, 0);
    ASSERT_EQ(op.A.rows(), 1);
    EXPECT_EQ(op.A.coeff(0, 0), 2.0);
}

TEST(Operator, ZerothOrderIsDiagonalMass) {
    GridDomain g = GridDomain::build(DomainSpec::disk(), 1.0 / 8);
    WeightField f = WeightField::on_grid(g, [](Point p) { return 1.0 + p.x * p.x; });
    SobolevOperator op = assemble_operator(g, f, 0);
    Eigen::MatrixXd A(op.A);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j)
            EXPECT_DOUBLE_EQ(A(i, j), i == j ? f.values[i] * g.cell_volume()[i] : 0.0);
}

TEST(Operator, QuadraticFormOfCoordinate) {
    GridDomain g = GridDomain::build(DomainSpec::interval(), 1.0 / 1024);
    SobolevOperator op = assemble_operator(g, WeightField::constant(g, 1.0), 1);
    EXPECT_NEAR(op.quadratic_form(nodal(g, [](Point p) { return p.x; })), 4.0 / 3.0, 0.02 * 4.0 / 3.0);
}

TEST(Operator, SymmetricAndDefiniteOnSupport) {
    GridDomain g = GridDomain::build(DomainSpec::power_cusp(2), 1.0 / 16);
    WeightField f = WeightField::on_grid(g, [](Point p) { return p.x > 0.5 ? 1.0 : 0.0; });
    for (int k = 1; k <= 3; ++k) {
        SobolevOperator op = assemble_operator(g, f, k);
        Eigen::MatrixXd A(op.A);
        EXPECT_LE((A - A.transpose()).cwiseAbs().maxCoeff(), 1e-12 * A.cwiseAbs().maxCoeff());
        Eigen::MatrixXd R(op.restricted());
        EXPECT_EQ(static_cast<std::size_t>(R.rows()), op.support.size());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
        EXPECT_GT(es.eigenvalues().minCoeff(), 0.0) << "k=" << k;
    }
}

TEST(Operator, EmptySupportRejected) {
    GridDomain g = GridDomain::build(DomainSpec::square(), 1.0 / 8);
    EXPECT_WSOB_ERROR(assemble_operator(g, WeightField::constant(g, 0.0), 1), EmptySupport);
}

TEST(Operator, CoordinateExportListsNonzeros) {
    GridDomain g = GridDomain::build(DomainSpec::square(), 1.0 / 8);
    SobolevOperator op = assemble_operator(g, WeightField::constant(g, 1.0), 1);
    std::ostringstream os;
    write_coo(os, op.A);
    std::string text = os.str();
    EXPECT_EQ(static_cast<long>(std::count(text.begin(), text.end(), '\n')), static_cast<long>(op.A.nonZeros()) + 1);
}

TEST(Operator, UnderflowPolicyThrowReportsNode) {
    GridDomain g = GridDomain::build(DomainSpec::power_cusp(2), 1.0 / 8);
    EXPECT_WSOB_ERROR(DifferenceOperators(g, 3, UnderflowPolicy::Throw), StencilUnderflow);
    EXPECT_GT(DifferenceOperators(g, 3).underflow_count(), 0);
}

TEST(SliceLemma, ZeroFunctionGivesZeroRatios) {
    GridDomain g = GridDomain::build(DomainSpec::power_cusp(2), 1.0 / 64);
    auto one = [](Point) { return 1.0; };
    SliceRatioTable t = slice_lemma_ratio(g, WeightField::constant(g, 1.0), [](Point) { return 0.0; }, one, 2,
                                          {1.0 / 64, 1.0 / 16, 1.0 / 4});
    for (const SliceRatioRow& r : t.rows) EXPECT_EQ(r.ratio, 0.0);
}

namespace {

SliceRatioTable bump_table(double p) {
    static GridDomain g = GridDomain::build(DomainSpec::power_cusp(2), 1.0 / 512);
    auto bump = [](Point x) { return std::max(0.0, 1.0 - norm(x) / 0.5); };
    std::vector<double> etas;
    for (int j = 8; j >= 2; --j) etas.push_back(std::ldexp(1.0, -j));
    return slice_lemma_ratio(g, WeightField::constant(g, 1.0), bump, [](Point) { return 1.0; }, p, etas);
}

}  // namespace

TEST(SliceLemma, BumpRatiosBoundedForPTwo) {
    SliceRatioTable t = bump_table(2);
    double lo = infinity, hi = 0.0;
    for (const SliceRatioRow& r : t.rows) {
        lo = std::min(lo, r.ratio);
        hi = std::max(hi, r.ratio);
    }
    EXPECT_LE(hi / lo, 20.0);
}

TEST(SliceLemma, SliceNormSlopeForPFour) {
    SliceRatioTable t = bump_table(4);
    std::vector<double> etas, norms;
    for (const SliceRatioRow& r : t.rows) {
        etas.push_back(r.eta);
        norms.push_back(r.slice_norm);
    }
    EXPECT_GE(fit_exponent(etas, norms).slope, 0.25 - 0.1);
}
