#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wsob/experiments.hpp"
#include "wsob/kernel.hpp"
#include "wsob/measure.hpp"

using namespace wsob;

namespace {

// Isolated nodes (no stencil neighbours) with unit volume: A = diag(f) for k = 0.
GridDomain isolated_nodes(int n) {
    std::vector<Point> pts;
    for (int i = 0; i < n; ++i) pts.push_back({10.0 * i, 0.0});
    return GridDomain::from_nodes(pts, std::vector<double>(n, 1.0), 1.0, 2);
}

WeightField values_on(const GridDomain& g, std::vector<double> v) {
    WeightField f;
    f.points = g.nodes();
    f.values = std::move(v);
    return f;
}

std::vector<int> random_support_nodes(const SobolevOperator& op, int n, std::uint64_t seed) {
    std::vector<int> pick = op.support;
    Rng rng(seed);
    for (std::size_t i = pick.size(); i > 1; --i) std::swap(pick[i - 1], pick[rng.index(i)]);
    pick.resize(std::min<std::size_t>(pick.size(), n));
    return pick;
}

}  // namespace

TEST(Representer, SingleNode) {
    GridDomain g = isolated_nodes(1);
    SobolevOperator op = assemble_operator(g, values_on(g, {4.0}), 0);
    std::vector<double> phi = dirac_representer(op, 0);
    EXPECT_NEAR(phi[0], 0.25, 1e-15);
    EXPECT_NEAR(kernel_matrix(op, {0}).K(0, 0), 0.25, 1e-15);
}

TEST(Representer, ReproducesRandomFunctions) {
    GridDomain g = GridDomain::build(DomainSpec::power_cusp(2), 1.0 / 32);
    SobolevOperator op = assemble_operator(g, WeightField::constant(g, 1.0), 2);
    KernelSolver solver(op);
    Rng rng(9);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> u(g.size(), 0.0);
        for (int i : op.support) u[i] = rng.normal();
        int x = op.support[rng.index(op.support.size())];
        std::vector<double> phi = dirac_representer(solver, x);
        double unorm = std::sqrt(a_inner(op, u, u));
        EXPECT_NEAR(a_inner(op, phi, u), u[x], 1e-8 * unorm);
    }
}

TEST(Representer, ZeroWeightHasEmptySupport) {
    GridDomain g = GridDomain::build(DomainSpec::power_cusp(2), 1.0 / 16);
    EXPECT_WSOB_ERROR(assemble_operator(g, WeightField::constant(g, 0.0), 1), EmptySupport);
}

TEST(Representer, NodeOutsideSupportRejected) {
    GridDomain g = GridDomain::build(DomainSpec::square(), 1.0 / 8);
    SobolevOperator op = assemble_operator(g, WeightField::on_grid(g, [](Point p) { return p.x > 0.5 ? 1.0 : 0.0; }), 1);
    int outside = g.nearest_node({0.25, 0.5});
    EXPECT_WSOB_ERROR(dirac_representer(op, outside), NotInSupport);
}

TEST(KernelMatrixTest, IdentityOperatorGivesIdentityKernel) {
    GridDomain g = isolated_nodes(3);
    KernelMatrix km = kernel_matrix(assemble_operator(g, WeightField::constant(g, 1.0), 0), {0, 1, 2});
    EXPECT_LE((km.K - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(KernelMatrixTest, DiagonalOperatorInverts) {
    GridDomain g = isolated_nodes(2);
    KernelMatrix km = kernel_matrix(assemble_operator(g, values_on(g, {2.0, 4.0}), 0), {0, 1});
    EXPECT_NEAR(km.K(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(km.K(1, 1), 0.25, 1e-15);
    EXPECT_EQ(km.K(0, 1), 0.0);
}

TEST(KernelMatrixTest, PositiveDefiniteWithProjectedDensity) {
    GridDomain g = GridDomain::build(DomainSpec::power_cusp(2), 1.0 / 32);
    PushforwardSpec band = make_project_x_band(2);
    for (const Point& p : g.nodes()) band.target.push_back(p.x);
    WeightField f = pushforward_density(band, 64);
    f.points = g.nodes();
    SobolevOperator op = assemble_operator(g, f, 2);
    KernelMatrix km = kernel_matrix(op, random_support_nodes(op, 50, 1));
    EXPECT_GT(km.min_eigenvalue(), 0.0);
}

TEST(KernelMatrixTest, SymmetricAndPositiveSemidefinite) {
    for (int k : {1, 2, 3}) {
        GridDomain g = GridDomain::build(DomainSpec::power_cusp(2), 1.0 / 64);
        SobolevOperator op = assemble_operator(g, WeightField::constant(g, 1.0), k);
        KernelMatrix km = kernel_matrix(op, random_support_nodes(op, 200, k));
        EXPECT_LE(km.symmetry_error(), 1e-10);
        EXPECT_GE(km.min_eigenvalue(), -1e-10 * km.norm2());
        EXPECT_LE(km.stats.max_residual, representer_tolerance);
    }
}

TEST(KernelMatrixTest, EntriesAreRepresenterValues) {
    GridDomain g = GridDomain::build(DomainSpec::disk(), 1.0 / 16);
    SobolevOperator op = assemble_operator(g, WeightField::constant(g, 1.0), 2);
    KernelSolver solver(op);
    std::vector<int> nodes = random_support_nodes(op, 6, 2);
    KernelMatrix km = kernel_matrix(solver, nodes);
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        std::vector<double> phi = dirac_representer(solver, nodes[j]);
        for (std::size_t i = 0; i < nodes.size(); ++i)
            EXPECT_NEAR(km.K(i, j), phi[nodes[i]], 1e-9 * km.K.cwiseAbs().maxCoeff());
    }
}

TEST(KernelMatrixTest, MinimumNormInterpolant) {
    GridDomain g = GridDomain::build(DomainSpec::power_cusp(2), 1.0 / 32);
    SobolevOperator op = assemble_operator(g, WeightField::constant(g, 1.0), 2);
    KernelSolver solver(op);
    std::vector<int> nodes = random_support_nodes(op, 5, 3);
    KernelMatrix km = kernel_matrix(solver, nodes);
    std::vector<std::vector<double>> phis;
    for (int x : nodes) phis.push_back(dirac_representer(solver, x));
    Eigen::VectorXd y(5);
    y << 1.0, -2.0, 0.5, 3.0, 0.0;
    auto combine = [&](const std::vector<double>& base, const Eigen::VectorXd& coef) {
        std::vector<double> s = base;
        for (int j = 0; j < 5; ++j)
            for (std::size_t n = 0; n < s.size(); ++n) s[n] += coef[j] * phis[j][n];
        return s;
    };
    Eigen::VectorXd alpha = km.K.ldlt().solve(y);
    std::vector<double> best = combine(std::vector<double>(g.size(), 0.0), alpha);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(best[nodes[i]], y[i], 1e-8);
    double best_norm = a_inner(op, best, best);
    Rng rng(4);
    for (int t = 0; t < 10; ++t) {
        std::vector<double> w(g.size(), 0.0);
        for (int i : op.support) w[i] = 0.1 * rng.normal();
        Eigen::VectorXd r(5);
        for (int i = 0; i < 5; ++i) r[i] = y[i] - w[nodes[i]];
        std::vector<double> cand = combine(w, km.K.ldlt().solve(r));
        for (int i = 0; i < 5; ++i) ASSERT_NEAR(cand[nodes[i]], y[i], 1e-8);
        EXPECT_GE(a_inner(op, cand, cand), best_norm * (1 - 1e-10));
    }
}

TEST(KernelMatrixTest, ScaleCovariance) {
    GridDomain g = GridDomain::build(DomainSpec::power_cusp(2), 1.0 / 32);
    InnerMetricGraph graph(g);
    const double c = 7.0;
    SobolevOperator op1 = assemble_operator(g, WeightField::constant(g, 1.0), 2);
    SobolevOperator opc = assemble_operator(g, WeightField::constant(g, c), 2);
    KernelSolver s1(op1), sc(opc);
    std::vector<int> nodes = random_support_nodes(op1, 20, 5);
    KernelMatrix k1 = kernel_matrix(s1, nodes), kc = kernel_matrix(sc, nodes);
    EXPECT_LE((kc.K * c - k1.K).cwiseAbs().maxCoeff(), 1e-10 * k1.K.cwiseAbs().maxCoeff());
    auto pairs = sample_pairs(graph, op1.support, 60, 6, {0, 0});
    auto r1 = feature_lipschitz_ratio(s1, graph, pairs), rc = feature_lipschitz_ratio(sc, graph, pairs);
    std::size_t arg1 = 0, argc = 0;
    for (std::size_t i = 0; i < r1.size(); ++i) {
        EXPECT_NEAR(rc[i].ratio, r1[i].ratio / std::sqrt(c), 1e-9 * r1[i].ratio);
        if (r1[i].ratio > r1[arg1].ratio) arg1 = i;
        if (rc[i].ratio > rc[argc].ratio) argc = i;
    }
    EXPECT_EQ(arg1, argc);
}

TEST(KernelMatrixTest, NodeListLimits) {
    GridDomain g = isolated_nodes(2);
    SobolevOperator op = assemble_operator(g, WeightField::constant(g, 1.0), 0);
    EXPECT_WSOB_ERROR(kernel_matrix(op, {}), InvalidArgument);
    EXPECT_WSOB_ERROR(kernel_matrix(op, std::vector<int>(max_kernel_nodes + 1, 0)), InvalidArgument);
}

TEST(KernelMatrixTest, CsvExportHasOneRowPerNode) {
    GridDomain g = isolated_nodes(3);
    KernelMatrix km = kernel_matrix(assemble_operator(g, WeightField::constant(g, 2.0), 0), {0, 1, 2});
    std::ostringstream os;
    write_csv(os, km);
    EXPECT_EQ(os.str(), "0.5,0,0\n0,0.5,0\n0,0,0.5\n");
}

TEST(FeatureRatio, CoincidentPairRejected) {
    GridDomain g = GridDomain::build(DomainSpec::square(), 1.0 / 8);
    InnerMetricGraph graph(g);
    SobolevOperator op = assemble_operator(g, WeightField::constant(g, 1.0), 1);
    KernelSolver solver(op);
    EXPECT_WSOB_ERROR(feature_lipschitz_ratio(solver, graph, {{3, 3}}), InvalidArgument);
}

TEST(FeatureRatio, NormMatchesKernelExpansion) {
    GridDomain g = GridDomain::build(DomainSpec::square(), 1.0 / 16);
    InnerMetricGraph graph(g);
    SobolevOperator op = assemble_operator(g, WeightField::constant(g, 1.0), 2);
    KernelSolver solver(op);
    auto rows = feature_lipschitz_ratio(solver, graph, sample_pairs(graph, op.support, 30, 1, {0.5, 0.5}));
    for (const FeaturePair& r : rows) {
        KernelMatrix km = kernel_matrix(solver, {r.a, r.b});
        double expansion = std::sqrt(km.K(0, 0) - 2 * km.K(0, 1) + km.K(1, 1));
        EXPECT_NEAR(r.norm, expansion, 1e-6 * expansion);
        EXPECT_DOUBLE_EQ(r.ratio, r.norm / r.d_x);
    }
}

TEST(FeatureRatio, SquareSecondOrderStableUnderRefinement) {
    double coarse = max_feature_ratio(DomainSpec::square(), 1.0 / 32, 2, 1000, 1);
    double fine = max_feature_ratio(DomainSpec::square(), 1.0 / 64, 2, 1000, 1);
    EXPECT_LE(fine / coarse, 2.0);
    EXPECT_GE(fine / coarse, 0.5);
}

TEST(FeatureRatio, FlatCuspGrowsAsTipIsApproached) {
    for (int k = 1; k <= 4; ++k) {
        double a = max_feature_ratio(DomainSpec::flat_cusp().with_eps_cut(0.1), 1.0 / 64, k, 300, 1);
        double b = max_feature_ratio(DomainSpec::flat_cusp().with_eps_cut(0.05), 1.0 / 64, k, 300, 1);
        EXPECT_GE(b / a, 4.0) << "k=" << k;
    }
}
