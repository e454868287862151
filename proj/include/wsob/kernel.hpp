#pragma once

// Dirac representers phi_x = A^{-1} e_x and the kernel k(x, x') = <phi_x, phi_x'>_A.
//
// A = G^T G is never factored directly: a sparse QR of the weighted difference matrix
// G = Q R P^T gives A = P R^T R P^T, and the half solve z_x = R^{-T} P^T e_x satisfies
// k(x, x') = z_x . z_x'. Its error grows with cond(A)^(1/2) rather than cond(A).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SPQRSupport>
#include <Eigen/Sparse>

#include "wsob/core.hpp"
#include "wsob/error.hpp"
#include "wsob/metric.hpp"
#include "wsob/rng.hpp"
#include "wsob/sobolev.hpp"

namespace wsob {

struct SolverStats {
    int solves = 0;
    double max_residual = 0.0;  // normwise backward error ||e - A phi|| / (||A|| ||phi|| + ||e||)
};

class KernelSolver {
public:
    explicit KernelSolver(const SobolevOperator& op) : op_(&op) {
        require(!op.support.empty(), ErrorCode::EmptySupport, "operator has no support node");
        position_.assign(op.A.rows(), -1);
        for (std::size_t i = 0; i < op.support.size(); ++i) position_[op.support[i]] = static_cast<int>(i);
        qr_ = std::make_unique<Eigen::SPQR<Eigen::SparseMatrix<double>>>();
        qr_->setPivotThreshold(0.0);
        Eigen::SparseMatrix<double> G = op.G;
        qr_->compute(G);
        Eigen::Index n = static_cast<Eigen::Index>(op.support.size());
        if (qr_->info() != Eigen::Success || qr_->rank() < n)
            throw Error(ErrorCode::SingularOperator, "QR of the weighted difference matrix is rank deficient");
        Rt_ = Eigen::SparseMatrix<double, Eigen::RowMajor>(qr_->matrixR().topLeftCorner(n, n).transpose());
        perm_ = qr_->colsPermutation();
        for (Eigen::Index i = 0; i < n; ++i)
            if (!(std::abs(Rt_.coeff(i, i)) > 0))
                throw Error(ErrorCode::SingularOperator, "zero pivot in the triangular factor");
        // 1-norm of A restricted to the support
        Eigen::SparseMatrix<double> Ar = op.restricted();
        for (int c = 0; c < Ar.outerSize(); ++c) {
            double s = 0.0;
            for (Eigen::SparseMatrix<double>::InnerIterator it(Ar, c); it; ++it) s += std::abs(it.value());
            a_norm_ = std::max(a_norm_, s);
        }
        a_restricted_ = std::move(Ar);
    }

    const SobolevOperator& op() const { return *op_; }
    std::size_t support_size() const { return op_->support.size(); }
    int position(int node) const { return node >= 0 && node < static_cast<int>(position_.size()) ? position_[node] : -1; }

    int checked_position(int node) const {
        int p = position(node);
        if (p < 0) throw Error(ErrorCode::NotInSupport, "node " + std::to_string(node) + " is not a support node");
        return p;
    }

    /// z = R^{-T} P^T b for b given on support positions.
    Eigen::VectorXd half_solve(const Eigen::VectorXd& b) const {
        Eigen::VectorXd pb = perm_.transpose() * b;
        return Rt_.triangularView<Eigen::Lower>().solve(pb);
    }

    Eigen::VectorXd half_solve_node(int node) const {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(support_size()));
        e[checked_position(node)] = 1.0;
        return half_solve(e);
    }

    /// phi = P R^{-1} z on support positions.
    Eigen::VectorXd full_solve(const Eigen::VectorXd& b) const {
        Eigen::VectorXd z = half_solve(b);
        Eigen::VectorXd y = Rt_.transpose().triangularView<Eigen::Upper>().solve(z);
        return perm_ * y;
    }

    double backward_error(const Eigen::VectorXd& phi, const Eigen::VectorXd& b) const {
        Eigen::VectorXd r = b - a_restricted_ * phi;
        return r.lpNorm<1>() / (a_norm_ * phi.lpNorm<1>() + b.lpNorm<1>());
    }

    const Eigen::SparseMatrix<double>& restricted() const { return a_restricted_; }

    SolverStats& stats() const { return stats_; }

private:
    const SobolevOperator* op_;
    std::vector<int> position_;
    std::unique_ptr<Eigen::SPQR<Eigen::SparseMatrix<double>>> qr_;
    Eigen::SparseMatrix<double, Eigen::RowMajor> Rt_;
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, long> perm_;
    Eigen::SparseMatrix<double> a_restricted_;
    double a_norm_ = 0.0;
    mutable SolverStats stats_;
};

inline constexpr double representer_tolerance = 1e-10;

/// Nodal vector phi_x with A phi_x = e_x on the support (zero elsewhere).
inline std::vector<double> dirac_representer(const KernelSolver& solver, int node) {
    const SobolevOperator& op = solver.op();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(solver.support_size()));
    e[solver.checked_position(node)] = 1.0;
    Eigen::VectorXd phi = solver.full_solve(e);
    double res = solver.backward_error(phi, e);
    // one step of iterative refinement if needed
    if (res > representer_tolerance) {
        phi += solver.full_solve(e - solver.restricted() * phi);
        res = solver.backward_error(phi, e);
    }
    SolverStats& st = solver.stats();
    ++st.solves;
    st.max_residual = std::max(st.max_residual, res);
    if (!(res <= representer_tolerance))
        throw Error(ErrorCode::SingularOperator, "representer solve did not reach the residual tolerance");
    std::vector<double> out(op.A.rows(), 0.0);
    for (std::size_t i = 0; i < op.support.size(); ++i) out[op.support[i]] = phi[static_cast<Eigen::Index>(i)];
    return out;
}

inline std::vector<double> dirac_representer(const SobolevOperator& op, int node) {
    KernelSolver solver(op);
    return dirac_representer(solver, node);
}

/// <u, v>_A for nodal vectors.
inline double a_inner(const SobolevOperator& op, const std::vector<double>& u, const std::vector<double>& v) {
    Eigen::Map<const Eigen::VectorXd> uu(u.data(), static_cast<Eigen::Index>(u.size()));
    Eigen::Map<const Eigen::VectorXd> vv(v.data(), static_cast<Eigen::Index>(v.size()));
    return uu.dot(op.A * vv);
}

struct KernelMatrix {
    std::vector<int> nodes;
    Eigen::MatrixXd K;
    SolverStats stats;

    /// max |K - K^T| / max |K|.
    double symmetry_error() const {
        double scale = K.cwiseAbs().maxCoeff();
        return scale > 0 ? (K - K.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
    }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (K + K.transpose()), Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    double norm2() const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (K + K.transpose()), Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    }
};

inline constexpr std::size_t max_kernel_nodes = 2000;

/// K[i][j] = e_{x_j}^T A^{-1} e_{x_i} = z_i . z_j.
inline KernelMatrix kernel_matrix(const KernelSolver& solver, const std::vector<int>& nodes) {
    require(!nodes.empty(), ErrorCode::InvalidArgument, "kernel needs at least one node");
    require(nodes.size() <= max_kernel_nodes, ErrorCode::InvalidArgument, "dense kernel limited to 2000 nodes");
    KernelMatrix km;
    km.nodes = nodes;
    Eigen::Index n = static_cast<Eigen::Index>(solver.support_size());
    Eigen::MatrixXd Z(n, static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e[solver.checked_position(nodes[j])] = 1.0;
        Z.col(static_cast<Eigen::Index>(j)) = solver.half_solve(e);
        // residual of the full representer, for the stats
        Eigen::VectorXd phi = solver.full_solve(e);
        double res = solver.backward_error(phi, e);
        ++km.stats.solves;
        km.stats.max_residual = std::max(km.stats.max_residual, res);
    }
    km.K = Z.transpose() * Z;
    return km;
}

inline KernelMatrix kernel_matrix(const SobolevOperator& op, const std::vector<int>& nodes) {
    KernelSolver solver(op);
    return kernel_matrix(solver, nodes);
}

// ---------------------------------------------------------------------------
// Feature-map Lipschitz ratios

struct FeaturePair {
    int a = 0;
    int b = 0;
    double d_x = 0.0;
    double norm = 0.0;  // ||phi_a - phi_b||_A
    double ratio = 0.0;
};

/// ||phi_a - phi_b||_A = ||z_a - z_b|| (equal to sqrt(K_aa - 2 K_ab + K_bb) without the cancellation).
inline std::vector<FeaturePair> feature_lipschitz_ratio(const KernelSolver& solver, const InnerMetricGraph& graph,
                                                        const std::vector<std::pair<int, int>>& pairs,
                                                        DistanceMode mode = DistanceMode::Taut) {
    std::map<int, Eigen::VectorXd> cache;
    auto z = [&](int node) -> const Eigen::VectorXd& {
        auto it = cache.find(node);
        if (it == cache.end()) it = cache.emplace(node, solver.half_solve_node(node)).first;
        return it->second;
    };
    std::vector<FeaturePair> out;
    out.reserve(pairs.size());
    for (auto [a, b] : pairs) {
        require(a != b, ErrorCode::InvalidArgument, "feature pair with identical nodes");
        double d = inner_distance(graph, a, b, mode);
        require(d > 0, ErrorCode::InvalidArgument, "feature pair at inner distance 0");
        require(std::isfinite(d), ErrorCode::InvalidArgument, "feature pair spans two components");
        FeaturePair fp;
        fp.a = a;
        fp.b = b;
        fp.d_x = d;
        fp.norm = (z(a) - z(b)).norm();
        fp.ratio = fp.norm / d;
        out.push_back(fp);
    }
    return out;
}

inline double max_ratio(const std::vector<FeaturePair>& rows) {
    double m = 0.0;
    for (const FeaturePair& r : rows) m = std::max(m, r.ratio);
    return m;
}

/// Seeded pairs: a third are stencil edges nearest `focus`, a third random edges, the rest
/// random same-component pairs. Only support nodes are used.
inline std::vector<std::pair<int, int>> sample_pairs(const InnerMetricGraph& graph, const std::vector<int>& support,
                                                     int count, std::uint64_t seed, Point focus) {
    require(count > 0, ErrorCode::InvalidArgument, "pair count must be positive");
    const GridDomain& dom = graph.domain();
    std::vector<char> in_support(dom.size(), 0);
    for (int s : support) in_support[s] = 1;
    std::vector<Edge> edges;
    for (const Edge& e : dom.edges())
        if (in_support[e.a] && in_support[e.b]) edges.push_back(e);
    std::set<std::pair<int, int>> seen;
    std::vector<std::pair<int, int>> out;
    auto add = [&](int a, int b) {
        if (a == b || graph.component(a) != graph.component(b)) return;
        auto key = std::minmax(a, b);
        if (seen.insert(key).second) out.push_back(key);
    };
    if (!edges.empty()) {
        auto mid = [&](const Edge& e) { return 0.5 * (dom.node(e.a) + dom.node(e.b)); };
        std::vector<Edge> sorted = edges;
        std::stable_sort(sorted.begin(), sorted.end(),
                         [&](const Edge& x, const Edge& y) { return distance(mid(x), focus) < distance(mid(y), focus); });
        for (std::size_t i = 0; i < sorted.size() && static_cast<int>(out.size()) < count / 3; ++i)
            add(sorted[i].a, sorted[i].b);
    }
    Rng rng(seed);
    int target_edges = 2 * count / 3;
    for (int tries = 0; !edges.empty() && static_cast<int>(out.size()) < target_edges && tries < 20 * count; ++tries) {
        const Edge& e = edges[rng.index(edges.size())];
        add(e.a, e.b);
    }
    for (int tries = 0; static_cast<int>(out.size()) < count && tries < 20 * count; ++tries)
        add(support[rng.index(support.size())], support[rng.index(support.size())]);
    return out;
}

inline void write_csv(std::ostream& os, const KernelMatrix& km) {
    os.precision(12);
    for (Eigen::Index i = 0; i < km.K.rows(); ++i) {
        for (Eigen::Index j = 0; j < km.K.cols(); ++j) os << (j ? "," : "") << km.K(i, j);
        os << '\n';
    }
}

inline void write_csv(std::ostream& os, const GridDomain& dom, const std::vector<FeaturePair>& rows) {
    os.precision(12);
    os << "x,x_prime,d_X,norm,ratio\n";
    for (const FeaturePair& r : rows) {
        Point a = dom.node(r.a), b = dom.node(r.b);
        os << '"' << a.x << ' ' << a.y << "\",\"" << b.x << ' ' << b.y << "\"," << r.d_x << ',' << r.norm << ','
           << r.ratio << '\n';
    }
}

}  // namespace wsob
