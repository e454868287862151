#pragma once

// Discrete weighted Sobolev norms W^{k,p}_f and the W^{k,2}_f quadratic form.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "wsob/core.hpp"
#include "wsob/error.hpp"
#include "wsob/geometry.hpp"
#include "wsob/weight_field.hpp"

namespace wsob {

/// Fornberg's recursion: weights w_j with sum_j w_j g(z_j) ~ g^(m)(0).
inline std::vector<double> fornberg_weights(const std::vector<double>& z, int m) {
    int n = static_cast<int>(z.size());
    require(n > m, ErrorCode::InvalidArgument, "need more points than the derivative order");
    std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0, c4 = z[0];
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        int mn = std::min(i, m);
        double c2 = 1.0, c5 = c4;
        c4 = z[i];
        for (int j = 0; j < i; ++j) {
            double c3 = z[i] - z[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][m];
    return w;
}

/// 1-D difference formula on integer lattice offsets (scaled by h^-order).
struct DifferenceStencil {
    int order = 0;
    int accuracy = 0;
    std::vector<int> offsets;
    std::vector<double> coeffs;

    /// Offsets chosen inside [-back, fwd]: central when it fits, else the most centered run of
    /// order+2 (accuracy 2) or order+1 (accuracy 1) points. Empty if no formula exists.
    static DifferenceStencil choose(int order, int back, int fwd, double h) {
        DifferenceStencil s;
        s.order = order;
        if (order == 0) {
            s.offsets = {0};
            s.coeffs = {1.0};
            s.accuracy = 99;
            return s;
        }
        int hw = (order + 1) / 2;
        int lo = 0, hi = 0;
        if (back >= hw && fwd >= hw) {
            lo = -hw;
            hi = hw;
            s.accuracy = 2;
        } else {
            int avail = back + fwd + 1;
            int npts = avail >= order + 2 ? order + 2 : (avail >= order + 1 ? order + 1 : 0);
            if (npts == 0) return {};
            s.accuracy = npts - order;
            // most centered window of npts points inside [-back, fwd]
            lo = std::clamp(-(npts - 1) / 2, -back, fwd - (npts - 1));
            hi = lo + npts - 1;
        }
        std::vector<double> z;
        for (int o = lo; o <= hi; ++o) {
            s.offsets.push_back(o);
            z.push_back(static_cast<double>(o));
        }
        s.coeffs = fornberg_weights(z, order);
        double scale = std::pow(h, -order);
        for (double& c : s.coeffs) c *= scale;
        return s;
    }

    bool empty() const { return offsets.empty(); }
};

enum class UnderflowPolicy {
    Zero,   // nodes with no formula get a zero derivative row
    Throw,  // raise StencilUnderflow
};

/// Multi-index (a, b): a derivatives in x, b in y.
using MultiIndex = std::array<int, 2>;

inline std::vector<MultiIndex> multi_indices(int level, int dim) {
    std::vector<MultiIndex> out;
    if (dim == 1) return {{level, 0}};
    for (int a = level; a >= 0; --a) out.push_back({a, level - a});
    return out;
}

/// Per-node 1-D difference formulas along x and y for orders 1..k; mixed partials compose them.
class DifferenceOperators {
public:
    DifferenceOperators(const GridDomain& g, int k, UnderflowPolicy policy = UnderflowPolicy::Zero)
        : domain_(&g), k_(k) {
        require(k >= 0, ErrorCode::InvalidArgument, "order k must be >= 0");
        int dirs = g.dim();
        rows_.resize(2);
        for (int dir = 0; dir < dirs; ++dir) {
            rows_[dir].resize(k + 1);
            for (int m = 1; m <= k; ++m) {
                auto& tab = rows_[dir][m];
                tab.start.assign(g.size() + 1, 0);
                for (std::size_t v = 0; v < g.size(); ++v) {
                    auto [i, j] = g.lattice()[v];
                    auto at = [&](int o) { return dir == 0 ? g.find_lattice(i + o, j) : g.find_lattice(i, j + o); };
                    int reach = m + 2;
                    int back = 0, fwd = 0;
                    while (back < reach && at(-(back + 1)) >= 0) ++back;
                    while (fwd < reach && at(fwd + 1) >= 0) ++fwd;
                    DifferenceStencil st = DifferenceStencil::choose(m, back, fwd, g.h());
                    if (st.empty()) {
                        ++underflow_;
                        if (policy == UnderflowPolicy::Throw)
                            throw Error(ErrorCode::StencilUnderflow,
                                        "no order-" + std::to_string(m) + " formula at node " + std::to_string(v));
                    } else {
                        for (std::size_t q = 0; q < st.offsets.size(); ++q) {
                            tab.col.push_back(at(st.offsets[q]));
                            tab.val.push_back(st.coeffs[q]);
                        }
                    }
                    tab.start[v + 1] = static_cast<int>(tab.col.size());
                }
            }
        }
    }

    const GridDomain& domain() const { return *domain_; }
    int order() const { return k_; }
    /// Number of (node, direction, order) triples that had no formula.
    int underflow_count() const { return underflow_; }

    /// d^m/dx_dir^m applied to u.
    std::vector<double> apply(int dir, int m, const std::vector<double>& u) const {
        if (m == 0) return u;
        const auto& tab = rows_[dir][m];
        std::vector<double> out(u.size(), 0.0);
        for (std::size_t v = 0; v < u.size(); ++v) {
            double s = 0.0;
            for (int q = tab.start[v]; q < tab.start[v + 1]; ++q) s += tab.val[q] * u[tab.col[q]];
            out[v] = s;
        }
        return out;
    }

    /// D^alpha u = Dx^a (Dy^b u).
    std::vector<double> derivative(const std::vector<double>& u, MultiIndex alpha) const {
        require(alpha[0] + alpha[1] <= k_, ErrorCode::InvalidArgument, "multi-index exceeds operator order");
        std::vector<double> v = alpha[1] > 0 ? apply(1, alpha[1], u) : u;
        return alpha[0] > 0 ? apply(0, alpha[0], v) : v;
    }

    Eigen::SparseMatrix<double> matrix(int dir, int m) const {
        std::size_t n = domain_->size();
        Eigen::SparseMatrix<double> M(n, n);
        if (m == 0) {
            M.setIdentity();
            return M;
        }
        const auto& tab = rows_[dir][m];
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(tab.col.size());
        for (std::size_t v = 0; v < n; ++v)
            for (int q = tab.start[v]; q < tab.start[v + 1]; ++q) trip.emplace_back(v, tab.col[q], tab.val[q]);
        M.setFromTriplets(trip.begin(), trip.end());
        return M;
    }

    Eigen::SparseMatrix<double> matrix(MultiIndex alpha) const {
        if (alpha[0] == 0) return matrix(1, alpha[1]);
        if (alpha[1] == 0) return matrix(0, alpha[0]);
        return Eigen::SparseMatrix<double>(matrix(0, alpha[0]) * matrix(1, alpha[1]));
    }

private:
    struct Table {
        std::vector<int> start, col;
        std::vector<double> val;
    };
    const GridDomain* domain_;
    int k_;
    std::vector<std::vector<Table>> rows_;
    int underflow_ = 0;
};

// ---------------------------------------------------------------------------
// Norms

namespace detail {

inline void check_sizes(const GridDomain& g, const WeightField& f, std::size_t n) {
    require(f.size() == g.size() && n == g.size(), ErrorCode::InvalidArgument,
            "function, weight and domain sizes differ");
}

/// f * vol at usable nodes, 0 elsewhere.
inline std::vector<double> quadrature_weights(const GridDomain& g, const WeightField& f) {
    std::vector<double> w(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (f.usable(i) && g.cell_volume()[i] > 0) w[i] = f.values[i] * g.cell_volume()[i];
    return w;
}

inline double weighted_lp(const std::vector<double>& v, const std::vector<double>& w, double p) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (w[i] == 0) continue;
        if (!std::isfinite(v[i])) throw Error(ErrorCode::NonFiniteValue, "non-finite value at support node " + std::to_string(i));
        s += std::pow(std::abs(v[i]), p) * w[i];
    }
    return std::pow(s, 1.0 / p);
}

}  // namespace detail

/// (sum |u|^p f vol)^(1/p) over usable nodes.
inline double lp_norm(const std::vector<double>& u, const GridDomain& g, const WeightField& f, double p) {
    require(p >= 1 && std::isfinite(p), ErrorCode::InvalidArgument, "p must lie in [1, inf)");
    detail::check_sizes(g, f, u.size());
    return detail::weighted_lp(u, detail::quadrature_weights(g, f), p);
}

/// (sum_q |u|^p f w_q)^(1/p) over slice quadrature points.
inline double lp_norm_slice(const std::function<double(Point)>& u, const std::function<double(Point)>& f,
                            const SphereSlice& slice, double p) {
    require(p >= 1 && std::isfinite(p), ErrorCode::InvalidArgument, "p must lie in [1, inf)");
    double s = 0.0;
    for (std::size_t q = 0; q < slice.points.size(); ++q) {
        double uv = u(slice.points[q]);
        if (!std::isfinite(uv)) throw Error(ErrorCode::NonFiniteValue, "non-finite value on slice");
        s += std::pow(std::abs(uv), p) * f(slice.points[q]) * slice.weights[q];
    }
    return std::pow(s, 1.0 / p);
}

/// Pointwise |D^i u| (Euclidean over multi-indices of length i).
inline std::vector<double> derivative_magnitude(const DifferenceOperators& ops, const std::vector<double>& u, int level) {
    std::vector<double> mag(u.size(), 0.0);
    for (MultiIndex a : multi_indices(level, ops.domain().dim())) {
        std::vector<double> d = ops.derivative(u, a);
        for (std::size_t i = 0; i < u.size(); ++i) mag[i] += d[i] * d[i];
    }
    for (double& m : mag) m = std::sqrt(m);
    return mag;
}

/// Per-level norms ||D^i u||_{L^p_f}, i = 0..k.
inline std::vector<double> sobolev_level_norms(const std::vector<double>& u, const DifferenceOperators& ops,
                                               const WeightField& f, double p) {
    const GridDomain& g = ops.domain();
    require(p >= 1 && std::isfinite(p), ErrorCode::InvalidArgument, "p must lie in [1, inf)");
    detail::check_sizes(g, f, u.size());
    std::vector<double> w = detail::quadrature_weights(g, f);
    std::vector<double> out;
    for (int i = 0; i <= ops.order(); ++i) {
        out.push_back(i == 0 ? detail::weighted_lp(u, w, p) : detail::weighted_lp(derivative_magnitude(ops, u, i), w, p));
    }
    return out;
}

/// sum_{i<=k} ||D^i u||_{L^p_f}.
inline double sobolev_norm(const std::vector<double>& u, const DifferenceOperators& ops, const WeightField& f, double p) {
    double s = 0.0;
    for (double v : sobolev_level_norms(u, ops, f, p)) s += v;
    return s;
}

inline double sobolev_norm(const std::vector<double>& u, const GridDomain& g, const WeightField& f, int k, double p,
                           UnderflowPolicy policy = UnderflowPolicy::Zero) {
    return sobolev_norm(u, DifferenceOperators(g, k, policy), f, p);
}

// ---------------------------------------------------------------------------
// Quadratic form

/// A = sum_{|alpha|<=k} D_alpha^T W D_alpha with W = diag(f vol) on usable nodes.
struct SobolevOperator {
    const GridDomain* domain = nullptr;
    WeightField weight;
    int k = 0;
    Eigen::SparseMatrix<double> A;  // all nodes
    std::vector<int> support;       // usable nodes, ascending
    /// Stacked rows sqrt(f vol) D_alpha restricted to support rows and columns, so that
    /// G^T G is A restricted to the support.
    Eigen::SparseMatrix<double> G;

    /// A restricted to support nodes.
    Eigen::SparseMatrix<double> restricted() const {
        std::vector<int> pos(A.rows(), -1);
        for (std::size_t i = 0; i < support.size(); ++i) pos[support[i]] = static_cast<int>(i);
        std::vector<Eigen::Triplet<double>> trip;
        for (int c = 0; c < A.outerSize(); ++c)
            for (Eigen::SparseMatrix<double>::InnerIterator it(A, c); it; ++it)
                if (pos[it.row()] >= 0 && pos[it.col()] >= 0) trip.emplace_back(pos[it.row()], pos[it.col()], it.value());
        Eigen::SparseMatrix<double> R(support.size(), support.size());
        R.setFromTriplets(trip.begin(), trip.end());
        return R;
    }

    double quadratic_form(const std::vector<double>& u) const {
        Eigen::Map<const Eigen::VectorXd> v(u.data(), static_cast<Eigen::Index>(u.size()));
        return v.dot(A * v);
    }
};

inline SobolevOperator assemble_operator(const GridDomain& g, const WeightField& f, int k,
                                         UnderflowPolicy policy = UnderflowPolicy::Zero) {
    require(f.size() == g.size(), ErrorCode::InvalidArgument, "weight and domain sizes differ");
    f.validate();
    SobolevOperator op;
    op.domain = &g;
    op.weight = f;
    op.k = k;
    std::vector<double> w = detail::quadrature_weights(g, f);
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] > 0) op.support.push_back(static_cast<int>(i));
    if (op.support.empty()) throw Error(ErrorCode::EmptySupport, "weight vanishes at every node");
    Eigen::SparseMatrix<double> W(g.size(), g.size());
    {
        std::vector<Eigen::Triplet<double>> trip;
        for (int i : op.support) trip.emplace_back(i, i, w[i]);
        W.setFromTriplets(trip.begin(), trip.end());
    }
    DifferenceOperators ops(g, k, policy);
    op.A = W;
    std::vector<int> pos(g.size(), -1);
    for (std::size_t i = 0; i < op.support.size(); ++i) pos[op.support[i]] = static_cast<int>(i);
    std::vector<Eigen::Triplet<double>> gtrip;
    int row = 0;
    auto stack_rows = [&](const Eigen::SparseMatrix<double>& D) {
        for (int c = 0; c < D.outerSize(); ++c)
            for (Eigen::SparseMatrix<double>::InnerIterator it(D, c); it; ++it)
                if (pos[it.row()] >= 0 && pos[it.col()] >= 0)
                    gtrip.emplace_back(row + pos[it.row()], pos[it.col()], std::sqrt(w[it.row()]) * it.value());
        row += static_cast<int>(op.support.size());
    };
    {
        Eigen::SparseMatrix<double> I(g.size(), g.size());
        I.setIdentity();
        stack_rows(I);
    }
    for (int level = 1; level <= k; ++level)
        for (MultiIndex a : multi_indices(level, g.dim())) {
            Eigen::SparseMatrix<double> D = ops.matrix(a);
            op.A += Eigen::SparseMatrix<double>(D.transpose() * W * D);
            stack_rows(D);
        }
    op.G.resize(row, static_cast<Eigen::Index>(op.support.size()));
    op.G.setFromTriplets(gtrip.begin(), gtrip.end());
    op.G.makeCompressed();
    // exact symmetry (the products above are symmetric up to rounding)
    Eigen::SparseMatrix<double> At = op.A.transpose();
    op.A = 0.5 * (op.A + At);
    op.A.prune(0.0);
    return op;
}

/// Coordinate-format export: one "row col value" line per stored entry.
inline void write_coo(std::ostream& os, const Eigen::SparseMatrix<double>& A) {
    os.precision(17);
    os << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
    for (int c = 0; c < A.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, c); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

// ---------------------------------------------------------------------------
// Slice lemma

struct SliceRatioRow {
    double eta = 0.0;
    double slice_norm = 0.0;
    double bound = 0.0;
    double ratio = 0.0;
};

struct SliceRatioTable {
    double grad_norm = 0.0;
    double a = 0.0;  // min(m, p)
    std::vector<SliceRatioRow> rows;
};

/// Slice norms of u over S(x0, eta) against eta^((a-1)/p) ln(1/eta)^((m-1)/m) ||grad u||_{L^p_f(M)},
/// with m = 2 and a = min(m, p). u and f are evaluated off-grid on slices.
inline SliceRatioTable slice_lemma_ratio(const GridDomain& g, const WeightField& f,
                                         const std::function<double(Point)>& u,
                                         const std::function<double(Point)>& f_fn, double p,
                                         const std::vector<double>& etas, double slice_tol = 0.0) {
    require(g.spec().has_value(), ErrorCode::InvalidArgument, "slice lemma needs a catalog domain");
    require(p >= 1 && std::isfinite(p), ErrorCode::InvalidArgument, "p must lie in [1, inf)");
    const double m = 2.0;
    SliceRatioTable tab;
    tab.a = std::min(m, p);
    std::vector<double> nodal;
    for (const Point& x : g.nodes()) nodal.push_back(u(x));
    DifferenceOperators ops(g, 1);
    tab.grad_norm = lp_norm(derivative_magnitude(ops, nodal, 1), g, f, p);
    for (double eta : etas) {
        require(eta > 0 && eta < 1, ErrorCode::InvalidArgument, "slice radius must lie in (0, 1)");
        SphereSlice s = sphere_slice(*g.spec(), eta, slice_tol > 0 ? slice_tol : eta * 1e-3);
        SliceRatioRow row;
        row.eta = eta;
        row.slice_norm = lp_norm_slice(u, f_fn, s, p);
        row.bound = std::pow(eta, (tab.a - 1) / p) * std::pow(std::log(1 / eta), (m - 1) / m) * tab.grad_norm;
        row.ratio = row.bound > 0 ? row.slice_norm / row.bound : 0.0;
        tab.rows.push_back(row);
    }
    return tab;
}

/// (int_0^eta_max ||u||^p_{L^p_f(N^eta)} d eta)^(1/p) by Gauss quadrature in eta.
inline double sliced_lp_norm(const DomainSpec& spec, const std::function<double(Point)>& u,
                             const std::function<double(Point)>& f, double p, double eta_max, int panels = 32) {
    const GaussRule& rule = gauss_legendre(4);
    double s = 0.0, w = eta_max / panels;
    for (int k = 0; k < panels; ++k)
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            double eta = w * (k + 0.5 * (rule.nodes[q] + 1));
            double v;
            try {
                v = lp_norm_slice(u, f, sphere_slice(spec, eta, eta * 1e-3), p);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::EmptySlice) throw;
                v = 0.0;
            }
            s += 0.5 * w * rule.weights[q] * std::pow(v, p);
        }
    return std::pow(s, 1.0 / p);
}

}  // namespace wsob
