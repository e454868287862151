#pragma once

// Source measures xi * Lebesgue|E, catalog maps, push-forward densities.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wsob/core.hpp"
#include "wsob/error.hpp"
#include "wsob/geometry.hpp"
#include "wsob/quadrature.hpp"
#include "wsob/rng.hpp"
#include "wsob/weight_field.hpp"

namespace wsob {

using VecN = std::array<double, 4>;

inline double norm(const VecN& x, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += x[i] * x[i];
    return std::sqrt(s);
}

enum class DensityKind { Constant, Monomial, Radial };

/// xi(x) = c, c*|x_1|^a, or c*|x|^a.
struct Density {
    DensityKind kind = DensityKind::Constant;
    double c = 1.0;
    double a = 0.0;

    double operator()(const VecN& x, int dim) const {
        switch (kind) {
            case DensityKind::Constant: return c;
            case DensityKind::Monomial: return c * std::pow(std::abs(x[0]), a);
            case DensityKind::Radial: return c * std::pow(norm(x, dim), a);
        }
        return 0.0;
    }
};

enum class SupportKind { Box, Ball, Band, Shell };

/// Box: product of `box` intervals. Ball: |x| < radius. Band (dim 2): 0 < x < 1, |y| < x^l.
/// Shell: r_in < |x| < radius.
struct SourceMeasure {
    int dim = 1;
    Density xi;
    SupportKind support = SupportKind::Box;
    std::vector<Interval> box{{0.0, 1.0}};
    double radius = 1.0;
    double r_in = 0.0;
    double l = 2.0;

    void validate() const {
        require(dim >= 1 && dim <= 4, ErrorCode::InvalidArgument, "source dimension must be in 1..4");
        require(xi.c >= 0, ErrorCode::InvalidArgument, "density coefficient must be nonnegative");
        switch (support) {
            case SupportKind::Box:
                require(static_cast<int>(box.size()) == dim, ErrorCode::InvalidArgument, "box needs one interval per axis");
                for (const Interval& iv : box) require(iv.hi > iv.lo, ErrorCode::InvalidArgument, "empty box side");
                break;
            case SupportKind::Ball: require(radius > 0, ErrorCode::InvalidArgument, "ball radius must be positive"); break;
            case SupportKind::Shell:
                require(radius > r_in && r_in >= 0, ErrorCode::InvalidArgument, "shell requires 0 <= r_in < radius");
                break;
            case SupportKind::Band:
                require(dim == 2 && l >= 1, ErrorCode::InvalidArgument, "band needs dim 2 and l >= 1");
                break;
        }
    }

    /// Closed support, with a small relative slack for quadrature nodes on the boundary.
    bool contains_closed(const VecN& x) const {
        constexpr double slack = 1e-12;
        switch (support) {
            case SupportKind::Box:
                for (int i = 0; i < dim; ++i)
                    if (x[i] < box[i].lo - slack || x[i] > box[i].hi + slack) return false;
                return true;
            case SupportKind::Ball: return norm(x, dim) <= radius * (1 + slack);
            case SupportKind::Shell: {
                double r = norm(x, dim);
                return r >= r_in * (1 - slack) && r <= radius * (1 + slack);
            }
            case SupportKind::Band:
                return x[0] >= -slack && x[0] <= 1 + slack && std::abs(x[1]) <= std::pow(std::max(x[0], 0.0), l) + slack;
        }
        return false;
    }

    double support_volume() const {
        switch (support) {
            case SupportKind::Box: {
                double v = 1.0;
                for (const Interval& iv : box) v *= iv.length();
                return v;
            }
            case SupportKind::Ball: return ball_volume(dim, radius);
            case SupportKind::Shell: return ball_volume(dim, radius) - ball_volume(dim, r_in);
            case SupportKind::Band: return 2.0 / (l + 1.0);
        }
        return 0.0;
    }

    static double ball_volume(int d, double r) {
        return std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0) * std::pow(r, d);
    }
};

enum class MapKind { Identity, ProjectX, NormSquared, Radial };

inline std::string to_string(MapKind m) {
    switch (m) {
        case MapKind::Identity: return "identity";
        case MapKind::ProjectX: return "project-x";
        case MapKind::NormSquared: return "norm-squared";
        case MapKind::Radial: return "radial";
    }
    return "unknown";
}

inline MapKind map_kind_from_string(const std::string& s) {
    for (MapKind m : {MapKind::Identity, MapKind::ProjectX, MapKind::NormSquared, MapKind::Radial})
        if (to_string(m) == s) return m;
    throw Error(ErrorCode::ConfigError, "map: unknown map '" + s + "'");
}

struct PushforwardSpec {
    std::string name;
    SourceMeasure source;
    MapKind map = MapKind::Identity;
    std::vector<double> target;  // 1-D evaluation points

    void validate() const {
        source.validate();
        switch (map) {
            case MapKind::Identity:
                require(source.dim == 1 && source.support == SupportKind::Box, ErrorCode::InvalidArgument,
                        "identity map needs a 1-D box source");
                break;
            case MapKind::ProjectX:
                require(source.dim == 2 && (source.support == SupportKind::Band || source.support == SupportKind::Box),
                        ErrorCode::InvalidArgument, "project-x needs a 2-D band or box source");
                break;
            case MapKind::NormSquared:
                require(source.dim >= 2 && source.dim <= 4, ErrorCode::InvalidArgument,
                        "norm-squared needs source dimension 2, 3 or 4");
                [[fallthrough]];
            case MapKind::Radial:
                require(source.support == SupportKind::Ball || source.support == SupportKind::Shell,
                        ErrorCode::InvalidArgument, "radial maps need a ball or shell source");
                break;
        }
    }

    double apply(const VecN& x) const {
        switch (map) {
            case MapKind::Identity:
            case MapKind::ProjectX: return x[0];
            case MapKind::NormSquared: {
                double r = norm(x, source.dim);
                return r * r;
            }
            case MapKind::Radial: return norm(x, source.dim);
        }
        return 0.0;
    }

    double jacobian(const VecN& x) const {
        switch (map) {
            case MapKind::Identity:
            case MapKind::ProjectX:
            case MapKind::Radial: return 1.0;
            case MapKind::NormSquared: return 2.0 * norm(x, source.dim);
        }
        return 0.0;
    }

    /// Closure of the image of the support.
    Interval image() const {
        const SourceMeasure& s = source;
        switch (map) {
            case MapKind::Identity:
            case MapKind::ProjectX: return s.support == SupportKind::Band ? Interval{0, 1} : s.box[0];
            case MapKind::NormSquared:
                return {s.support == SupportKind::Shell ? s.r_in * s.r_in : 0.0, s.radius * s.radius};
            case MapKind::Radial: return {s.support == SupportKind::Shell ? s.r_in : 0.0, s.radius};
        }
        return {};
    }

    /// Evaluation points at the centers of n equal bins over the image.
    static std::vector<double> bin_centers(Interval img, int n) {
        std::vector<double> t(n);
        for (int i = 0; i < n; ++i) t[i] = img.lo + (i + 0.5) * img.length() / n;
        return t;
    }
};

struct FiberPoint {
    VecN x;
    double weight;  // Hausdorff measure element on the fiber
};

namespace detail {

inline void sphere_quadrature(int d, double r, int res, std::vector<FiberPoint>& out) {
    out.clear();
    if (d == 1) {
        out.push_back({{r, 0, 0, 0}, 1.0});
        out.push_back({{-r, 0, 0, 0}, 1.0});
    } else if (d == 2) {
        int n = std::max(res, 8);
        for (int i = 0; i < n; ++i) {
            double th = 2 * pi * (i + 0.5) / n;
            out.push_back({{r * std::cos(th), r * std::sin(th), 0, 0}, 2 * pi * r / n});
        }
    } else if (d == 3) {
        // z = cos(theta) is uniform for the area element r^2 dz dphi
        const GaussRule& g = gauss_legendre(std::clamp(res, 4, 64));
        int nphi = std::clamp(res, 8, 128);
        for (std::size_t a = 0; a < g.nodes.size(); ++a) {
            double z = g.nodes[a], s = std::sqrt(std::max(0.0, 1 - z * z));
            for (int b = 0; b < nphi; ++b) {
                double ph = 2 * pi * (b + 0.5) / nphi;
                out.push_back({{r * s * std::cos(ph), r * s * std::sin(ph), r * z, 0},
                               g.weights[a] * (2 * pi / nphi) * r * r});
            }
        }
    } else {
        // Hopf coordinates with u = sin^2(eta): area element r^3/2 du dxi1 dxi2
        const GaussRule& g = gauss_legendre(std::clamp(res, 4, 16));
        int nxi = std::clamp(res, 8, 32);
        double dxi = 2 * pi / nxi;
        for (std::size_t a = 0; a < g.nodes.size(); ++a) {
            double u = 0.5 * (g.nodes[a] + 1), wu = 0.5 * g.weights[a];
            double su = std::sqrt(u), cu = std::sqrt(1 - u);
            for (int b = 0; b < nxi; ++b) {
                double x1 = 2 * pi * (b + 0.5) / nxi;
                for (int c = 0; c < nxi; ++c) {
                    double x2 = 2 * pi * (c + 0.5) / nxi;
                    out.push_back({{r * cu * std::cos(x1), r * cu * std::sin(x1), r * su * std::cos(x2),
                                    r * su * std::sin(x2)},
                                   0.5 * r * r * r * wu * dxi * dxi});
                }
            }
        }
    }
}

}  // namespace detail

/// Quadrature on the fiber Phi^{-1}(t) with Hausdorff weights, plus jac Phi on it.
inline std::vector<FiberPoint> fiber_quadrature(const PushforwardSpec& spec, double t, int res, double* jac = nullptr) {
    std::vector<FiberPoint> pts;
    const SourceMeasure& s = spec.source;
    double j = 1.0;
    switch (spec.map) {
        case MapKind::Identity: pts.push_back({{t, 0, 0, 0}, 1.0}); break;
        case MapKind::ProjectX: {
            Interval seg = s.support == SupportKind::Band ? Interval{-std::pow(std::max(t, 0.0), s.l), std::pow(std::max(t, 0.0), s.l)}
                                                         : s.box[1];
            if (seg.length() > 0) {
                int order = 8, panels = std::max(1, (res + order - 1) / order);
                const GaussRule& g = gauss_legendre(order);
                double w = seg.length() / panels;
                for (int p = 0; p < panels; ++p)
                    for (int q = 0; q < order; ++q)
                        pts.push_back({{t, seg.lo + w * (p + 0.5 * (g.nodes[q] + 1)), 0, 0}, 0.5 * w * g.weights[q]});
            }
            break;
        }
        case MapKind::NormSquared: {
            double r = std::sqrt(std::max(t, 0.0));
            detail::sphere_quadrature(s.dim, r, res, pts);
            j = 2 * r;
            break;
        }
        case MapKind::Radial: detail::sphere_quadrature(s.dim, t, res, pts); break;
    }
    for (const FiberPoint& fp : pts)
        if (!s.contains_closed(fp.x))
            throw Error(ErrorCode::FiberEscape, "fiber over t=" + std::to_string(t) + " leaves the source support");
    if (jac) *jac = j;
    return pts;
}

struct PushforwardOptions {
    bool truncate = false;  // report min(f, 1)
};

/// f(t) = int_{Phi^{-1}(t)} xi / jac Phi dH, by quadrature over each fiber.
inline WeightField pushforward_density(const PushforwardSpec& spec, int resolution, PushforwardOptions opt = {}) {
    spec.validate();
    require(resolution >= 1, ErrorCode::InvalidArgument, "resolution must be >= 1");
    WeightField w;
    w.provenance = Provenance::Coarea;
    for (double t : spec.target) {
        double jac = 1.0;
        auto pts = fiber_quadrature(spec, t, resolution, &jac);
        if (jac < 1e-12)
            throw Error(ErrorCode::DegenerateJacobian, "jac Phi vanishes on the fiber over t=" + std::to_string(t));
        double sum = 0.0;
        for (const FiberPoint& fp : pts) sum += fp.weight * spec.source.xi(fp.x, spec.source.dim);
        double f = sum / jac;
        if (opt.truncate) f = std::min(f, 1.0);
        w.points.push_back({t, 0.0});
        w.values.push_back(f);
    }
    return w;
}

/// Histogram estimate of the push-forward density on `bins` equal bins over the image.
inline WeightField monte_carlo_density(const PushforwardSpec& spec, long samples, int bins, std::uint64_t seed) {
    spec.validate();
    require(samples > 0, ErrorCode::InvalidArgument, "sample count must be positive");
    require(bins > 0, ErrorCode::InvalidArgument, "bin count must be positive");
    const SourceMeasure& s = spec.source;
    Interval img = spec.image();
    double width = img.length() / bins;
    std::vector<double> mass(bins, 0.0);
    Rng rng(seed);
    double vol = s.support_volume();
    double per_sample = vol / static_cast<double>(samples);

    auto record = [&](const VecN& x) {
        double t = spec.apply(x);
        int b = static_cast<int>(std::floor((t - img.lo) / width));
        if (b < 0 || b >= bins) return;
        mass[b] += per_sample * s.xi(x, s.dim);
    };

    switch (s.support) {
        case SupportKind::Box:
            for (long i = 0; i < samples; ++i) {
                VecN x{};
                x[0] = rng.uniform(s.box[0].lo, s.box[0].hi);
                for (int d = 1; d < s.dim; ++d) x[d] = rng.uniform(s.box[d].lo, s.box[d].hi);
                record(x);
            }
            break;
        case SupportKind::Band:
            for (long i = 0; i < samples; ++i) {
                // marginal of x has CDF x^(l+1)
                double x0 = std::pow(rng.uniform(), 1.0 / (s.l + 1));
                double w = std::pow(x0, s.l);
                record({x0, rng.uniform(-w, w), 0, 0});
            }
            break;
        case SupportKind::Ball:
            for (long i = 0; i < samples; ++i) {
                double r = s.radius * std::pow(rng.uniform(), 1.0 / s.dim);
                VecN g{};
                double gn = 0.0;
                do {
                    for (int d = 0; d < s.dim; ++d) g[d] = rng.normal();
                    gn = norm(g, s.dim);
                } while (gn == 0.0);
                VecN x{};
                for (int d = 0; d < s.dim; ++d) x[d] = r * g[d] / gn;
                record(x);
            }
            break;
        case SupportKind::Shell: {
            // rejection from the bounding cube; mass from the acceptance fraction
            long accepted = 0, drawn = 0;
            std::vector<VecN> kept;
            kept.reserve(samples);
            while (accepted < samples) {
                VecN x{};
                for (int d = 0; d < s.dim; ++d) x[d] = rng.uniform(-s.radius, s.radius);
                ++drawn;
                double r = norm(x, s.dim);
                if (r > s.r_in && r < s.radius) {
                    kept.push_back(x);
                    ++accepted;
                }
            }
            double cube = std::pow(2 * s.radius, s.dim);
            per_sample = cube / static_cast<double>(drawn);
            for (const VecN& x : kept) record(x);
            break;
        }
    }
    WeightField w;
    w.provenance = Provenance::MonteCarlo;
    for (int b = 0; b < bins; ++b) {
        w.points.push_back({img.lo + (b + 0.5) * width, 0.0});
        w.values.push_back(mass[b] / width);
    }
    return w;
}

// ---------------------------------------------------------------------------
// Coarea identity

enum class CoareaIntegrand { One, X1Squared, Xi };

inline std::string to_string(CoareaIntegrand g) {
    switch (g) {
        case CoareaIntegrand::One: return "1";
        case CoareaIntegrand::X1Squared: return "x1^2";
        case CoareaIntegrand::Xi: return "xi";
    }
    return "?";
}

struct CoareaResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double relative_gap() const { return rhs != 0 ? std::abs(lhs - rhs) / std::abs(rhs) : std::abs(lhs - rhs); }
};

namespace detail {

// Integral of fn over the ball of radius R in dim d, by nested trig substitution
// x_k = rho sin(phi_k), rho' = rho cos(phi_k); n Gauss points per level in `panels` panels.
inline double integrate_ball(const std::function<double(const VecN&)>& fn, int d, double R, int n) {
    const GaussRule& g = gauss_legendre(8);
    int panels = std::max(1, n / 8);
    VecN x{};
    std::function<double(int, double)> rec = [&](int k, double rho) -> double {
        if (k == d - 1) {
            // last coordinate: plain segment (-rho, rho)
            double sum = 0.0, w = 2 * rho / panels;
            for (int p = 0; p < panels; ++p)
                for (int q = 0; q < 8; ++q) {
                    x[k] = -rho + w * (p + 0.5 * (g.nodes[q] + 1));
                    sum += 0.5 * w * g.weights[q] * fn(x);
                }
            return sum;
        }
        double sum = 0.0, w = pi / panels;
        for (int p = 0; p < panels; ++p)
            for (int q = 0; q < 8; ++q) {
                double phi = -0.5 * pi + w * (p + 0.5 * (g.nodes[q] + 1));
                x[k] = rho * std::sin(phi);
                sum += 0.5 * w * g.weights[q] * rho * std::cos(phi) * rec(k + 1, rho * std::cos(phi));
            }
        return sum;
    };
    return rec(0, R);
}

}  // namespace detail

/// lhs = int_E g * jac Phi dx and rhs = int_target int_{Phi^{-1}(t)} g dH dt.
inline CoareaResult coarea_check(const PushforwardSpec& spec, const std::function<double(const VecN&)>& g,
                                 int resolution) {
    spec.validate();
    require(resolution >= 8, ErrorCode::InvalidArgument, "coarea resolution must be >= 8");
    const SourceMeasure& s = spec.source;
    int d = s.dim;
    auto lhs_integrand = [&](const VecN& x) { return g(x) * spec.jacobian(x); };
    CoareaResult res;
    // source side: resolution capped per dimension to keep d^n work bounded
    int n_src = d <= 2 ? resolution : (d == 3 ? std::min(resolution, 64) : std::min(resolution, 32));
    switch (s.support) {
        case SupportKind::Box: {
            VecN x{};
            std::function<double(int)> rec = [&](int k) -> double {
                if (k == d) return lhs_integrand(x);
                return integrate_composite(
                    [&](double v) {
                        x[k] = v;
                        return rec(k + 1);
                    },
                    s.box[k].lo, s.box[k].hi, std::max(1, n_src / 8));
            };
            res.lhs = rec(0);
            break;
        }
        case SupportKind::Band:
            res.lhs = integrate_composite(
                [&](double x0) {
                    double w = std::pow(x0, s.l);
                    return integrate_composite([&](double y) { return lhs_integrand({x0, y, 0, 0}); }, -w, w,
                                               std::max(1, n_src / 64));
                },
                0.0, 1.0, std::max(1, n_src / 8));
            break;
        case SupportKind::Ball: res.lhs = detail::integrate_ball(lhs_integrand, d, s.radius, n_src); break;
        case SupportKind::Shell:
            res.lhs = detail::integrate_ball(lhs_integrand, d, s.radius, n_src) -
                      detail::integrate_ball(lhs_integrand, d, s.r_in, n_src);
            break;
    }
    // target side: Gauss over the image, fiber quadrature at each node
    Interval img = spec.image();
    int fiber_res = d <= 2 ? resolution : std::min(resolution, 64);
    res.rhs = integrate_composite(
        [&](double t) {
            double sum = 0.0;
            for (const FiberPoint& fp : fiber_quadrature(spec, t, fiber_res)) sum += fp.weight * g(fp.x);
            return sum;
        },
        img.lo, img.hi, std::max(1, std::min(resolution, 128) / 8));
    return res;
}

inline CoareaResult coarea_check(const PushforwardSpec& spec, CoareaIntegrand which, int resolution) {
    const SourceMeasure& s = spec.source;
    switch (which) {
        case CoareaIntegrand::One: return coarea_check(spec, [](const VecN&) { return 1.0; }, resolution);
        case CoareaIntegrand::X1Squared:
            return coarea_check(spec, [](const VecN& x) { return x[0] * x[0]; }, resolution);
        case CoareaIntegrand::Xi:
            return coarea_check(spec, [&s](const VecN& x) { return s.xi(x, s.dim); }, resolution);
    }
    return {};
}

/// mu(E) = int_E xi dx, by the source-side quadrature of coarea_check.
inline double source_mass(const PushforwardSpec& spec, int resolution = 256) {
    const SourceMeasure& s = spec.source;
    // divide out the Jacobian so the integrand is xi alone
    return coarea_check(spec, [&](const VecN& x) {
               double j = spec.jacobian(x);
               return j > 0 ? s.xi(x, s.dim) / j : 0.0;
           }, resolution).lhs;
}

// ---------------------------------------------------------------------------
// Catalog

inline PushforwardSpec make_identity_interval(double c = 1.0) {
    PushforwardSpec p;
    p.name = "identity-interval";
    p.source.dim = 1;
    p.source.xi = {DensityKind::Constant, c, 0.0};
    p.source.support = SupportKind::Box;
    p.source.box = {{0.0, 1.0}};
    p.map = MapKind::Identity;
    return p;
}

inline PushforwardSpec make_project_x_band(double l, Density xi = {}) {
    PushforwardSpec p;
    p.name = "project-x-band";
    p.source.dim = 2;
    p.source.xi = xi;
    p.source.support = SupportKind::Band;
    p.source.l = l;
    p.map = MapKind::ProjectX;
    return p;
}

inline PushforwardSpec make_norm_squared_ball(int d, Density xi = {}) {
    PushforwardSpec p;
    p.name = "norm-squared-d" + std::to_string(d);
    p.source.dim = d;
    p.source.xi = xi;
    p.source.support = SupportKind::Ball;
    p.source.radius = 1.0;
    p.map = MapKind::NormSquared;
    return p;
}

inline PushforwardSpec make_radial_annulus(double r_in = 1.0, double r_out = 2.0, Density xi = {}) {
    PushforwardSpec p;
    p.name = "radial-annulus";
    p.source.dim = 2;
    p.source.xi = xi;
    p.source.support = SupportKind::Shell;
    p.source.r_in = r_in;
    p.source.radius = r_out;
    p.map = MapKind::Radial;
    return p;
}

/// One representative per catalog map, with non-constant source densities where the map allows it.
inline std::vector<PushforwardSpec> catalog_pushforwards() {
    std::vector<PushforwardSpec> out;
    out.push_back(make_identity_interval());
    out.push_back(make_project_x_band(2.0, {DensityKind::Monomial, 1.0, 1.0}));
    out.push_back(make_norm_squared_ball(4, {DensityKind::Radial, 1.0, 1.0}));
    out.push_back(make_radial_annulus(1.0, 2.0, {DensityKind::Radial, 1.0, 1.0}));
    out[1].name = "project-x-band-monomial";
    out[2].name = "norm-squared-d4-radial";
    out[3].name = "radial-annulus-radial";
    out.push_back(make_project_x_band(2.0));
    out.push_back(make_norm_squared_ball(2));
    out.push_back(make_norm_squared_ball(3));
    out.push_back(make_norm_squared_ball(4));
    out.push_back(make_radial_annulus());
    return out;
}

// ---------------------------------------------------------------------------
// Lower-bound fit f >= c d^alpha

struct LowerBoundFit {
    double alpha = 0.0;
    double c = 0.0;
    double residual = 0.0;  // max relative violation on the sample
    int violations = 0;
    int samples = 0;
    std::vector<Point> null_set;
};

/// `dist` gives the distance to the frontier; B contributes its points.
inline LowerBoundFit fit_lower_bound(const WeightField& f, const std::vector<Point>& B,
                                     const std::function<double(Point)>& frontier_distance) {
    std::vector<double> ld, lf, d_all, f_all;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!f.usable(i)) continue;
        double d = frontier_distance(f.points[i]);
        for (const Point& b : B) d = std::min(d, distance(f.points[i], b));
        if (!(d > 0)) continue;
        d_all.push_back(d);
        f_all.push_back(f.values[i]);
        ld.push_back(std::log(d));
        lf.push_back(std::log(f.values[i]));
    }
    if (ld.empty()) throw Error(ErrorCode::AllZeroWeight, "weight field has no usable support node");
    LowerBoundFit fit;
    fit.null_set = B;
    fit.samples = static_cast<int>(ld.size());

    // lowest decile of log f within each log-distance bin
    double lo = *std::min_element(ld.begin(), ld.end()), hi = *std::max_element(ld.begin(), ld.end());
    int nbins = std::clamp(static_cast<int>(ld.size()) / 10, 1, 20);
    std::vector<std::vector<int>> bins(nbins);
    for (std::size_t i = 0; i < ld.size(); ++i) {
        int b = hi > lo ? std::min(nbins - 1, static_cast<int>((ld[i] - lo) / (hi - lo) * nbins)) : 0;
        bins[b].push_back(static_cast<int>(i));
    }
    std::vector<double> ex, ey;
    for (auto& bin : bins) {
        if (bin.empty()) continue;
        std::sort(bin.begin(), bin.end(), [&](int a, int b) { return lf[a] < lf[b] || (lf[a] == lf[b] && a < b); });
        std::size_t keep = std::max<std::size_t>(1, bin.size() / 10);
        for (std::size_t k = 0; k < keep; ++k) {
            ex.push_back(ld[bin[k]]);
            ey.push_back(lf[bin[k]]);
        }
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < ex.size(); ++i) mx += ex[i], my += ey[i];
    mx /= ex.size();
    my /= ey.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ex.size(); ++i) sxx += (ex[i] - mx) * (ex[i] - mx), sxy += (ex[i] - mx) * (ey[i] - my);
    fit.alpha = sxx > 0 ? sxy / sxx : 0.0;

    fit.c = infinity;
    for (std::size_t i = 0; i < d_all.size(); ++i) fit.c = std::min(fit.c, f_all[i] / std::pow(d_all[i], fit.alpha));
    for (std::size_t i = 0; i < d_all.size(); ++i) {
        double bound = fit.c * std::pow(d_all[i], fit.alpha);
        if (f_all[i] < bound * (1 - 1e-12)) {  // rounding in c = min f / d^alpha
            ++fit.violations;
            fit.residual = std::max(fit.residual, (bound - f_all[i]) / bound);
        }
    }
    return fit;
}

/// 1-D target (lo, hi): frontier is {lo, hi}.
inline LowerBoundFit fit_lower_bound(const WeightField& f, const std::vector<Point>& B, Interval target) {
    return fit_lower_bound(f, B, [target](Point p) { return std::min(p.x - target.lo, target.hi - p.x); });
}

inline LowerBoundFit fit_lower_bound(const WeightField& f, const std::vector<Point>& B, const GridDomain& g) {
    require(g.spec().has_value(), ErrorCode::InvalidArgument, "frontier distance needs a catalog domain");
    DomainSpec s = *g.spec();
    return fit_lower_bound(f, B, [s](Point p) { return s.frontier_distance(p); });
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const PushforwardSpec& p) {
    using nlohmann::json;
    const SourceMeasure& s = p.source;
    std::string dens = s.xi.kind == DensityKind::Constant ? "constant"
                       : s.xi.kind == DensityKind::Monomial ? "monomial"
                                                            : "radial";
    std::string sup = s.support == SupportKind::Box    ? "box"
                      : s.support == SupportKind::Ball ? "ball"
                      : s.support == SupportKind::Band ? "band"
                                                       : "shell";
    json box = json::array();
    for (const Interval& iv : s.box) box.push_back({iv.lo, iv.hi});
    return json{{"name", p.name},
                {"map", to_string(p.map)},
                {"dim", s.dim},
                {"density", {{"kind", dens}, {"c", s.xi.c}, {"a", s.xi.a}}},
                {"support", {{"kind", sup}, {"box", box}, {"radius", s.radius}, {"r_in", s.r_in}, {"l", s.l}}}};
}

inline PushforwardSpec pushforward_from_json(const nlohmann::json& j, const std::string& path = "measure") {
    detail::reject_unknown_keys(j, {"name", "map", "dim", "density", "support"}, path);
    PushforwardSpec p;
    p.name = detail::get_or<std::string>(j, "name", "", path);
    p.map = map_kind_from_string(detail::get_or<std::string>(j, "map", "identity", path));
    SourceMeasure& s = p.source;
    s.dim = detail::get_or(j, "dim", 1, path);
    if (j.contains("density")) {
        const auto& dj = j.at("density");
        detail::reject_unknown_keys(dj, {"kind", "c", "a"}, path + ".density");
        std::string k = detail::get_or<std::string>(dj, "kind", "constant", path + ".density");
        if (k == "constant") s.xi.kind = DensityKind::Constant;
        else if (k == "monomial") s.xi.kind = DensityKind::Monomial;
        else if (k == "radial") s.xi.kind = DensityKind::Radial;
        else throw Error(ErrorCode::ConfigError, path + ".density.kind: unknown density '" + k + "'");
        s.xi.c = detail::get_or(dj, "c", 1.0, path + ".density");
        s.xi.a = detail::get_or(dj, "a", 0.0, path + ".density");
    }
    std::string sup = "box";
    if (j.contains("support")) {
        const auto& sj = j.at("support");
        std::string sp = path + ".support";
        detail::reject_unknown_keys(sj, {"kind", "box", "radius", "r_in", "l"}, sp);
        sup = detail::get_or<std::string>(sj, "kind", "box", sp);
        s.radius = detail::get_or(sj, "radius", 1.0, sp);
        s.r_in = detail::get_or(sj, "r_in", 0.0, sp);
        s.l = detail::get_or(sj, "l", 2.0, sp);
        if (sj.contains("box")) {
            s.box.clear();
            for (const auto& iv : sj.at("box")) {
                if (!iv.is_array() || iv.size() != 2) throw Error(ErrorCode::ConfigError, sp + ".box: expected [lo, hi] pairs");
                s.box.push_back({iv[0].get<double>(), iv[1].get<double>()});
            }
        } else {
            s.box.assign(s.dim, Interval{0.0, 1.0});
        }
    } else {
        s.box.assign(s.dim, Interval{0.0, 1.0});
    }
    if (sup == "box") s.support = SupportKind::Box;
    else if (sup == "ball") s.support = SupportKind::Ball;
    else if (sup == "band") s.support = SupportKind::Band;
    else if (sup == "shell") s.support = SupportKind::Shell;
    else throw Error(ErrorCode::ConfigError, path + ".support.kind: unknown support '" + sup + "'");
    try {
        p.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, path + ": " + e.what());
    }
    return p;
}

}  // namespace wsob
