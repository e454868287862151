#pragma once

// Model singular domains and their lattice discretizations.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wsob/core.hpp"
#include "wsob/error.hpp"
#include "wsob/quadrature.hpp"

namespace wsob {

enum class DomainKind { Interval, Square, Disk, Sector, PowerCusp, FlatCusp, Annulus, LShape };

inline std::string to_string(DomainKind kind) {
    switch (kind) {
        case DomainKind::Interval: return "interval";
        case DomainKind::Square: return "square";
        case DomainKind::Disk: return "disk";
        case DomainKind::Sector: return "sector";
        case DomainKind::PowerCusp: return "power-cusp";
        case DomainKind::FlatCusp: return "flat-cusp";
        case DomainKind::Annulus: return "annulus";
        case DomainKind::LShape: return "l-shape";
    }
    return "unknown";
}

inline DomainKind domain_kind_from_string(const std::string& name) {
    for (DomainKind k : {DomainKind::Interval, DomainKind::Square, DomainKind::Disk, DomainKind::Sector,
                         DomainKind::PowerCusp, DomainKind::FlatCusp, DomainKind::Annulus, DomainKind::LShape})
        if (to_string(k) == name) return k;
    throw Error(ErrorCode::ConfigError, "kind: unknown domain kind '" + name + "'");
}

namespace detail {

inline double segment_distance(Point p, Point a, Point b) {
    Point ab = b - a, ap = p - a;
    double len2 = ab.x * ab.x + ab.y * ab.y;
    double t = len2 > 0 ? std::clamp((ap.x * ab.x + ap.y * ab.y) / len2, 0.0, 1.0) : 0.0;
    return distance(p, a + t * ab);
}

inline void push_interval(std::vector<Interval>& out, double lo, double hi) {
    if (hi > lo) out.push_back({lo, hi});
}

}  // namespace detail

/// Parametric catalog domain. All 2-D kinds have base point x0 = (0, 0).
///
/// Interval (a, b); Square (0, side)^2; Disk |p| < radius; Sector 0 < |p| < 1 with
/// polar angle in (-angle/2, angle/2), angle in (0, pi]; PowerCusp 0 < x < 1, |y| < x^l;
/// FlatCusp 0 < x < 1, |y| < exp(-1/x^2); Annulus r_in < |p| < r_out;
/// LShape (0,1)^2 minus [1/2,1)^2. Points with x < eps_cut are removed.
struct DomainSpec {
    DomainKind kind = DomainKind::Square;
    double a = 0.0, b = 1.0;  // Interval
    double side = 1.0;        // Square
    double radius = 1.0;      // Disk
    double angle = pi / 2;    // Sector
    double l = 2.0;           // PowerCusp
    double r_in = 1.0, r_out = 2.0;  // Annulus
    double eps_cut = 0.0;

    static DomainSpec interval(double lo = 0.0, double hi = 1.0) {
        DomainSpec s;
        s.kind = DomainKind::Interval;
        s.a = lo;
        s.b = hi;
        return s;
    }
    static DomainSpec square(double side = 1.0) {
        DomainSpec s;
        s.kind = DomainKind::Square;
        s.side = side;
        return s;
    }
    static DomainSpec disk(double radius = 1.0) {
        DomainSpec s;
        s.kind = DomainKind::Disk;
        s.radius = radius;
        return s;
    }
    static DomainSpec sector(double angle = pi / 2) {
        DomainSpec s;
        s.kind = DomainKind::Sector;
        s.angle = angle;
        return s;
    }
    static DomainSpec power_cusp(double l) {
        DomainSpec s;
        s.kind = DomainKind::PowerCusp;
        s.l = l;
        return s;
    }
    static DomainSpec flat_cusp() {
        DomainSpec s;
        s.kind = DomainKind::FlatCusp;
        return s;
    }
    static DomainSpec annulus(double r_in, double r_out) {
        DomainSpec s;
        s.kind = DomainKind::Annulus;
        s.r_in = r_in;
        s.r_out = r_out;
        return s;
    }
    static DomainSpec l_shape() {
        DomainSpec s;
        s.kind = DomainKind::LShape;
        return s;
    }
    DomainSpec with_eps_cut(double eps) const {
        DomainSpec s = *this;
        s.eps_cut = eps;
        return s;
    }

    int dim() const { return kind == DomainKind::Interval ? 1 : 2; }

    Point base_point() const { return kind == DomainKind::Interval ? Point{a, 0.0} : Point{0.0, 0.0}; }

    void validate() const {
        auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
        switch (kind) {
            case DomainKind::Interval:
                if (!(b > a)) bad("interval requires a < b");
                break;
            case DomainKind::Square:
                if (!(side > 0)) bad("square side must be positive");
                break;
            case DomainKind::Disk:
                if (!(radius > 0)) bad("disk radius must be positive");
                break;
            case DomainKind::Sector:
                if (!(angle > 0 && angle <= pi)) bad("sector angle must lie in (0, pi]");
                break;
            case DomainKind::PowerCusp:
                if (!(l >= 1)) bad("power cusp exponent must be >= 1");
                break;
            case DomainKind::Annulus:
                if (!(r_in >= 0 && r_out > r_in)) bad("annulus requires 0 <= r_in < r_out");
                break;
            default:
                break;
        }
        if (!(eps_cut >= 0)) bad("eps_cut must be >= 0");
    }

    Box bounding_box() const {
        switch (kind) {
            case DomainKind::Interval: return {{a, b}, {0, 0}};
            case DomainKind::Square: return {{0, side}, {0, side}};
            case DomainKind::Disk: return {{-radius, radius}, {-radius, radius}};
            case DomainKind::Annulus: return {{-r_out, r_out}, {-r_out, r_out}};
            case DomainKind::LShape: return {{0, 1}, {0, 1}};
            case DomainKind::Sector:
            case DomainKind::PowerCusp:
            case DomainKind::FlatCusp: return {{0, 1}, {-1, 1}};
        }
        return {};
    }

    /// Half-width of the vertical cross-section of the cusps.
    double cusp_width(double x) const {
        if (kind == DomainKind::FlatCusp) return x > 0 ? std::exp(-1.0 / (x * x)) : 0.0;
        return x > 0 ? std::pow(x, l) : 0.0;
    }

    /// |y| < w(x), decided in log space once w(x) underflows (w > 0 for every x > 0).
    bool below_cusp_width(double x, double ay) const {
        if (!(x > 0)) return false;
        if (ay == 0) return true;
        double w = cusp_width(x);
        if (w > 0) return ay < w;
        double log_w = kind == DomainKind::FlatCusp ? -1.0 / (x * x) : l * std::log(x);
        return std::log(ay) < log_w;
    }

    bool contains(Point p) const {
        if (eps_cut > 0 && p.x < eps_cut) return false;
        switch (kind) {
            case DomainKind::Interval: return a < p.x && p.x < b;
            case DomainKind::Square: return 0 < p.x && p.x < side && 0 < p.y && p.y < side;
            case DomainKind::Disk: return p.x * p.x + p.y * p.y < radius * radius;
            case DomainKind::Annulus: {
                double r2 = p.x * p.x + p.y * p.y;
                return r_in * r_in < r2 && r2 < r_out * r_out;
            }
            case DomainKind::LShape:
                return 0 < p.x && p.x < 1 && 0 < p.y && p.y < 1 && !(p.x >= 0.5 && p.y >= 0.5);
            case DomainKind::Sector: {
                double r2 = p.x * p.x + p.y * p.y;
                if (!(r2 > 0 && r2 < 1)) return false;
                return std::abs(std::atan2(p.y, p.x)) < 0.5 * angle;
            }
            case DomainKind::PowerCusp:
            case DomainKind::FlatCusp:
                return 0 < p.x && p.x < 1 && below_cusp_width(p.x, std::abs(p.y));
        }
        return false;
    }

    /// Open y-intervals of the vertical line through x inside the domain.
    std::vector<Interval> column_sections(double x) const {
        std::vector<Interval> out;
        if (eps_cut > 0 && x < eps_cut) return out;
        switch (kind) {
            case DomainKind::Interval: break;
            case DomainKind::Square:
                if (0 < x && x < side) out.push_back({0, side});
                break;
            case DomainKind::Disk:
                if (std::abs(x) < radius) {
                    double w = std::sqrt(radius * radius - x * x);
                    out.push_back({-w, w});
                }
                break;
            case DomainKind::Annulus:
                if (std::abs(x) < r_out) {
                    double wo = std::sqrt(r_out * r_out - x * x);
                    if (std::abs(x) < r_in) {
                        double wi = std::sqrt(r_in * r_in - x * x);
                        detail::push_interval(out, -wo, -wi);
                        detail::push_interval(out, wi, wo);
                    } else {
                        out.push_back({-wo, wo});
                    }
                }
                break;
            case DomainKind::LShape:
                if (0 < x && x < 1) out.push_back({0, x < 0.5 ? 1.0 : 0.5});
                break;
            case DomainKind::Sector:
                if (0 < x && x < 1) {
                    double w = std::sqrt(1 - x * x);
                    if (angle < pi) w = std::min(w, x * std::tan(0.5 * angle));
                    detail::push_interval(out, -w, w);
                }
                break;
            case DomainKind::PowerCusp:
            case DomainKind::FlatCusp:
                if (0 < x && x < 1) out.push_back({-cusp_width(x), cusp_width(x)});  // may be degenerate
                break;
        }
        return out;
    }

    /// Open x-intervals of the horizontal line through y inside the domain.
    std::vector<Interval> row_sections(double y) const {
        std::vector<Interval> out;
        switch (kind) {
            case DomainKind::Interval: out.push_back({a, b}); break;
            case DomainKind::Square:
                if (0 < y && y < side) out.push_back({0, side});
                break;
            case DomainKind::Disk:
                if (std::abs(y) < radius) {
                    double w = std::sqrt(radius * radius - y * y);
                    out.push_back({-w, w});
                }
                break;
            case DomainKind::Annulus:
                if (std::abs(y) < r_out) {
                    double wo = std::sqrt(r_out * r_out - y * y);
                    if (std::abs(y) < r_in) {
                        double wi = std::sqrt(r_in * r_in - y * y);
                        detail::push_interval(out, -wo, -wi);
                        detail::push_interval(out, wi, wo);
                    } else {
                        out.push_back({-wo, wo});
                    }
                }
                break;
            case DomainKind::LShape:
                if (0 < y && y < 1) out.push_back({0, y < 0.5 ? 1.0 : 0.5});
                break;
            case DomainKind::Sector:
                if (std::abs(y) < 1) {
                    double lo = angle < pi ? std::abs(y) / std::tan(0.5 * angle) : 0.0;
                    detail::push_interval(out, lo, std::sqrt(1 - y * y));
                }
                break;
            case DomainKind::PowerCusp:
                if (std::abs(y) < 1) detail::push_interval(out, std::pow(std::abs(y), 1.0 / l), 1.0);
                break;
            case DomainKind::FlatCusp:
                if (y == 0) {
                    out.push_back({0, 1});
                } else if (std::abs(y) < std::exp(-1.0)) {
                    detail::push_interval(out, 1.0 / std::sqrt(std::log(1.0 / std::abs(y))), 1.0);
                }
                break;
        }
        if (eps_cut > 0) {
            std::vector<Interval> cut;
            for (Interval iv : out) detail::push_interval(cut, std::max(iv.lo, eps_cut), iv.hi);
            // a lattice point at exactly eps_cut is a member; keep the interval closed there
            for (Interval& iv : cut)
                if (iv.lo == eps_cut) iv.lo = std::nextafter(eps_cut, -infinity);
            return cut;
        }
        return out;
    }

    /// Whether the closed segment [p, q] lies in the domain (endpoints assumed members
    /// are re-checked). Exact up to the golden-section tolerance for the cusps.
    bool segment_inside(Point p, Point q) const {
        if (!contains(p) || !contains(q)) return false;
        switch (kind) {
            case DomainKind::Interval:
            case DomainKind::Square:
            case DomainKind::Disk:
            case DomainKind::Sector: return true;  // convex (sector angle <= pi)
            case DomainKind::Annulus: return detail::segment_distance({0, 0}, p, q) > r_in;
            case DomainKind::LShape: {
                // does the segment meet {x >= 1/2, y >= 1/2}?
                auto range = [](double a, double b) -> std::pair<double, double> {
                    if (a == b) return a >= 0.5 ? std::pair{0.0, 1.0} : std::pair{1.0, 0.0};
                    double t = (0.5 - a) / (b - a);
                    return b > a ? std::pair{std::max(0.0, t), 1.0} : std::pair{0.0, std::min(1.0, t)};
                };
                auto [x0, x1] = range(p.x, q.x);
                auto [y0, y1] = range(p.y, q.y);
                return std::max(x0, y0) > std::min(x1, y1);
            }
            case DomainKind::PowerCusp:
            case DomainKind::FlatCusp: {
                // w is convex on x^2 < 2/3 (everywhere for power cusps) and concave beyond, so
                // phi(t) = w(x(t)) -/+ y(t) attains its minimum at an end point or inside the convex part.
                // w is increasing, so a segment below the narrower end is inside
                if (below_cusp_width(std::min(p.x, q.x), std::max(std::abs(p.y), std::abs(q.y)))) return true;
                double t0 = 0.0, t1 = 1.0;
                if (kind == DomainKind::FlatCusp) {
                    double xs = std::sqrt(2.0 / 3.0);
                    if (p.x != q.x) {
                        double tc = (xs - p.x) / (q.x - p.x);
                        if (q.x > p.x) t1 = std::clamp(tc, 0.0, 1.0); else t0 = std::clamp(tc, 0.0, 1.0);
                    } else if (p.x >= xs) {
                        t1 = t0;
                    }
                }
                for (double sgn : {1.0, -1.0}) {
                    auto phi = [&](double t) {
                        Point r = p + t * (q - p);
                        return cusp_width(r.x) - sgn * r.y;
                    };
                    double g0 = t0, g1 = t1;
                    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
                    for (int it = 0; it < 80 && g1 - g0 > 1e-14; ++it) {
                        double m1 = g1 - gr * (g1 - g0), m2 = g0 + gr * (g1 - g0);
                        if (phi(m1) < phi(m2)) g1 = m2; else g0 = m1;
                    }
                    if (!(phi(0.5 * (g0 + g1)) > 0)) return false;
                }
                return true;
            }
        }
        return false;
    }

    /// Euclidean distance to the frontier (closure minus the set, including the cut line).
    double frontier_distance(Point p) const {
        double d = infinity;
        switch (kind) {
            case DomainKind::Interval: d = std::min(p.x - a, b - p.x); break;
            case DomainKind::Square: d = std::min({p.x, p.y, side - p.x, side - p.y}); break;
            case DomainKind::Disk: d = radius - norm(p); break;
            case DomainKind::Annulus: d = std::min(norm(p) - r_in, r_out - norm(p)); break;
            case DomainKind::LShape: {
                const std::array<Point, 6> v{Point{0, 0}, Point{1, 0}, Point{1, 0.5}, Point{0.5, 0.5},
                                             Point{0.5, 1}, Point{0, 1}};
                for (int i = 0; i < 6; ++i) d = std::min(d, detail::segment_distance(p, v[i], v[(i + 1) % 6]));
                break;
            }
            case DomainKind::Sector: {
                double half = 0.5 * angle;
                Point e1{std::cos(half), std::sin(half)}, e2{std::cos(half), -std::sin(half)};
                d = std::min(detail::segment_distance(p, {0, 0}, e1), detail::segment_distance(p, {0, 0}, e2));
                if (std::abs(std::atan2(p.y, p.x)) <= half) d = std::min(d, std::abs(1 - norm(p)));
                break;
            }
            case DomainKind::PowerCusp:
            case DomainKind::FlatCusp: d = cusp_frontier_distance(p); break;
        }
        if (eps_cut > 0) d = std::min(d, std::abs(p.x - eps_cut));
        return d;
    }

private:
    double cusp_frontier_distance(Point p) const {
        double ay = std::abs(p.y);
        auto dist_at = [&](double t) { return std::hypot(p.x - t, ay - cusp_width(t)); };
        double best = std::min(norm(p), detail::segment_distance(p, {1, -cusp_width(1)}, {1, cusp_width(1)}));
        // the nearest curve point lies within the vertical gap of p.x
        double gap = std::abs(cusp_width(p.x) - ay);
        double lo = std::max(0.0, p.x - gap), hi = std::min(1.0, p.x + gap);
        constexpr int samples = 64;
        double best_t = p.x;
        for (int i = 0; i <= samples; ++i) {
            double t = lo + (hi - lo) * i / samples;
            double dt = dist_at(t);
            if (dt < best) {
                best = dt;
                best_t = t;
            }
        }
        double step = (hi - lo) / samples;
        double g0 = std::max(lo, best_t - step), g1 = std::min(hi, best_t + step);
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        for (int it = 0; it < 60 && g1 - g0 > 1e-15; ++it) {
            double m1 = g1 - phi * (g1 - g0), m2 = g0 + phi * (g1 - g0);
            if (dist_at(m1) < dist_at(m2)) g1 = m2; else g0 = m1;
        }
        return std::min(best, dist_at(0.5 * (g0 + g1)));
    }
};

// ---------------------------------------------------------------------------
// Grid discretization

enum class Stencil { N4 = 4, N8 = 8, N16 = 16 };

inline std::string to_string(Stencil s) { return std::to_string(static_cast<int>(s)); }

inline Stencil stencil_from_int(int n) {
    switch (n) {
        case 4: return Stencil::N4;
        case 8: return Stencil::N8;
        case 16: return Stencil::N16;
        default: throw Error(ErrorCode::ConfigError, "stencil: must be 4, 8 or 16 (got " + std::to_string(n) + ")");
    }
}

/// Lattice offsets of the stencil, one per undirected edge direction.
inline std::vector<std::array<int, 2>> stencil_half_offsets(Stencil s, int dim) {
    if (dim == 1) return {{1, 0}};
    std::vector<std::array<int, 2>> out{{1, 0}, {0, 1}};
    if (s == Stencil::N8 || s == Stencil::N16) out.insert(out.end(), {{1, 1}, {1, -1}});
    if (s == Stencil::N16) out.insert(out.end(), {{1, 2}, {2, 1}, {2, -1}, {1, -2}});
    return out;
}

struct Edge {
    int a = 0;
    int b = 0;
    double length = 0.0;
};

/// Lattice points h*Z^dim strictly inside a domain, with cell volumes and a neighbor graph.
/// Immutable after construction.
class GridDomain {
public:
    using Membership = std::function<bool(Point)>;

    int dim() const { return dim_; }
    double h() const { return h_; }
    Stencil stencil() const { return stencil_; }
    const std::optional<DomainSpec>& spec() const { return spec_; }
    std::size_t size() const { return nodes_.size(); }

    const std::vector<Point>& nodes() const { return nodes_; }
    const Point& node(int i) const { return nodes_[i]; }
    const std::vector<std::array<int, 2>>& lattice() const { return lattice_; }
    const std::vector<double>& cell_volume() const { return volume_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<std::uint8_t>& boundary_flags() const { return boundary_; }

    /// Continuous membership predicate of the underlying domain.
    bool contains(Point p) const { return membership_ ? membership_(p) : false; }
    bool has_membership() const { return static_cast<bool>(membership_); }

    /// Segment test: exact for catalog domains, sampled at spacing <= h/8 otherwise.
    bool segment_inside(Point a, Point b) const {
        if (spec_) return spec_->segment_inside(a, b);
        if (!membership_) return true;
        int n = std::max(2, static_cast<int>(std::ceil(8 * distance(a, b) / h_)));
        for (int i = 0; i <= n; ++i)
            if (!membership_(a + (double(i) / n) * (b - a))) return false;
        return true;
    }

    /// Node index at lattice coordinates (i, j), or -1.
    int find_lattice(int i, int j) const {
        if (i < imin_ || i > imax_ || j < jmin_ || j > jmax_) return -1;
        return index_[static_cast<std::size_t>(i - imin_) * (jmax_ - jmin_ + 1) + (j - jmin_)];
    }

    /// Node located exactly at p (up to rounding to the lattice).
    std::optional<int> find_node(Point p) const {
        int i = static_cast<int>(std::lround(p.x / h_)), j = static_cast<int>(std::lround(p.y / h_));
        int idx = find_lattice(i, j);
        if (idx < 0 || distance(nodes_[idx], p) > 1e-9 * h_) return std::nullopt;
        return idx;
    }

    int nearest_node(Point p) const {
        int best = -1;
        double bd = infinity;
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            double d = distance(nodes_[k], p);
            if (d < bd) {
                bd = d;
                best = static_cast<int>(k);
            }
        }
        return best;
    }

    /// Catalog domain: membership from the spec, volumes from its cross-sections.
    static GridDomain build(const DomainSpec& spec, double h, Stencil stencil = Stencil::N8) {
        spec.validate();
        GridDomain g = build_lattice([spec](Point p) { return spec.contains(p); }, spec.bounding_box(), spec.dim(), h,
                                     stencil, spec);
        g.compute_section_volumes();
        return g;
    }

    /// Arbitrary domain given by a membership predicate on a bounding box; volumes h^dim.
    static GridDomain from_predicate(Membership contains, Box box, int dim, double h,
                                     Stencil stencil = Stencil::N8) {
        return build_lattice(std::move(contains), box, dim, h, stencil, std::nullopt);
    }

    /// Explicit node list (each point must lie on h*Z^dim); edges join stencil neighbors.
    static GridDomain from_nodes(const std::vector<Point>& points, std::vector<double> volumes, double h, int dim,
                                 Stencil stencil = Stencil::N8) {
        require(h > 0, ErrorCode::InvalidArgument, "grid spacing h must be positive");
        require(!points.empty(), ErrorCode::EmptyDomain, "no nodes given");
        require(volumes.size() == points.size(), ErrorCode::InvalidArgument, "one volume per node required");
        GridDomain g;
        g.dim_ = dim;
        g.h_ = h;
        g.stencil_ = stencil;
        g.imin_ = g.jmin_ = std::numeric_limits<int>::max();
        g.imax_ = g.jmax_ = std::numeric_limits<int>::min();
        for (Point p : points) {
            int i = static_cast<int>(std::lround(p.x / h)), j = static_cast<int>(std::lround(p.y / h));
            g.lattice_.push_back({i, j});
            g.nodes_.push_back({i * h, j * h});
            g.imin_ = std::min(g.imin_, i);
            g.imax_ = std::max(g.imax_, i);
            g.jmin_ = std::min(g.jmin_, j);
            g.jmax_ = std::max(g.jmax_, j);
        }
        g.index_.assign(static_cast<std::size_t>(g.imax_ - g.imin_ + 1) * (g.jmax_ - g.jmin_ + 1), -1);
        for (std::size_t k = 0; k < g.nodes_.size(); ++k) {
            auto [i, j] = g.lattice_[k];
            int& slot = g.index_[static_cast<std::size_t>(i - g.imin_) * (g.jmax_ - g.jmin_ + 1) + (j - g.jmin_)];
            require(slot < 0, ErrorCode::InvalidArgument, "duplicate node");
            slot = static_cast<int>(k);
        }
        g.volume_ = std::move(volumes);
        g.build_edges(false);
        g.build_boundary();
        return g;
    }

private:
    static GridDomain build_lattice(Membership contains, Box box, int dim, double h, Stencil stencil,
                                    std::optional<DomainSpec> spec) {
        require(h > 0, ErrorCode::InvalidArgument, "grid spacing h must be positive");
        require(box.x.hi > box.x.lo && (dim == 1 || box.y.hi > box.y.lo), ErrorCode::InvalidArgument,
                "bounding box must be nonempty");
        GridDomain g;
        g.dim_ = dim;
        g.h_ = h;
        g.stencil_ = stencil;
        g.membership_ = std::move(contains);
        g.spec_ = std::move(spec);
        g.imin_ = static_cast<int>(std::floor(box.x.lo / h));
        g.imax_ = static_cast<int>(std::ceil(box.x.hi / h));
        g.jmin_ = dim == 1 ? 0 : static_cast<int>(std::floor(box.y.lo / h));
        g.jmax_ = dim == 1 ? 0 : static_cast<int>(std::ceil(box.y.hi / h));
        std::size_t ny = static_cast<std::size_t>(g.jmax_ - g.jmin_ + 1);
        g.index_.assign(static_cast<std::size_t>(g.imax_ - g.imin_ + 1) * ny, -1);
        for (int i = g.imin_; i <= g.imax_; ++i) {
            for (int j = g.jmin_; j <= g.jmax_; ++j) {
                Point p{i * h, j * h};
                if (!g.membership_(p)) continue;
                g.index_[static_cast<std::size_t>(i - g.imin_) * ny + (j - g.jmin_)] = static_cast<int>(g.nodes_.size());
                g.nodes_.push_back(p);
                g.lattice_.push_back({i, j});
            }
        }
        if (g.nodes_.empty()) throw Error(ErrorCode::EmptyDomain, "no lattice point of spacing h lies in the domain");
        g.volume_.assign(g.nodes_.size(), dim == 1 ? h : h * h);
        g.build_edges(true);
        g.build_boundary();
        return g;
    }

    void build_edges(bool check_segments) {
        auto offsets = stencil_half_offsets(stencil_, dim_);
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            auto [i, j] = lattice_[k];
            for (auto [di, dj] : offsets) {
                int other = find_lattice(i + di, j + dj);
                if (other < 0) continue;
                if (check_segments && !segment_inside(nodes_[k], nodes_[other])) continue;
                edges_.push_back({static_cast<int>(k), other, h_ * std::hypot(double(di), double(dj))});
            }
        }
    }

    void build_boundary() {
        boundary_.assign(nodes_.size(), 0);
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            auto [i, j] = lattice_[k];
            bool interior = find_lattice(i - 1, j) >= 0 && find_lattice(i + 1, j) >= 0;
            if (dim_ == 2) interior = interior && find_lattice(i, j - 1) >= 0 && find_lattice(i, j + 1) >= 0;
            boundary_[k] = interior ? 0 : 1;
        }
    }

    // Share of a section interval owned by the lattice point at index n along a line:
    // [n h - h/2, n h + h/2], with the outermost member of the interval extended to its end.
    double section_share(const std::vector<Interval>& sections, int n, bool has_prev, bool has_next) const {
        double t = n * h_;
        for (const Interval& iv : sections) {
            if (!(iv.lo <= t && t <= iv.hi)) continue;
            bool prev_inside = has_prev && (n - 1) * h_ > iv.lo;
            bool next_inside = has_next && (n + 1) * h_ < iv.hi;
            double lo = prev_inside ? t - 0.5 * h_ : std::min(iv.lo, t);
            double hi = next_inside ? t + 0.5 * h_ : std::max(iv.hi, t);
            return hi - lo;
        }
        return h_;
    }

    void compute_section_volumes() {
        const DomainSpec& s = *spec_;
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            auto [i, j] = lattice_[k];
            Point p = nodes_[k];
            double xs = section_share(s.row_sections(p.y), i, find_lattice(i - 1, j) >= 0, find_lattice(i + 1, j) >= 0);
            if (dim_ == 1) {
                volume_[k] = xs;
                continue;
            }
            double ys =
                section_share(s.column_sections(p.x), j, find_lattice(i, j - 1) >= 0, find_lattice(i, j + 1) >= 0);
            volume_[k] = xs * ys;
        }
    }

    int dim_ = 2;
    double h_ = 0.0;
    Stencil stencil_ = Stencil::N8;
    std::optional<DomainSpec> spec_;
    Membership membership_;
    std::vector<Point> nodes_;
    std::vector<std::array<int, 2>> lattice_;
    std::vector<double> volume_;
    std::vector<Edge> edges_;
    std::vector<std::uint8_t> boundary_;
    std::vector<int> index_;
    int imin_ = 0, imax_ = 0, jmin_ = 0, jmax_ = 0;
};

inline GridDomain build_grid_domain(const DomainSpec& spec, double h, Stencil stencil = Stencil::N8) {
    return GridDomain::build(spec, h, stencil);
}

// ---------------------------------------------------------------------------
// Sphere slices N^eta = S(x0, eta) ∩ M

struct SphereSlice {
    double eta = 0.0;
    std::vector<Point> points;
    std::vector<double> weights;  // arc length (counting measure in 1-D)
    std::vector<std::pair<double, double>> arcs;  // angular intervals

    double total_weight() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

/// Quadrature on the part of the circle of radius eta about the base point lying in the
/// domain. Arc ends are located by bisection on the membership predicate; `tol` sets the
/// angular scan spacing (in length units) and the panel size of the Gauss rule.
inline SphereSlice sphere_slice(const DomainSpec& spec, double eta, double tol = 1e-3) {
    require(eta > 0, ErrorCode::InvalidArgument, "slice radius must be positive");
    require(tol > 0, ErrorCode::InvalidArgument, "slice tolerance must be positive");
    SphereSlice slice;
    slice.eta = eta;
    Point x0 = spec.base_point();
    if (spec.dim() == 1) {
        for (double sgn : {-1.0, 1.0}) {
            Point p{x0.x + sgn * eta, 0.0};
            if (spec.contains(p)) {
                slice.points.push_back(p);
                slice.weights.push_back(1.0);
            }
        }
        if (slice.points.empty()) throw Error(ErrorCode::EmptySlice, "sphere misses the domain");
        return slice;
    }
    auto on_circle = [&](double th) { return x0 + eta * Point{std::cos(th), std::sin(th)}; };
    auto inside = [&](double th) { return spec.contains(on_circle(th)); };

    int n = static_cast<int>(std::clamp(std::ceil(2 * pi * eta / tol), 256.0, 65536.0));
    // angles on [-pi, pi) with theta = 0 included (cusps and sectors open along +x)
    std::vector<double> theta(n);
    for (int i = 0; i < n; ++i) theta[i] = -pi + 2 * pi * i / n;
    if (n % 2 == 1) theta.push_back(0.0), std::sort(theta.begin(), theta.end()), ++n;
    std::vector<char> in(n);
    for (int i = 0; i < n; ++i) in[i] = inside(theta[i]);

    auto refine = [&](double th_out, double th_in) {
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (th_out + th_in);
            if (mid == th_out || mid == th_in) break;
            (inside(mid) ? th_in : th_out) = mid;
        }
        return th_in;
    };

    bool any = std::any_of(in.begin(), in.end(), [](char c) { return c; });
    bool all = std::all_of(in.begin(), in.end(), [](char c) { return c; });
    if (!any) throw Error(ErrorCode::EmptySlice, "sphere of radius " + std::to_string(eta) + " misses the domain");
    if (all) {
        slice.arcs.push_back({-pi, pi});
    } else {
        // rotate so that index 0 is outside, then collect member runs
        int start = 0;
        while (in[start]) ++start;
        for (int k = 1; k <= n; ++k) {
            int i = (start + k) % n;
            int prev = (start + k - 1) % n;
            if (in[i] && !in[prev]) {
                int j = i;
                while (in[(j + 1) % n]) j = (j + 1) % n;
                double th_prev = theta[prev], th_i = theta[i], th_j = theta[j], th_next = theta[(j + 1) % n];
                if (th_prev > th_i) th_prev -= 2 * pi;
                if (th_next < th_j) th_next += 2 * pi;
                double lo = refine(th_prev, th_i);
                double hi = refine(th_next, th_j);
                if (hi < lo) hi += 2 * pi;
                slice.arcs.push_back({lo, hi});
            }
        }
    }
    const GaussRule& rule = gauss_legendre(4);
    for (auto [lo, hi] : slice.arcs) {
        double len = eta * (hi - lo);
        int panels = static_cast<int>(std::clamp(std::ceil(len / tol), 1.0, 512.0));
        double width = (hi - lo) / panels;
        for (int pnl = 0; pnl < panels; ++pnl) {
            double a = lo + pnl * width;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                double th = a + 0.5 * width * (rule.nodes[q] + 1);
                slice.points.push_back(on_circle(th));
                slice.weights.push_back(0.5 * width * rule.weights[q] * eta);
            }
        }
    }
    return slice;
}

inline SphereSlice sphere_slice(const GridDomain& domain, double eta, double tol = 1e-3) {
    require(domain.spec().has_value(), ErrorCode::InvalidArgument, "sphere slices need a catalog domain");
    return sphere_slice(*domain.spec(), eta, tol);
}

// ---------------------------------------------------------------------------
// JSON: {"kind": ..., "params": {...}, "h": ..., "stencil": ..., "eps_cut": ...}

struct GridConfig {
    DomainSpec spec;
    double h = 1.0 / 64;
    Stencil stencil = Stencil::N8;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                                const std::string& path) {
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, path + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw Error(ErrorCode::ConfigError, (path.empty() ? "" : path + ".") + it.key() + ": unknown key");
    }
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback, const std::string& path) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::ConfigError, (path.empty() ? "" : path + ".") + key + ": wrong type");
    }
}

}  // namespace detail

inline nlohmann::json domain_params_to_json(const DomainSpec& s) {
    using nlohmann::json;
    switch (s.kind) {
        case DomainKind::Interval: return json{{"a", s.a}, {"b", s.b}};
        case DomainKind::Square: return json{{"side", s.side}};
        case DomainKind::Disk: return json{{"radius", s.radius}};
        case DomainKind::Sector: return json{{"angle", s.angle}};
        case DomainKind::PowerCusp: return json{{"l", s.l}};
        case DomainKind::Annulus: return json{{"r_in", s.r_in}, {"r_out", s.r_out}};
        default: return json::object();
    }
}

inline nlohmann::json to_json(const GridConfig& c) {
    return nlohmann::json{{"kind", to_string(c.spec.kind)},
                          {"params", domain_params_to_json(c.spec)},
                          {"h", c.h},
                          {"stencil", static_cast<int>(c.stencil)},
                          {"eps_cut", c.spec.eps_cut}};
}

inline GridConfig grid_config_from_json(const nlohmann::json& j, const std::string& path = "domain") {
    detail::reject_unknown_keys(j, {"kind", "params", "h", "stencil", "eps_cut"}, path);
    require(j.contains("kind"), ErrorCode::ConfigError, path + ".kind: missing");
    GridConfig c;
    c.spec.kind = domain_kind_from_string(detail::get_or<std::string>(j, "kind", "", path));
    nlohmann::json params = j.contains("params") ? j.at("params") : nlohmann::json::object();
    std::string pp = path + ".params";
    DomainSpec& s = c.spec;
    switch (s.kind) {
        case DomainKind::Interval:
            detail::reject_unknown_keys(params, {"a", "b"}, pp);
            s.a = detail::get_or(params, "a", 0.0, pp);
            s.b = detail::get_or(params, "b", 1.0, pp);
            break;
        case DomainKind::Square:
            detail::reject_unknown_keys(params, {"side"}, pp);
            s.side = detail::get_or(params, "side", 1.0, pp);
            break;
        case DomainKind::Disk:
            detail::reject_unknown_keys(params, {"radius"}, pp);
            s.radius = detail::get_or(params, "radius", 1.0, pp);
            break;
        case DomainKind::Sector:
            detail::reject_unknown_keys(params, {"angle"}, pp);
            s.angle = detail::get_or(params, "angle", pi / 2, pp);
            break;
        case DomainKind::PowerCusp:
            detail::reject_unknown_keys(params, {"l"}, pp);
            s.l = detail::get_or(params, "l", 2.0, pp);
            break;
        case DomainKind::Annulus:
            detail::reject_unknown_keys(params, {"r_in", "r_out"}, pp);
            s.r_in = detail::get_or(params, "r_in", 1.0, pp);
            s.r_out = detail::get_or(params, "r_out", 2.0, pp);
            break;
        default:
            detail::reject_unknown_keys(params, {}, pp);
            break;
    }
    s.eps_cut = detail::get_or(j, "eps_cut", 0.0, path);
    c.h = detail::get_or(j, "h", 1.0 / 64, path);
    c.stencil = stencil_from_int(detail::get_or(j, "stencil", 8, path));
    try {
        s.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, pp + ": " + e.what());
    }
    require(c.h > 0, ErrorCode::ConfigError, path + ".h: must be positive");
    return c;
}

}  // namespace wsob
