#pragma once

// Quasi-homogeneous retractions of catalog domains onto their base point, and fits of
// the inequalities they are expected to satisfy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wsob/core.hpp"
#include "wsob/error.hpp"
#include "wsob/geometry.hpp"
#include "wsob/rng.hpp"

namespace wsob {

/// r_s(x, y) = (s x, s^l y) on PowerCusp(l); r_s(p) = s p on Disk, Sector and Interval.
struct Retraction {
    DomainSpec spec;

    explicit Retraction(DomainSpec s) : spec(std::move(s)) {
        spec.validate();
        bool ok = spec.kind == DomainKind::PowerCusp || spec.kind == DomainKind::Sector ||
                  spec.kind == DomainKind::Disk || (spec.kind == DomainKind::Interval && spec.a == 0.0);
        require(ok, ErrorCode::InvalidArgument, "no catalog retraction for domain kind " + to_string(spec.kind));
        require(spec.eps_cut == 0.0, ErrorCode::InvalidArgument, "retractions need an uncut domain");
    }

    /// The scaling for any s > 0 (no membership check).
    Point scale(double s, Point p) const {
        if (spec.kind == DomainKind::PowerCusp) return {s * p.x, std::pow(s, spec.l) * p.y};
        return s * p;
    }

    /// d/ds of the scaling.
    Point scale_ds(double s, Point p) const {
        if (spec.kind == DomainKind::PowerCusp) return {p.x, spec.l * std::pow(s, spec.l - 1) * p.y};
        return p;
    }

    /// R(t, .) inverts r_{1/t}.
    Point inverse_family(double t, Point p) const { return scale(t, p); }
};

inline Point apply_retraction(const Retraction& ret, double s, Point x) {
    require(s > 0 && s <= 1, ErrorCode::InvalidArgument, "retraction parameter must lie in (0, 1]");
    if (!ret.spec.contains(x)) throw Error(ErrorCode::OutOfDomain, "point is not in the domain");
    Point y = ret.scale(s, x);
    if (!ret.spec.contains(y)) throw Error(ErrorCode::OutOfDomain, "retracted point left the domain");
    return y;
}

/// Slice map N^eta -> N^{s eta}: r_s followed by radial projection onto the sphere of radius s*eta.
inline Point slice_map(const Retraction& ret, double s, double eta, Point x) {
    Point y = ret.scale(s, x);
    double r = norm(y);
    return r > 0 ? (s * eta / r) * y : y;
}

// ---------------------------------------------------------------------------
// Fits

struct FitReport {
    std::string inequality;
    bool found = false;
    double C = 0.0;
    int nu = 0;
    double max_violation = 0.0;  // max relative shortfall at the reported (C, nu); 0 when found
    int samples = 0;
    std::vector<std::pair<double, double>> per_s;  // (s, extreme value of the checked quantity)
};

inline nlohmann::json to_json(const FitReport& f) {
    return nlohmann::json{{"inequality", f.inequality}, {"found", f.found}, {"C", f.C},
                          {"nu", f.nu},                 {"max_violation", f.max_violation}, {"samples", f.samples}};
}

inline const std::vector<double>& fit_constants() {
    static const std::vector<double> cs{1.0, 2.0, 5.0, 10.0};
    return cs;
}
inline constexpr int max_fit_exponent = 12;
inline constexpr double fit_slack = 1e-12;

/// Smallest C in {1,2,5,10}, then smallest integer nu in 0..12, with lower(s) >= s^nu / C and
/// upper(s) <= C for every sample (s, lower, upper). C goes first: on a finite s range a larger
/// C can hide the power law behind a smaller nu.
inline FitReport fit_power_bound(const std::string& name, const std::vector<std::array<double, 3>>& samples) {
    FitReport rep;
    rep.inequality = name;
    rep.samples = static_cast<int>(samples.size());
    require(!samples.empty(), ErrorCode::InvalidArgument, "no samples to fit");
    double worst = infinity;
    for (double C : fit_constants()) {
        for (int nu = 0; nu <= max_fit_exponent; ++nu) {
            double viol = 0.0;
            for (const auto& [s, lo, hi] : samples) {
                double need = std::pow(s, nu) / C;
                if (lo < need * (1 - fit_slack)) viol = std::max(viol, (need - lo) / need);
                if (hi > C * (1 + fit_slack)) viol = std::max(viol, (hi - C) / C);
            }
            if (viol == 0.0) {
                rep.found = true;
                rep.nu = nu;
                rep.C = C;
                return rep;
            }
            if (viol < worst) {
                worst = viol;
                rep.nu = nu;
                rep.C = C;
            }
        }
    }
    rep.max_violation = worst;
    return rep;
}

/// Seeded sample points of the domain: log-uniform distance to the base point.
inline std::vector<Point> sample_points(const Retraction& ret, int count, std::uint64_t seed, double min_scale = 1e-3) {
    require(count > 0, ErrorCode::InvalidArgument, "sample count must be positive");
    Rng rng(seed);
    std::vector<Point> out;
    const DomainSpec& s = ret.spec;
    while (static_cast<int>(out.size()) < count) {
        double r = std::exp(rng.uniform(std::log(min_scale), 0.0));
        Point p;
        switch (s.kind) {
            case DomainKind::PowerCusp: {
                double w = std::pow(r, s.l);
                p = {r, rng.uniform(-w, w)};
                break;
            }
            case DomainKind::Interval: p = {s.a + r * (s.b - s.a), 0.0}; break;
            case DomainKind::Disk: {
                double th = rng.uniform(-pi, pi);
                p = s.radius * r * Point{std::cos(th), std::sin(th)};
                break;
            }
            default: {
                double th = rng.uniform(-0.5 * s.angle, 0.5 * s.angle);
                p = r * Point{std::cos(th), std::sin(th)};
                break;
            }
        }
        if (s.contains(p)) out.push_back(p);
    }
    return out;
}

/// C = max over s of (max pairwise |r_s x - r_s x'| / |x - x'|) / s.
inline FitReport check_lipschitz_cs(const Retraction& ret, const std::vector<double>& s_grid,
                                    const std::vector<Point>& points) {
    require(points.size() >= 2, ErrorCode::InvalidArgument, "need at least two sample points");
    require(!s_grid.empty(), ErrorCode::InvalidArgument, "empty s grid");
    FitReport rep;
    rep.inequality = "lipschitz-cs";
    rep.found = true;
    double C = 0.0;
    for (double s : s_grid) {
        double best = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i)
            for (std::size_t j = i + 1; j < points.size(); ++j) {
                double d = distance(points[i], points[j]);
                if (d == 0) continue;
                best = std::max(best, distance(apply_retraction(ret, s, points[i]), apply_retraction(ret, s, points[j])) / d);
            }
        rep.per_s.push_back({s, best});
        C = std::max(C, best / s);
        ++rep.samples;
    }
    rep.C = C;
    rep.nu = 1;
    return rep;
}

struct JacobianFits {
    FitReport slice_map;  // jac r_s^eta >= s^nu / C
    FitReport inverse;    // jac R_t^eta >= t^(m-1) / C, nu reported as m - 1
};

/// Minimum over slice segments of |image chord| / |chord| for the slice map at (s, eta).
inline double min_slice_jacobian(const Retraction& ret, double s, double eta, int segments_per_arc = 64) {
    SphereSlice sl = sphere_slice(ret.spec, eta, eta * 1e-3);
    Point x0 = ret.spec.base_point();
    double best = infinity;
    for (auto [lo, hi] : sl.arcs) {
        for (int k = 0; k < segments_per_arc; ++k) {
            double a = lo + (hi - lo) * k / segments_per_arc, b = lo + (hi - lo) * (k + 1) / segments_per_arc;
            Point pa = x0 + eta * Point{std::cos(a), std::sin(a)}, pb = x0 + eta * Point{std::cos(b), std::sin(b)};
            double src = distance(pa, pb);
            if (src == 0) continue;
            best = std::min(best, distance(slice_map(ret, s, eta, pa), slice_map(ret, s, eta, pb)) / src);
        }
    }
    return best;
}

inline JacobianFits check_jacobian_bounds(const Retraction& ret, const std::vector<double>& s_grid,
                                          const std::vector<double>& eta_grid) {
    require(!s_grid.empty() && !eta_grid.empty(), ErrorCode::InvalidArgument, "empty s or eta grid");
    require(ret.spec.dim() == 2, ErrorCode::InvalidArgument, "slice Jacobians need a planar domain");
    std::vector<std::array<double, 3>> fwd, inv;
    JacobianFits out;
    for (double s : s_grid) {
        require(s > 0 && s <= 1, ErrorCode::InvalidArgument, "s must lie in (0, 1]");
        double lo = infinity;
        for (double eta : eta_grid) {
            double j = min_slice_jacobian(ret, s, eta);
            fwd.push_back({s, j, 0.0});
            lo = std::min(lo, j);
            // R_t^eta inverts r_{1/t}^{t eta}; chord ratios of the inverse map at t = s
            double ji = infinity;
            SphereSlice sl = sphere_slice(ret.spec, eta, eta * 1e-3);
            for (auto [a0, a1] : sl.arcs)
                for (int k = 0; k < 64; ++k) {
                    double a = a0 + (a1 - a0) * k / 64, b = a0 + (a1 - a0) * (k + 1) / 64;
                    Point pa = eta * Point{std::cos(a), std::sin(a)}, pb = eta * Point{std::cos(b), std::sin(b)};
                    auto R = [&](Point p) {
                        Point y = ret.inverse_family(s, p);
                        return (s * eta / norm(y)) * y;
                    };
                    ji = std::min(ji, distance(R(pa), R(pb)) / distance(pa, pb));
                }
            inv.push_back({s, ji, 0.0});
        }
        out.slice_map.per_s.push_back({s, lo});
    }
    auto keep = out.slice_map.per_s;
    out.slice_map = fit_power_bound("jacobian-slice-map", fwd);
    out.slice_map.per_s = keep;
    out.inverse = fit_power_bound("jacobian-inverse-family", inv);
    return out;
}

/// s^nu/C f(y) <= f(r_s y) <= C f(y) over sampled (s, y).
inline FitReport check_density_comparison(const Retraction& ret, const std::function<double(Point)>& f,
                                          const std::vector<double>& s_grid, const std::vector<Point>& points) {
    require(!s_grid.empty() && !points.empty(), ErrorCode::InvalidArgument, "empty s grid or sample set");
    std::vector<std::array<double, 3>> samples;
    FitReport rep;
    for (double s : s_grid) {
        double lo = infinity;
        for (const Point& y : points) {
            double fy = f(y);
            if (!(fy > 0)) continue;
            double q = f(apply_retraction(ret, s, y)) / fy;
            samples.push_back({s, q, q});
            lo = std::min(lo, q);
        }
        rep.per_s.push_back({s, lo});
    }
    auto keep = rep.per_s;
    rep = fit_power_bound("density-comparison", samples);
    rep.per_s = keep;
    if (!rep.found)
        throw Error(ErrorCode::NoFitFound, "no nu <= 12 and C in {1,2,5,10} bound the density ratio (worst violation " +
                                               std::to_string(rep.max_violation) + ")");
    return rep;
}

/// max over samples of |dr/ds (s, x)| / |x - x0|, by central differences in s.
inline FitReport check_partial_s(const Retraction& ret, const std::vector<double>& s_grid,
                                 const std::vector<Point>& points) {
    require(s_grid.size() >= 2, ErrorCode::InvalidArgument, "s grid needs at least two values");
    require(!points.empty(), ErrorCode::InvalidArgument, "empty sample set");
    FitReport rep;
    rep.inequality = "partial-s";
    rep.found = true;
    Point x0 = ret.spec.base_point();
    for (double s : s_grid) {
        double ds = 1e-6 * s, best = 0.0;
        for (const Point& x : points) {
            Point d = (1.0 / (2 * ds)) * (ret.scale(s + ds, x) - ret.scale(s - ds, x));
            best = std::max(best, norm(d) / distance(x, x0));
        }
        rep.per_s.push_back({s, best});
        rep.C = std::max(rep.C, best);
        rep.samples += static_cast<int>(points.size());
    }
    return rep;
}

/// max over (t, eta, slice points) of |d/dt R_t^eta| / eta, by central differences.
inline FitReport check_partial_t_slice(const Retraction& ret, const std::vector<double>& t_grid,
                                       const std::vector<double>& eta_grid) {
    require(t_grid.size() >= 2 && !eta_grid.empty(), ErrorCode::InvalidArgument, "t grid needs two values");
    FitReport rep;
    rep.inequality = "partial-t-slice";
    rep.found = true;
    for (double t : t_grid) {
        double dt = 1e-6 * t, best = 0.0;
        for (double eta : eta_grid) {
            SphereSlice sl = sphere_slice(ret.spec, eta, eta * 1e-2);
            for (const Point& p : sl.points) {
                Point d = (1.0 / (2 * dt)) * (slice_map(ret, t + dt, eta, p) - slice_map(ret, t - dt, eta, p));
                best = std::max(best, norm(d) / eta);
                ++rep.samples;
            }
        }
        rep.per_s.push_back({t, best});
        rep.C = std::max(rep.C, best);
    }
    return rep;
}

}  // namespace wsob
