#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace wsob {

inline constexpr double pi = std::numbers::pi;
inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// Point of the plane; one-dimensional domains leave y at zero.
struct Point {
    double x = 0.0;
    double y = 0.0;

    friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Point a, Point b) = default;
};

inline double norm(Point p) { return std::hypot(p.x, p.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

/// Open interval (lo, hi).
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi > lo ? hi - lo : 0.0; }
    bool contains(double t) const { return lo < t && t < hi; }
};

/// Axis-aligned rectangle; for dim 1 only the x range matters.
struct Box {
    Interval x;
    Interval y;
};

}  // namespace wsob
