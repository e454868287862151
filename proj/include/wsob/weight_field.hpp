#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "wsob/core.hpp"
#include "wsob/error.hpp"
#include "wsob/geometry.hpp"

namespace wsob {

enum class Provenance { Analytic, Coarea, MonteCarlo, Tabulated };

inline std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::Analytic: return "analytic";
        case Provenance::Coarea: return "coarea";
        case Provenance::MonteCarlo: return "monte-carlo";
        case Provenance::Tabulated: return "tabulated";
    }
    return "unknown";
}

/// Nonnegative density sampled at points (grid nodes or a 1-D target grid).
/// +inf is allowed as a sentinel; such nodes are skipped by norm assembly.
struct WeightField {
    std::vector<Point> points;
    std::vector<double> values;
    Provenance provenance = Provenance::Tabulated;

    std::size_t size() const { return values.size(); }

    /// Finite and strictly positive.
    bool usable(std::size_t i) const { return values[i] > 0 && std::isfinite(values[i]); }

    std::vector<int> support_nodes() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < values.size(); ++i)
            if (values[i] > 0) out.push_back(static_cast<int>(i));
        return out;
    }

    std::vector<int> infinite_nodes() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < values.size(); ++i)
            if (std::isinf(values[i])) out.push_back(static_cast<int>(i));
        return out;
    }

    void validate() const {
        require(points.size() == values.size(), ErrorCode::InvalidArgument, "weight field: points/values mismatch");
        for (double v : values) {
            if (std::isnan(v)) throw Error(ErrorCode::NonFiniteValue, "weight field contains NaN");
            require(v >= 0, ErrorCode::InvalidArgument, "weight field must be nonnegative");
        }
    }

    WeightField scaled(double c) const {
        WeightField w = *this;
        for (double& v : w.values) v *= c;
        return w;
    }

    template <class Fn>
    static WeightField on_grid(const GridDomain& g, Fn&& f, Provenance prov = Provenance::Analytic) {
        WeightField w;
        w.points = g.nodes();
        w.values.reserve(g.size());
        for (const Point& p : g.nodes()) w.values.push_back(f(p));
        w.provenance = prov;
        w.validate();
        return w;
    }

    static WeightField constant(const GridDomain& g, double c) {
        return on_grid(g, [c](Point) { return c; });
    }
};

/// CSV with columns x[,y],f,provenance.
inline void write_csv(std::ostream& os, const WeightField& w, int dim) {
    os << (dim == 1 ? "x" : "x,y") << ",f,provenance\n";
    os.precision(12);
    for (std::size_t i = 0; i < w.size(); ++i) {
        os << w.points[i].x;
        if (dim == 2) os << ',' << w.points[i].y;
        os << ',' << (std::isinf(w.values[i]) ? std::string("inf") : std::string()) ;
        if (!std::isinf(w.values[i])) os << w.values[i];
        os << ',' << to_string(w.provenance) << '\n';
    }
}

}  // namespace wsob
