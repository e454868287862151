#pragma once

// End-to-end verification suites and their reports.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wsob/core.hpp"
#include "wsob/error.hpp"
#include "wsob/geometry.hpp"
#include "wsob/kernel.hpp"
#include "wsob/measure.hpp"
#include "wsob/metric.hpp"
#include "wsob/retraction.hpp"
#include "wsob/sobolev.hpp"
#include "wsob/weight_field.hpp"

namespace wsob {

// ---------------------------------------------------------------------------
// Log-log fits

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;
};

/// Least squares of log y on log x.
inline ExponentFit fit_exponent(const std::vector<double>& xs, const std::vector<double>& ys) {
    require(xs.size() == ys.size(), ErrorCode::InvalidArgument, "fit needs matching x and y lists");
    require(xs.size() >= 3, ErrorCode::InvalidArgument, "fit needs at least three points");
    std::size_t n = xs.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        require(xs[i] > 0 && ys[i] > 0 && std::isfinite(xs[i]) && std::isfinite(ys[i]), ErrorCode::InvalidArgument,
                "fit needs positive finite points");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 1e-300)) throw Error(ErrorCode::DegenerateFit, "x values are constant");
    ExponentFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = ly[i] - (f.intercept + f.slope * lx[i]);
        ssr += r * r;
    }
    f.std_error = n > 2 ? std::sqrt(ssr / static_cast<double>(n - 2) / sxx) : 0.0;
    return f;
}

// ---------------------------------------------------------------------------
// Reports

/// Round to 12 significant digits so that printed reports are stable.
inline double sig12(double x) {
    if (!std::isfinite(x) || x == 0.0) return x;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::strtod(buf, nullptr);
}

inline std::string format12(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

enum class Compare {
    Abs,      // |m - e| <= tol
    Rel,      // |m - e| <= tol |e|
    AtMost,   // m <= e + tol
    AtLeast,  // m >= e - tol
    Above,    // m > e - tol
};

inline std::string to_string(Compare c) {
    switch (c) {
        case Compare::Abs: return "abs";
        case Compare::Rel: return "rel";
        case Compare::AtMost: return "at-most";
        case Compare::AtLeast: return "at-least";
        case Compare::Above: return "above";
    }
    return "?";
}

struct Record {
    std::string anchor;  // stable identifier of the checked statement
    std::string input;
    double measured = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    Compare compare = Compare::Abs;
    bool pass = false;
};

inline Record make_record(std::string anchor, std::string input, double measured, double expected, double tol,
                          Compare cmp) {
    Record r{std::move(anchor), std::move(input), measured, expected, tol, cmp, false};
    if (std::isfinite(measured)) {
        switch (cmp) {
            case Compare::Abs: r.pass = std::abs(measured - expected) <= tol; break;
            case Compare::Rel: r.pass = std::abs(measured - expected) <= tol * std::abs(expected); break;
            case Compare::AtMost: r.pass = measured <= expected + tol; break;
            case Compare::AtLeast: r.pass = measured >= expected - tol; break;
            case Compare::Above: r.pass = measured > expected - tol; break;
        }
    }
    return r;
}

struct FitEntry {
    std::string name;
    ExponentFit fit;
    std::vector<double> xs, ys;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<nlohmann::json>> rows;
};

struct ExperimentReport {
    std::string name;
    nlohmann::json parameters = nlohmann::json::object();
    std::vector<Record> records;
    std::vector<FitEntry> fits;
    std::map<std::string, Table> tables;

    bool verdict() const {
        return std::all_of(records.begin(), records.end(), [](const Record& r) { return r.pass; });
    }

    Record& add(Record r) {
        records.push_back(std::move(r));
        return records.back();
    }

    ExponentFit add_fit(const std::string& fit_name, std::vector<double> xs, std::vector<double> ys) {
        ExponentFit f = fit_exponent(xs, ys);
        fits.push_back({fit_name, f, std::move(xs), std::move(ys)});
        return f;
    }
};

namespace detail {

inline nlohmann::json rounded(const nlohmann::json& j) {
    if (j.is_number_float()) {
        double v = j.get<double>();
        if (std::isfinite(v)) return sig12(v);
        return format12(v);
    }
    if (j.is_array() || j.is_object()) {
        nlohmann::json out = j;
        for (auto it = out.begin(); it != out.end(); ++it) *it = rounded(*it);
        return out;
    }
    return j;
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentReport& rep) {
    using nlohmann::json;
    json recs = json::array();
    for (const Record& r : rep.records)
        recs.push_back({{"anchor", r.anchor},
                        {"input", r.input},
                        {"measured", r.measured},
                        {"expected", r.expected},
                        {"tolerance", r.tolerance},
                        {"compare", to_string(r.compare)},
                        {"pass", r.pass}});
    json fits = json::array();
    for (const FitEntry& f : rep.fits)
        fits.push_back({{"name", f.name},
                        {"slope", f.fit.slope},
                        {"intercept", f.fit.intercept},
                        {"stderr", f.fit.std_error},
                        {"ci", {f.fit.slope - f.fit.std_error, f.fit.slope + f.fit.std_error}},
                        {"points", f.xs.size()}});
    json tables = json::object();
    for (const auto& [name, t] : rep.tables) tables[name] = {{"columns", t.columns}, {"rows", t.rows}};
    json out = {{"name", rep.name},          {"parameters", rep.parameters}, {"records", recs},
                {"fits", fits},              {"tables", tables},             {"verdict", rep.verdict() ? "pass" : "fail"}};
    return detail::rounded(out);
}

/// Write `content` to `path` via a temporary file and a rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        os << content;
        os.flush();
        if (!os) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::IoError, "cannot rename into " + path.string());
    }
}

inline std::string csv_cell(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return format12(v.get<double>());
    return v.dump();
}

inline std::string records_csv(const ExperimentReport& rep) {
    std::ostringstream os;
    os << "anchor,input,measured,expected,tolerance,compare,pass\n";
    for (const Record& r : rep.records)
        os << r.anchor << ",\"" << r.input << "\"," << format12(r.measured) << ',' << format12(r.expected) << ','
           << format12(r.tolerance) << ',' << to_string(r.compare) << ',' << (r.pass ? "true" : "false") << '\n';
    return os.str();
}

inline std::string table_csv(const Table& t) {
    std::ostringstream os;
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << csv_cell(row[c]);
        os << '\n';
    }
    return os.str();
}

/// Self-contained log-log scatter with the fitted line.
inline std::string fit_svg(const FitEntry& f) {
    const double W = 480, H = 360, m = 48;
    double x0 = infinity, x1 = -infinity, y0 = infinity, y1 = -infinity;
    for (std::size_t i = 0; i < f.xs.size(); ++i) {
        double lx = std::log10(f.xs[i]), ly = std::log10(f.ys[i]);
        x0 = std::min(x0, lx);
        x1 = std::max(x1, lx);
        y0 = std::min(y0, ly);
        y1 = std::max(y1, ly);
    }
    if (x1 - x0 < 1e-12) x1 = x0 + 1;
    if (y1 - y0 < 1e-12) y1 = y0 + 1;
    auto px = [&](double lx) { return m + (lx - x0) / (x1 - x0) * (W - 2 * m); };
    auto py = [&](double ly) { return H - m - (ly - y0) / (y1 - y0) * (H - 2 * m); };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<line x1=\"" << m << "\" y1=\"" << H - m << "\" x2=\"" << W - m << "\" y2=\"" << H - m
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << H - m << "\" stroke=\"black\"/>\n";
    auto line_y = [&](double lx) { return (f.fit.intercept + f.fit.slope * lx * std::log(10.0)) / std::log(10.0); };
    os << "<line x1=\"" << format12(px(x0)) << "\" y1=\"" << format12(py(line_y(x0))) << "\" x2=\"" << format12(px(x1))
       << "\" y2=\"" << format12(py(line_y(x1))) << "\" stroke=\"steelblue\"/>\n";
    for (std::size_t i = 0; i < f.xs.size(); ++i)
        os << "<circle cx=\"" << format12(px(std::log10(f.xs[i]))) << "\" cy=\"" << format12(py(std::log10(f.ys[i])))
           << "\" r=\"3\" fill=\"firebrick\"/>\n";
    os << "<text x=\"" << m << "\" y=\"" << m / 2 << "\" font-family=\"monospace\" font-size=\"12\">" << f.name
       << ": slope " << format12(f.fit.slope) << " +/- " << format12(f.fit.std_error) << "</text>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" font-family=\"monospace\" font-size=\"11\">log10 x</text>\n";
    os << "<text x=\"4\" y=\"" << H / 2 << "\" font-family=\"monospace\" font-size=\"11\">log10 y</text>\n";
    os << "</svg>\n";
    return os.str();
}

inline std::string file_stem(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
    return out;
}

/// <dir>/<name>.json, <name>_records.csv, one CSV per table, and optionally one SVG per fit.
inline void write_report(const ExperimentReport& rep, const std::filesystem::path& dir, bool emit_svg = false) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create output directory " + dir.string());
    write_atomic(dir / (rep.name + ".json"), to_json(rep).dump(2) + "\n");
    write_atomic(dir / (rep.name + "_records.csv"), records_csv(rep));
    for (const auto& [name, t] : rep.tables) write_atomic(dir / (rep.name + "_" + file_stem(name) + ".csv"), table_csv(t));
    if (emit_svg)
        for (std::size_t i = 0; i < rep.fits.size(); ++i)
            write_atomic(dir / (rep.name + "_fit" + std::to_string(i) + ".svg"), fit_svg(rep.fits[i]));
}

// ---------------------------------------------------------------------------
// Configuration

struct Tolerances {
    double norm_stability = 0.01;  // relative change of a norm on the last refinement
    double slope = 0.1;
    double threshold = 0.05;
    double beta = 0.05;
    double alpha = 0.2;
    double coarea = 0.02;
    double quadrature = 0.02;
    double monte_carlo = 0.05;
    double vanishing = 0.1;
    double lipschitz = 0.05;

    void set_all(double t) {
        require(t >= 0 && std::isfinite(t), ErrorCode::ConfigError, "tolerance: must be finite and >= 0");
        norm_stability = slope = threshold = beta = alpha = coarea = quadrature = monte_carlo = vanishing = lipschitz = t;
    }
};

struct FlatCuspConfig {
    int k_max = 4;
    double p = 2.0;
    std::vector<double> eps_cut{0.2, 0.1, 0.05, 0.025};
    double h = 1.0 / 1024;
    int stencil = 8;
};

struct ThresholdConfig {
    std::vector<double> l{2, 3, 5};
    std::vector<double> p{1, 2, 3};
    std::vector<int> k{1, 2};
    double gamma_min = -1.49;
    double gamma_max = 5.49;
    double gamma_step = 0.02;
    double h = 1.0 / 1024;
    int stencil = 8;
    int shell_cells = 16;  // innermost shell starts at least this many cells from the tip

    std::vector<double> gamma_grid() const {
        std::vector<double> g;
        if (!(gamma_step > 0) || gamma_max < gamma_min) return g;
        int n = static_cast<int>(std::floor((gamma_max - gamma_min) / gamma_step + 1e-9)) + 1;
        for (int i = 0; i < n; ++i) g.push_back(gamma_min + i * gamma_step);
        return g;
    }
};

struct SliceLemmaConfig {
    std::vector<double> l{2};
    std::vector<double> p{1, 2, 4};
    double eta_min = 1.0 / 256;
    double eta_max = 0.25;
    int eta_count = 7;  // log-spaced
    double h = 1.0 / 512;
    double bump_radius = 0.5;
    double spread = 20.0;  // max/min of the ratios
};

struct MorreyConfig {
    std::vector<double> l{2, 3};
    std::vector<double> p{1, 2, 3, 4, 6, 8};
    int shells = 8;
    double mu_constant = 4.0;
    double h = 1.0 / 65536;
    int resolution = 64;
    double eps_start = 0.1;
    int eps_halvings = 8;
    double gamma = 0.1;      // monomial test function x^-gamma
    double divergence = 1.5; // growth factor that counts as divergent
};

struct KernelThresholdConfig {
    std::vector<double> l{1, 2, 3, 5};
    std::vector<int> k{1, 2, 3, 4, 5, 6};
    double h = 1.0 / 32;  // coarse level; the fine level is h/2
    int pairs = 300;
    double growth = 1.5;
    double flat_eps_cut = 0.1;
};

struct RetractionConfig {
    double l = 2.0;
    std::vector<double> s_grid{1.0, 0.5, 0.25, 0.125, 0.0625};
    std::vector<double> eta{0.05, 0.1, 0.2, 0.4};
    int samples = 200;
    std::vector<double> exponents{0.5, 1.0, 2.0, 2.5};
    double jacobian_c_max = 2.0;
    int jacobian_nu_max = 3;
    double partial_s_c_max = 2.3;
    double partial_t_c_max = 3.0;
};

struct CoareaConfig {
    int resolution = 512;
    long mc_samples = 1000000;
    int mc_bins = 20;
    int vanishing_points = 10;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;  // set from the run configuration
    Tolerances tolerances;
    FlatCuspConfig flat_cusp;
    ThresholdConfig thresholds;
    SliceLemmaConfig slice_lemma;
    MorreyConfig morrey;
    KernelThresholdConfig kernel_threshold;
    RetractionConfig retraction;
    CoareaConfig coarea;
};

inline nlohmann::json to_json(const Tolerances& t) {
    return {{"norm_stability", t.norm_stability}, {"slope", t.slope},           {"threshold", t.threshold},
            {"beta", t.beta},                     {"alpha", t.alpha},           {"coarea", t.coarea},
            {"quadrature", t.quadrature},         {"monte_carlo", t.monte_carlo}, {"vanishing", t.vanishing},
            {"lipschitz", t.lipschitz}};
}
inline nlohmann::json to_json(const FlatCuspConfig& c) {
    return {{"k_max", c.k_max}, {"p", c.p}, {"eps_cut", c.eps_cut}, {"h", c.h}, {"stencil", c.stencil}};
}
inline nlohmann::json to_json(const ThresholdConfig& c) {
    return {{"l", c.l},           {"p", c.p}, {"k", c.k},       {"gamma_min", c.gamma_min}, {"gamma_max", c.gamma_max},
            {"gamma_step", c.gamma_step}, {"h", c.h}, {"stencil", c.stencil}, {"shell_cells", c.shell_cells}};
}
inline nlohmann::json to_json(const SliceLemmaConfig& c) {
    return {{"l", c.l},         {"p", c.p}, {"eta_min", c.eta_min}, {"eta_max", c.eta_max}, {"eta_count", c.eta_count},
            {"h", c.h}, {"bump_radius", c.bump_radius}, {"spread", c.spread}};
}
inline nlohmann::json to_json(const MorreyConfig& c) {
    return {{"l", c.l},
            {"p", c.p},
            {"shells", c.shells},
            {"mu_constant", c.mu_constant},
            {"h", c.h},
            {"resolution", c.resolution},
            {"eps_start", c.eps_start},
            {"eps_halvings", c.eps_halvings},
            {"gamma", c.gamma},
            {"divergence", c.divergence}};
}
inline nlohmann::json to_json(const KernelThresholdConfig& c) {
    return {{"l", c.l},         {"k", c.k},         {"h", c.h}, {"pairs", c.pairs},
            {"growth", c.growth}, {"flat_eps_cut", c.flat_eps_cut}};
}
inline nlohmann::json to_json(const RetractionConfig& c) {
    return {{"l", c.l},
            {"s_grid", c.s_grid},
            {"eta", c.eta},
            {"samples", c.samples},
            {"exponents", c.exponents},
            {"jacobian_c_max", c.jacobian_c_max},
            {"jacobian_nu_max", c.jacobian_nu_max},
            {"partial_s_c_max", c.partial_s_c_max},
            {"partial_t_c_max", c.partial_t_c_max}};
}
inline nlohmann::json to_json(const CoareaConfig& c) {
    return {{"resolution", c.resolution},
            {"mc_samples", c.mc_samples},
            {"mc_bins", c.mc_bins},
            {"vanishing_points", c.vanishing_points}};
}
inline nlohmann::json to_json(const ExperimentConfig& c) {
    return {{"tolerances", to_json(c.tolerances)},
            {"flat_cusp", to_json(c.flat_cusp)},
            {"thresholds", to_json(c.thresholds)},
            {"slice_lemma", to_json(c.slice_lemma)},
            {"morrey", to_json(c.morrey)},
            {"kernel_threshold", to_json(c.kernel_threshold)},
            {"retraction", to_json(c.retraction)},
            {"coarea", to_json(c.coarea)}};
}

namespace detail {

/// Overwrite `field` from j[key] if present, with a ConfigError naming the key path on type errors.
template <class T>
void read_field(const nlohmann::json& j, const char* key, T& field, const std::string& path) {
    field = get_or<T>(j, key, field, path);
}

}  // namespace detail

inline void update_from_json(Tolerances& t, const nlohmann::json& j, const std::string& path) {
    detail::reject_unknown_keys(j, {"norm_stability", "slope", "threshold", "beta", "alpha", "coarea", "quadrature",
                                    "monte_carlo", "vanishing", "lipschitz"},
                                path);
    for (auto [key, field] : std::initializer_list<std::pair<const char*, double*>>{
             {"norm_stability", &t.norm_stability}, {"slope", &t.slope},       {"threshold", &t.threshold},
             {"beta", &t.beta},                     {"alpha", &t.alpha},       {"coarea", &t.coarea},
             {"quadrature", &t.quadrature},         {"monte_carlo", &t.monte_carlo}, {"vanishing", &t.vanishing},
             {"lipschitz", &t.lipschitz}}) {
        detail::read_field(j, key, *field, path);
        if (!(*field >= 0)) throw Error(ErrorCode::ConfigError, path + "." + key + ": must be >= 0");
    }
}

inline void update_from_json(FlatCuspConfig& c, const nlohmann::json& j, const std::string& path) {
    detail::reject_unknown_keys(j, {"k_max", "p", "eps_cut", "h", "stencil"}, path);
    detail::read_field(j, "k_max", c.k_max, path);
    detail::read_field(j, "p", c.p, path);
    detail::read_field(j, "eps_cut", c.eps_cut, path);
    detail::read_field(j, "h", c.h, path);
    detail::read_field(j, "stencil", c.stencil, path);
}
inline void update_from_json(ThresholdConfig& c, const nlohmann::json& j, const std::string& path) {
    detail::reject_unknown_keys(j, {"l", "p", "k", "gamma_min", "gamma_max", "gamma_step", "h", "stencil", "shell_cells"},
                                path);
    detail::read_field(j, "l", c.l, path);
    detail::read_field(j, "p", c.p, path);
    detail::read_field(j, "k", c.k, path);
    detail::read_field(j, "gamma_min", c.gamma_min, path);
    detail::read_field(j, "gamma_max", c.gamma_max, path);
    detail::read_field(j, "gamma_step", c.gamma_step, path);
    detail::read_field(j, "h", c.h, path);
    detail::read_field(j, "stencil", c.stencil, path);
    detail::read_field(j, "shell_cells", c.shell_cells, path);
}
inline void update_from_json(SliceLemmaConfig& c, const nlohmann::json& j, const std::string& path) {
    detail::reject_unknown_keys(j, {"l", "p", "eta_min", "eta_max", "eta_count", "h", "bump_radius", "spread"}, path);
    detail::read_field(j, "l", c.l, path);
    detail::read_field(j, "p", c.p, path);
    detail::read_field(j, "eta_min", c.eta_min, path);
    detail::read_field(j, "eta_max", c.eta_max, path);
    detail::read_field(j, "eta_count", c.eta_count, path);
    detail::read_field(j, "h", c.h, path);
    detail::read_field(j, "bump_radius", c.bump_radius, path);
    detail::read_field(j, "spread", c.spread, path);
}
inline void update_from_json(MorreyConfig& c, const nlohmann::json& j, const std::string& path) {
    detail::reject_unknown_keys(j, {"l", "p", "shells", "mu_constant", "h", "resolution", "eps_start", "eps_halvings",
                                    "gamma", "divergence"},
                                path);
    detail::read_field(j, "l", c.l, path);
    detail::read_field(j, "p", c.p, path);
    detail::read_field(j, "shells", c.shells, path);
    detail::read_field(j, "mu_constant", c.mu_constant, path);
    detail::read_field(j, "h", c.h, path);
    detail::read_field(j, "resolution", c.resolution, path);
    detail::read_field(j, "eps_start", c.eps_start, path);
    detail::read_field(j, "eps_halvings", c.eps_halvings, path);
    detail::read_field(j, "gamma", c.gamma, path);
    detail::read_field(j, "divergence", c.divergence, path);
}
inline void update_from_json(KernelThresholdConfig& c, const nlohmann::json& j, const std::string& path) {
    detail::reject_unknown_keys(j, {"l", "k", "h", "pairs", "growth", "flat_eps_cut"}, path);
    detail::read_field(j, "l", c.l, path);
    detail::read_field(j, "k", c.k, path);
    detail::read_field(j, "h", c.h, path);
    detail::read_field(j, "pairs", c.pairs, path);
    detail::read_field(j, "growth", c.growth, path);
    detail::read_field(j, "flat_eps_cut", c.flat_eps_cut, path);
}
inline void update_from_json(RetractionConfig& c, const nlohmann::json& j, const std::string& path) {
    detail::reject_unknown_keys(j, {"l", "s_grid", "eta", "samples", "exponents", "jacobian_c_max", "jacobian_nu_max",
                                    "partial_s_c_max", "partial_t_c_max"},
                                path);
    detail::read_field(j, "l", c.l, path);
    detail::read_field(j, "s_grid", c.s_grid, path);
    detail::read_field(j, "eta", c.eta, path);
    detail::read_field(j, "samples", c.samples, path);
    detail::read_field(j, "exponents", c.exponents, path);
    detail::read_field(j, "jacobian_c_max", c.jacobian_c_max, path);
    detail::read_field(j, "jacobian_nu_max", c.jacobian_nu_max, path);
    detail::read_field(j, "partial_s_c_max", c.partial_s_c_max, path);
    detail::read_field(j, "partial_t_c_max", c.partial_t_c_max, path);
}
inline void update_from_json(CoareaConfig& c, const nlohmann::json& j, const std::string& path) {
    detail::reject_unknown_keys(j, {"resolution", "mc_samples", "mc_bins", "vanishing_points"}, path);
    detail::read_field(j, "resolution", c.resolution, path);
    detail::read_field(j, "mc_samples", c.mc_samples, path);
    detail::read_field(j, "mc_bins", c.mc_bins, path);
    detail::read_field(j, "vanishing_points", c.vanishing_points, path);
}

inline void update_from_json(ExperimentConfig& c, const nlohmann::json& j, const std::string& path) {
    detail::reject_unknown_keys(j, {"tolerances", "flat_cusp", "thresholds", "slice_lemma", "morrey",
                                    "kernel_threshold", "retraction", "coarea"},
                                path);
    auto sub = [&](const char* key, auto& field) {
        if (j.contains(key)) update_from_json(field, j.at(key), path + "." + key);
    };
    sub("tolerances", c.tolerances);
    sub("flat_cusp", c.flat_cusp);
    sub("thresholds", c.thresholds);
    sub("slice_lemma", c.slice_lemma);
    sub("morrey", c.morrey);
    sub("kernel_threshold", c.kernel_threshold);
    sub("retraction", c.retraction);
    sub("coarea", c.coarea);
}

// ---------------------------------------------------------------------------
// Suites

namespace detail {

inline std::string fmt_input(std::initializer_list<std::pair<const char*, double>> kv) {
    std::string s;
    for (auto [k, v] : kv) s += (s.empty() ? "" : " ") + std::string(k) + "=" + format12(v);
    return s;
}

}  // namespace detail

/// u = 1/x on FlatCusp: Sobolev norms settle as eps_cut -> 0 while the inner-Lipschitz seminorm blows up.
inline ExperimentReport run_flat_cusp_counterexample(const FlatCuspConfig& cfg, const Tolerances& tol) {
    require(cfg.k_max >= 0, ErrorCode::InvalidArgument, "k_max must be >= 0");
    require(cfg.eps_cut.size() >= 2, ErrorCode::InvalidArgument, "need at least two eps_cut values");
    ExperimentReport rep;
    rep.name = "flat-cusp";
    rep.parameters = to_json(cfg);
    std::vector<double> eps = cfg.eps_cut;
    std::sort(eps.begin(), eps.end(), std::greater<>());
    Table norms{{"eps_cut", "nodes", "k", "norm"}, {}};
    Table semis{{"eps_cut", "seminorm"}, {}};
    std::vector<std::vector<double>> by_eps;  // cumulative norms k = 0..k_max
    std::vector<double> seminorms;
    for (double e : eps) {
        GridDomain g = GridDomain::build(DomainSpec::flat_cusp().with_eps_cut(e), cfg.h, stencil_from_int(cfg.stencil));
        std::vector<double> u;
        u.reserve(g.size());
        for (const Point& x : g.nodes()) u.push_back(1.0 / x.x);
        DifferenceOperators ops(g, cfg.k_max);
        std::vector<double> lv = sobolev_level_norms(u, ops, WeightField::constant(g, 1.0), cfg.p);
        std::vector<double> cum;
        double s = 0.0;
        for (int k = 0; k <= cfg.k_max; ++k) {
            s += lv[k];
            cum.push_back(s);
            norms.rows.push_back({e, g.size(), k, s});
        }
        by_eps.push_back(cum);
        if (cfg.k_max > 0) {
            InnerMetricGraph graph(g);
            double sn = inner_lipschitz_seminorm(graph, u);
            seminorms.push_back(sn);
            semis.rows.push_back({e, sn});
        }
    }
    std::size_t last = eps.size() - 1;
    for (int k = 0; k <= cfg.k_max; ++k) {
        double a = by_eps[last - 1][k], b = by_eps[last][k];
        rep.add(make_record("flat-cusp.sobolev-norm-converges",
                            detail::fmt_input({{"k", k}, {"p", cfg.p}, {"eps_from", eps[last - 1]}, {"eps_to", eps[last]}}),
                            std::abs(b - a) / std::abs(b), 0.0, tol.norm_stability, Compare::AtMost));
    }
    rep.tables["norms"] = norms;
    if (cfg.k_max > 0) {
        rep.tables["seminorms"] = semis;
        if (eps.size() >= 3) {
            ExponentFit f = rep.add_fit("seminorm-vs-eps_cut", eps, seminorms);
            rep.add(make_record("flat-cusp.lipschitz-seminorm-diverges", "slope of seminorm vs eps_cut", f.slope, -2.0,
                                tol.slope, Compare::Abs));
        } else {
            rep.add(make_record("flat-cusp.lipschitz-seminorm-diverges", "seminorm growth on the last halving",
                                seminorms[last] / seminorms[last - 1], 4.0, 4.0 * tol.slope, Compare::Abs));
        }
    }
    return rep;
}

/// Decay exponent of the dyadic shell contributions of |D^k u|^p near the cusp tip.
struct ShellDecay {
    double delta = 0.0;
    ExponentFit fit;
    std::vector<double> radii, sums;
};

namespace detail {

inline std::vector<int> shell_index(const GridDomain& g, int shells) {
    std::vector<int> idx(g.size(), -1);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double x = g.node(i).x;
        if (!(x > 0)) continue;
        int j = static_cast<int>(std::floor(-std::log2(x)));
        if (std::ldexp(1.0, -j) == x) --j;  // shells are (2^-j-1, 2^-j]
        if (j >= 1 && j <= shells) idx[i] = j;
    }
    return idx;
}

}  // namespace detail

/// Empirical finiteness thresholds for u = x^-gamma on PowerCusp(l) with f = 1.
inline ExperimentReport run_threshold_sweep(const ThresholdConfig& cfg, const Tolerances& tol) {
    std::vector<double> grid = cfg.gamma_grid();
    require(!grid.empty(), ErrorCode::InvalidArgument, "gamma grid is empty");
    require(!cfg.l.empty() && !cfg.p.empty() && !cfg.k.empty(), ErrorCode::InvalidArgument, "empty l, p or k list");
    int shells = 0;
    while (std::ldexp(1.0, -(shells + 2)) >= cfg.shell_cells * cfg.h) ++shells;
    require(shells >= 3, ErrorCode::InvalidArgument, "grid too coarse for three resolved dyadic shells");
    ExperimentReport rep;
    rep.name = "thresholds";
    rep.parameters = to_json(cfg);
    Table gt{{"l", "p", "k", "gamma_star", "expected", "gamma_below", "delta_below", "gamma_above", "delta_above"}, {}};
    Table bt{{"l", "p", "gamma_star_k1", "beta_emp"}, {}};
    std::vector<int> ks = cfg.k;
    std::sort(ks.begin(), ks.end());
    for (double l : cfg.l) {
        GridDomain g = GridDomain::build(DomainSpec::power_cusp(l), cfg.h, stencil_from_int(cfg.stencil));
        std::vector<int> shell = detail::shell_index(g, shells);
        const std::vector<double>& vol = g.cell_volume();
        std::map<std::pair<double, int>, double> gamma_star;  // (p, k) -> gamma*
        for (int k : ks) {
            require(k >= 1, ErrorCode::InvalidArgument, "threshold sweep needs k >= 1");
            DifferenceOperators ops(g, k);
            std::map<int, std::vector<double>> cache;  // grid index -> derivative magnitude
            auto magnitude = [&](int gi) -> const std::vector<double>& {
                auto it = cache.find(gi);
                if (it != cache.end()) return it->second;
                std::vector<double> u(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) u[i] = std::pow(g.node(i).x, -grid[gi]);
                return cache.emplace(gi, derivative_magnitude(ops, u, k)).first->second;
            };
            auto decay = [&](int gi, double p) {
                const std::vector<double>& mag = magnitude(gi);
                ShellDecay d;
                std::vector<double> sums(shells + 1, 0.0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (shell[i] > 0) sums[shell[i]] += std::pow(mag[i], p) * vol[i];
                for (int j = 1; j <= shells; ++j) {
                    d.radii.push_back(std::ldexp(1.0, -j));
                    d.sums.push_back(sums[j]);
                }
                if (std::any_of(d.sums.begin(), d.sums.end(), [](double s) { return !(s > 0); })) {
                    d.delta = infinity;  // a vanishing shell contributes nothing
                    return d;
                }
                d.fit = fit_exponent(d.radii, d.sums);
                d.delta = d.fit.slope;
                return d;
            };
            for (double p : cfg.p) {
                std::string in = detail::fmt_input({{"l", l}, {"p", p}, {"k", k}});
                double expected = (l + 1) / p - k;
                int lo = 0, hi = static_cast<int>(grid.size()) - 1;
                ShellDecay dlo = decay(lo, p), dhi = decay(hi, p);
                double star = std::numeric_limits<double>::quiet_NaN();
                if (dlo.delta > 0 && dhi.delta <= 0) {
                    while (hi - lo > 1) {
                        int mid = (lo + hi) / 2;
                        ShellDecay dm = decay(mid, p);
                        if (dm.delta > 0) {
                            lo = mid;
                            dlo = dm;
                        } else {
                            hi = mid;
                            dhi = dm;
                        }
                    }
                    star = std::isfinite(dlo.delta)
                               ? grid[lo] + (grid[hi] - grid[lo]) * dlo.delta / (dlo.delta - dhi.delta)
                               : grid[lo];
                    rep.fits.push_back({"shell-decay " + in + " gamma=" + format12(grid[lo]), dlo.fit, dlo.radii, dlo.sums});
                }
                gamma_star[{p, k}] = star;
                gt.rows.push_back({l, p, k, star, expected, grid[lo], dlo.delta, grid[hi], dhi.delta});
                rep.add(make_record("thresholds.gamma-star", in, star, expected, tol.threshold, Compare::Abs));
            }
        }
        for (double p : cfg.p)
            for (std::size_t i = 0; i + 1 < ks.size(); ++i)
                rep.add(make_record("thresholds.gamma-star-monotone-in-k",
                                    detail::fmt_input({{"l", l}, {"p", p}, {"k", ks[i]}, {"k_next", ks[i + 1]}}),
                                    gamma_star[{p, ks[i + 1]}] - gamma_star[{p, ks[i]}], 0.0, 0.0, Compare::AtMost));
        if (std::find(ks.begin(), ks.end(), 1) != ks.end()) {
            double beta_min = infinity;
            for (double p : cfg.p) {
                double gs = gamma_star[{p, 1}];
                double beta = gs > 0 ? (l + 1) / gs - p : infinity;  // gamma* <= 0: no monomial constraint
                bt.rows.push_back({l, p, gs, beta});
                beta_min = (std::isnan(gs) || std::isnan(beta_min)) ? std::numeric_limits<double>::quiet_NaN()
                                                                    : std::min(beta_min, beta);
            }
            rep.add(make_record("thresholds.p-independent-beta", detail::fmt_input({{"l", l}}), beta_min, 1.0 / l,
                                tol.beta, Compare::AtLeast));
        }
    }
    rep.tables["gamma_star"] = gt;
    if (!bt.rows.empty()) rep.tables["beta"] = bt;
    return rep;
}

/// Slice norms of a bump centered at the cusp tip against the slice bound.
inline ExperimentReport run_slice_lemma(const SliceLemmaConfig& cfg, const Tolerances& tol) {
    require(cfg.eta_count >= 3, ErrorCode::InvalidArgument, "need at least three slice radii");
    require(cfg.eta_min > 0 && cfg.eta_max > cfg.eta_min && cfg.eta_max < 1, ErrorCode::InvalidArgument,
            "slice radii must satisfy 0 < eta_min < eta_max < 1");
    ExperimentReport rep;
    rep.name = "slice-lemma";
    rep.parameters = to_json(cfg);
    std::vector<double> etas;
    for (int i = 0; i < cfg.eta_count; ++i)
        etas.push_back(cfg.eta_min * std::pow(cfg.eta_max / cfg.eta_min, static_cast<double>(i) / (cfg.eta_count - 1)));
    Table t{{"l", "p", "eta", "slice_norm", "bound", "ratio"}, {}};
    double eps = cfg.bump_radius;
    auto bump = [eps](Point x) { return std::max(0.0, 1.0 - norm(x) / eps); };
    auto one = [](Point) { return 1.0; };
    for (double l : cfg.l) {
        GridDomain g = GridDomain::build(DomainSpec::power_cusp(l), cfg.h, Stencil::N8);
        WeightField f = WeightField::constant(g, 1.0);
        for (double p : cfg.p) {
            SliceRatioTable tab = slice_lemma_ratio(g, f, bump, one, p, etas);
            std::vector<double> norms;
            double rmin = infinity, rmax = 0.0;
            for (const SliceRatioRow& r : tab.rows) {
                t.rows.push_back({l, p, r.eta, r.slice_norm, r.bound, r.ratio});
                norms.push_back(r.slice_norm);
                rmin = std::min(rmin, r.ratio);
                rmax = std::max(rmax, r.ratio);
            }
            std::string in = detail::fmt_input({{"l", l}, {"p", p}});
            rep.add(make_record("slice-lemma.ratio-bounded", in, rmax / rmin, cfg.spread, 0.0, Compare::AtMost));
            ExponentFit fit = rep.add_fit("slice-norm-vs-eta " + in, etas, norms);
            rep.add(make_record("slice-lemma.slice-norm-slope", in, fit.slope, (tab.a - 1) / p, tol.slope,
                                Compare::AtLeast));
        }
    }
    rep.tables["ratios"] = t;
    return rep;
}

/// Shell estimates for the coarea density f = 2x^l of ProjectX on (0,1), and sup bounds for monomials.
inline ExperimentReport run_morrey_sup(const MorreyConfig& cfg, const Tolerances& tol) {
    require(cfg.shells >= 3, ErrorCode::InvalidArgument, "need at least three shells");
    require(cfg.eps_halvings >= 1, ErrorCode::InvalidArgument, "need at least one eps_cut halving");
    require(!cfg.p.empty() && !cfg.l.empty(), ErrorCode::InvalidArgument, "empty l or p list");
    ExperimentReport rep;
    rep.name = "morrey";
    rep.parameters = to_json(cfg);
    Table shells{{"l", "i", "mu", "bound", "f_min"}, {}};
    Table sup{{"l", "p", "function", "eps_cut", "sup", "norm", "ratio"}, {}};
    Table p0t{{"l", "smallest_passing_p"}, {}};
    auto density_on = [&](const GridDomain& g, double l) {
        PushforwardSpec ps = make_project_x_band(l);
        for (const Point& x : g.nodes()) ps.target.push_back(x.x);
        WeightField f = pushforward_density(ps, cfg.resolution);
        return f;
    };
    std::vector<double> ps = cfg.p;
    std::sort(ps.begin(), ps.end());
    for (double l : cfg.l) {
        GridDomain g = GridDomain::build(DomainSpec::interval(), cfg.h, Stencil::N4);
        WeightField f = density_on(g, l);
        std::vector<double> mu(cfg.shells + 1, 0.0), fmin(cfg.shells + 1, infinity);
        for (std::size_t n = 0; n < g.size(); ++n) {
            double x = g.node(n).x, d = std::min(x, 1.0 - x);
            int i = static_cast<int>(std::floor(-std::log2(d)));
            if (std::ldexp(1.0, -i) == d) --i;
            if (i < 1 || i > cfg.shells) continue;
            mu[i] += f.values[n] * g.cell_volume()[n];
            fmin[i] = std::min(fmin[i], f.values[n]);
        }
        std::vector<double> r, fm;
        for (int i = 1; i <= cfg.shells; ++i) {
            double bound = cfg.mu_constant * std::ldexp(1.0, -i);
            shells.rows.push_back({l, i, mu[i], bound, fmin[i]});
            rep.add(make_record("morrey.shell-measure", detail::fmt_input({{"l", l}, {"i", i}}), mu[i], bound, 0.0,
                                Compare::AtMost));
            r.push_back(std::ldexp(1.0, -i));
            fm.push_back(fmin[i]);
        }
        ExponentFit af = rep.add_fit("shell-density-minimum " + detail::fmt_input({{"l", l}}), r, fm);
        rep.add(make_record("morrey.density-lower-exponent", detail::fmt_input({{"l", l}}), af.slope, l, tol.alpha,
                            Compare::Abs));

        // sup |u| / ||u||_{W^{1,p}_f} as eps_cut -> 0; growth >= divergence counts as unbounded
        std::vector<double> eps;
        for (int i = 0; i <= cfg.eps_halvings; ++i) eps.push_back(cfg.eps_start * std::ldexp(1.0, -i));
        struct Fn {
            const char* name;
            std::function<double(double)> u;
        };
        double gm = cfg.gamma;
        std::vector<Fn> fns{{"smooth", [](double x) { return 1.0 + x; }},
                            {"monomial", [gm](double x) { return std::pow(x, -gm); }}};
        std::map<std::pair<int, double>, double> growth;  // (function, p) -> growth
        std::vector<GridDomain> cut;
        std::vector<WeightField> cut_f;
        for (double e : eps) {
            cut.push_back(GridDomain::build(DomainSpec::interval().with_eps_cut(e), cfg.h, Stencil::N4));
            cut_f.push_back(density_on(cut.back(), l));
        }
        for (int fi = 0; fi < 2; ++fi)
            for (double p : ps) {
                double first = 0.0, lastr = 0.0;
                for (std::size_t ei = 0; ei < eps.size(); ++ei) {
                    const GridDomain& gd = cut[ei];
                    std::vector<double> u;
                    double s = 0.0;
                    for (const Point& x : gd.nodes()) {
                        u.push_back(fns[fi].u(x.x));
                        s = std::max(s, std::abs(u.back()));
                    }
                    double nv = sobolev_norm(u, gd, cut_f[ei], 1, p);
                    double ratio = s / nv;
                    sup.rows.push_back({l, p, fns[fi].name, eps[ei], s, nv, ratio});
                    if (ei == 0) first = ratio;
                    lastr = ratio;
                }
                growth[{fi, p}] = lastr / first;
            }
        for (double p : ps)
            rep.add(make_record("morrey.sup-bound-smooth", detail::fmt_input({{"l", l}, {"p", p}}), growth[{0, p}],
                                cfg.divergence, 0.0, Compare::AtMost));
        // smallest p from which the monomial ratio stays bounded for every larger listed p
        double p0 = std::numeric_limits<double>::quiet_NaN();
        for (auto it = ps.rbegin(); it != ps.rend(); ++it) {
            if (growth[{1, *it}] >= cfg.divergence) break;
            p0 = *it;
        }
        p0t.rows.push_back({l, p0});
        rep.add(make_record("morrey.sup-bound-monomial", detail::fmt_input({{"l", l}, {"gamma", gm}}), p0, ps.back(), 0.0,
                            Compare::AtMost));
        if (ps.front() == 1.0)
            rep.add(make_record("morrey.sup-bound-fails-at-p1", detail::fmt_input({{"l", l}, {"gamma", gm}}),
                                growth[{1, 1.0}], cfg.divergence, 0.0, Compare::AtLeast));
    }
    rep.tables["shells"] = shells;
    rep.tables["sup_ratios"] = sup;
    rep.tables["smallest_p"] = p0t;
    return rep;
}

/// Max feature ratio ||phi(a) - phi(b)|| / d_X(a, b) over seeded pairs.
inline double max_feature_ratio(const DomainSpec& spec, double h, int k, int pairs, std::uint64_t seed) {
    GridDomain g = GridDomain::build(spec, h, Stencil::N8);
    InnerMetricGraph graph(g);
    SobolevOperator op = assemble_operator(g, WeightField::constant(g, 1.0), k);
    KernelSolver solver(op);
    auto pr = sample_pairs(graph, op.support, pairs, seed, spec.base_point());
    return max_ratio(feature_lipschitz_ratio(solver, graph, pr));
}

/// Least k whose feature map stays Lipschitz under refinement, per domain.
inline ExperimentReport run_kernel_threshold(const KernelThresholdConfig& cfg, const Tolerances& tol,
                                             std::uint64_t seed = 1) {
    (void)tol;
    require(!cfg.k.empty(), ErrorCode::InvalidArgument, "k list is empty");
    require(!cfg.l.empty(), ErrorCode::InvalidArgument, "l list is empty");
    ExperimentReport rep;
    rep.name = "kernel-threshold";
    rep.parameters = to_json(cfg);
    std::vector<int> ks = cfg.k;
    std::sort(ks.begin(), ks.end());
    Table t{{"domain", "l", "k", "ratio_h", "ratio_h2", "growth", "admissible"}, {}};
    Table kt{{"domain", "l", "k_emp"}, {}};
    auto growth_of = [&](const DomainSpec& s, int k, const std::string& name, double l) {
        double a = max_feature_ratio(s, cfg.h, k, cfg.pairs, seed), b = max_feature_ratio(s, cfg.h / 2, k, cfg.pairs, seed);
        double gr = b / a;
        t.rows.push_back({name, l, k, a, b, gr, gr <= cfg.growth});
        return gr;
    };
    // Square: the smooth reference, checked at k = 2
    {
        int k = std::find(ks.begin(), ks.end(), 2) != ks.end() ? 2 : ks.front();
        double gr = growth_of(DomainSpec::square(), k, "square", 0.0);
        rep.add(make_record("kernel-threshold.square-admissible", detail::fmt_input({{"k", k}}), gr, cfg.growth, 0.0,
                            Compare::AtMost));
    }
    // FlatCusp: no listed k is admissible
    {
        double gmin = infinity;
        for (int k : ks) gmin = std::min(gmin, growth_of(DomainSpec::flat_cusp().with_eps_cut(cfg.flat_eps_cut), k,
                                                         "flat-cusp", 0.0));
        rep.add(make_record("kernel-threshold.flat-cusp-none-admissible",
                            detail::fmt_input({{"k_max", ks.back()}, {"eps_cut", cfg.flat_eps_cut}}), gmin, cfg.growth,
                            0.0, Compare::Above));
    }
    // PowerCusp(l): least admissible k (k_max + 1 when none), nondecreasing in l
    std::vector<double> ls = cfg.l;
    std::sort(ls.begin(), ls.end());
    std::vector<int> kemp;
    for (double l : ls) {
        int found = ks.back() + 1;
        for (int k : ks)
            if (growth_of(DomainSpec::power_cusp(l), k, "power-cusp", l) <= cfg.growth) {
                found = k;
                break;
            }
        kemp.push_back(found);
        kt.rows.push_back({"power-cusp", l, found});
    }
    for (std::size_t i = 0; i + 1 < ls.size(); ++i)
        rep.add(make_record("kernel-threshold.k-emp-monotone-in-l",
                            detail::fmt_input({{"l", ls[i]}, {"l_next", ls[i + 1]}}), kemp[i + 1] - kemp[i], 0.0, 0.0,
                            Compare::AtLeast));
    rep.tables["growth"] = t;
    rep.tables["k_emp"] = kt;
    return rep;
}

/// Inequalities of the model retractions on PowerCusp(l) and on the disk.
inline ExperimentReport run_retraction(const RetractionConfig& cfg, const Tolerances& tol, std::uint64_t seed = 1) {
    ExperimentReport rep;
    rep.name = "retraction";
    rep.parameters = to_json(cfg);
    Retraction cusp(DomainSpec::power_cusp(cfg.l));
    std::vector<Point> pts = sample_points(cusp, cfg.samples, seed);
    Table fits{{"domain", "inequality", "found", "C", "nu", "max_violation"}, {}};
    auto log_fit = [&](const std::string& dom, const FitReport& f) {
        fits.rows.push_back({dom, f.inequality, f.found, f.C, f.nu, f.max_violation});
    };
    std::string in = detail::fmt_input({{"l", cfg.l}});

    JacobianFits jf = check_jacobian_bounds(cusp, cfg.s_grid, cfg.eta);
    log_fit("power-cusp", jf.slice_map);
    log_fit("power-cusp", jf.inverse);
    rep.add(make_record("retraction.slice-jacobian-fit-found", in, jf.slice_map.found ? 1 : 0, 1, 0, Compare::Abs));
    rep.add(make_record("retraction.slice-jacobian-C", in, jf.slice_map.C, cfg.jacobian_c_max, 0, Compare::AtMost));
    rep.add(make_record("retraction.slice-jacobian-nu", in, jf.slice_map.nu, cfg.jacobian_nu_max, 0, Compare::AtMost));

    FitReport lip = check_lipschitz_cs(cusp, cfg.s_grid, pts);
    log_fit("power-cusp", lip);
    rep.add(make_record("retraction.lipschitz-cs", in, lip.C, 1.0, tol.lipschitz, Compare::Abs));

    auto dens = [&](const std::string& name, const std::function<double(Point)>& f, int nu_expected) {
        FitReport d = check_density_comparison(cusp, f, cfg.s_grid, pts);
        log_fit("power-cusp " + name, d);
        rep.add(make_record("retraction.density-comparison-nu", name, d.nu, nu_expected, 0, Compare::Abs));
        rep.add(make_record("retraction.density-comparison-C", name, d.C, 1.0, 0, Compare::Abs));
    };
    dens("f=1", [](Point) { return 1.0; }, 0);
    for (double a : cfg.exponents)
        dens("f=x^" + format12(a), [a](Point x) { return std::pow(x.x, a); }, static_cast<int>(std::ceil(a)));

    // a flat density admits no power-law comparison
    {
        Retraction iv(DomainSpec::interval());
        std::vector<Point> xs = sample_points(iv, cfg.samples, seed + 1, 1e-4);
        int thrown = 0;
        try {
            check_density_comparison(iv, [](Point x) { return std::exp(-1.0 / x.x); }, cfg.s_grid, xs);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoFitFound) throw;
            thrown = 1;
        }
        rep.add(make_record("retraction.flat-density-no-fit", "f=exp(-1/x) on (0,1)", thrown, 1, 0, Compare::Abs));
    }

    FitReport ps = check_partial_s(cusp, cfg.s_grid, pts);
    log_fit("power-cusp", ps);
    rep.add(make_record("retraction.partial-s", in, ps.C, cfg.partial_s_c_max, 0, Compare::AtMost));
    FitReport pt = check_partial_t_slice(cusp, cfg.s_grid, cfg.eta);
    log_fit("power-cusp", pt);
    rep.add(make_record("retraction.partial-t-slice", in, pt.C, cfg.partial_t_c_max, 0, Compare::AtMost));

    // disk: the inverse family has jacobian exactly t = t^(m-1), m = 2
    Retraction disk(DomainSpec::disk());
    JacobianFits dj = check_jacobian_bounds(disk, cfg.s_grid, cfg.eta);
    log_fit("disk", dj.slice_map);
    log_fit("disk", dj.inverse);
    rep.add(make_record("retraction.disk-inverse-jacobian-exponent", "disk", dj.inverse.nu + 1, 2, 0, Compare::Abs));

    // semigroup, inverse family and membership on samples
    double semi = 0.0, inv = 0.0;
    bool inside = true;
    for (double s : cfg.s_grid)
        for (double s2 : cfg.s_grid)
            for (const Point& x : pts) {
                Point a = apply_retraction(cusp, s, apply_retraction(cusp, s2, x));
                semi = std::max(semi, distance(a, cusp.scale(s * s2, x)));
                inside = inside && cusp.spec.contains(a);
            }
    for (double s : cfg.s_grid)
        for (const Point& x : pts) inv = std::max(inv, distance(cusp.inverse_family(s, cusp.scale(1.0 / s, x)), x));
    rep.add(make_record("retraction.semigroup", in, semi, 0.0, 1e-12, Compare::AtMost));
    rep.add(make_record("retraction.inverse-family", in, inv, 0.0, 1e-12, Compare::AtMost));
    rep.add(make_record("retraction.maps-into-domain", in, inside ? 1 : 0, 1, 0, Compare::Abs));
    rep.tables["fits"] = fits;
    return rep;
}

/// Coarea identity on the catalog, and the vanishing density of |x|^2 on the 4-ball.
inline ExperimentReport run_coarea(const CoareaConfig& cfg, const Tolerances& tol, std::uint64_t seed = 1) {
    require(cfg.vanishing_points >= 3, ErrorCode::InvalidArgument, "need at least three vanishing-fit points");
    ExperimentReport rep;
    rep.name = "coarea";
    rep.parameters = to_json(cfg);
    Table gaps{{"map", "g", "lhs", "rhs", "gap"}, {}};
    for (const PushforwardSpec& s : catalog_pushforwards())
        for (CoareaIntegrand g : {CoareaIntegrand::One, CoareaIntegrand::X1Squared, CoareaIntegrand::Xi}) {
            CoareaResult r = coarea_check(s, g, cfg.resolution);
            gaps.rows.push_back({s.name, to_string(g), r.lhs, r.rhs, r.relative_gap()});
            rep.add(make_record("coarea.identity", s.name + " g=" + to_string(g), r.relative_gap(), 0.0, tol.coarea,
                                Compare::AtMost));
        }
    rep.tables["identity"] = gaps;

    // |x|^2 on the unit 4-ball: density pi^2 t
    PushforwardSpec ns = make_norm_squared_ball(4);
    Interval img = ns.image();
    ns.target = PushforwardSpec::bin_centers(img, cfg.mc_bins);
    WeightField fq = pushforward_density(ns, cfg.resolution);
    double qerr = 0.0;
    Table dt{{"t", "quadrature", "analytic", "bin_average", "monte_carlo"}, {}};
    for (std::size_t i = 0; i < fq.size(); ++i) {
        double t = fq.points[i].x;
        qerr = std::max(qerr, std::abs(fq.values[i] - pi * pi * t) / (pi * pi * t));
    }
    rep.add(make_record("coarea.density-matches-analytic", "norm-squared d=4", qerr, 0.0, tol.quadrature,
                        Compare::AtMost));
    // histogram oracle against bin averages of the quadrature density
    WeightField mc = monte_carlo_density(ns, cfg.mc_samples, cfg.mc_bins, seed);
    double width = img.length() / cfg.mc_bins, merr = 0.0;
    const GaussRule& rule = gauss_legendre(4);
    for (int b = 0; b < cfg.mc_bins; ++b) {
        PushforwardSpec q = ns;
        q.target.clear();
        for (double z : rule.nodes) q.target.push_back(img.lo + (b + 0.5 + 0.5 * z) * width);
        WeightField fb = pushforward_density(q, cfg.resolution);
        double avg = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) avg += 0.5 * rule.weights[i] * fb.values[i];
        merr = std::max(merr, std::abs(mc.values[b] - avg) / avg);
        dt.rows.push_back({fq.points[b].x, fq.values[b], pi * pi * fq.points[b].x, avg, mc.values[b]});
    }
    rep.add(make_record("coarea.density-matches-monte-carlo", "norm-squared d=4", merr, 0.0, tol.monte_carlo,
                        Compare::AtMost));
    rep.tables["density"] = dt;
    // vanishing exponent at 0
    PushforwardSpec v = make_norm_squared_ball(4);
    for (int i = 1; i <= cfg.vanishing_points; ++i) v.target.push_back(std::ldexp(1.0, -i));
    WeightField fv = pushforward_density(v, cfg.resolution);
    ExponentFit ef = rep.add_fit("density-near-0", v.target, fv.values);
    rep.add(make_record("coarea.density-vanishing-exponent", "norm-squared d=4", ef.slope, 1.0, tol.vanishing,
                        Compare::Abs));
    return rep;
}

// ---------------------------------------------------------------------------
// Suite registry

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"flat-cusp", "thresholds",  "slice-lemma", "morrey",
                                                "kernel-threshold", "retraction", "coarea"};
    return names;
}

inline ExperimentReport run_suite(const std::string& name, const ExperimentConfig& cfg) {
    const Tolerances& t = cfg.tolerances;
    if (name == "flat-cusp") return run_flat_cusp_counterexample(cfg.flat_cusp, t);
    if (name == "thresholds") return run_threshold_sweep(cfg.thresholds, t);
    if (name == "slice-lemma") return run_slice_lemma(cfg.slice_lemma, t);
    if (name == "morrey") return run_morrey_sup(cfg.morrey, t);
    if (name == "kernel-threshold") return run_kernel_threshold(cfg.kernel_threshold, t, cfg.seed);
    if (name == "retraction") return run_retraction(cfg.retraction, t, cfg.seed);
    if (name == "coarea") return run_coarea(cfg.coarea, t, cfg.seed);
    throw Error(ErrorCode::InvalidArgument, "unknown suite " + name);
}

}  // namespace wsob
