#pragma once

// Run configuration, command dispatch and output emission for the wsob tool.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsob/experiments.hpp"
#include "wsob/geometry.hpp"
#include "wsob/kernel.hpp"
#include "wsob/measure.hpp"
#include "wsob/metric.hpp"
#include "wsob/rng.hpp"
#include "wsob/sobolev.hpp"

namespace wsob {

enum class Command { Density, SobolevNorm, Kernel, Geodesic, Verify };

inline std::string to_string(Command c) {
    switch (c) {
        case Command::Density: return "density";
        case Command::SobolevNorm: return "sobolev-norm";
        case Command::Kernel: return "kernel";
        case Command::Geodesic: return "geodesic";
        case Command::Verify: return "verify";
    }
    return "?";
}

inline Command command_from_string(const std::string& s) {
    for (Command c : {Command::Density, Command::SobolevNorm, Command::Kernel, Command::Geodesic, Command::Verify})
        if (to_string(c) == s) return c;
    throw Error(ErrorCode::ConfigError, "command: unknown command '" + s + "'");
}

/// Push-forward shorthand: one of the catalog maps with its parameters.
struct MeasureConfig {
    MapKind map = MapKind::NormSquared;
    int dim = 2;        // norm-squared and radial sources
    double l = 2.0;     // project-x band exponent
    double r_in = 1.0;  // radial annulus
    double r_out = 2.0;
    Density density{};

    PushforwardSpec build() const {
        PushforwardSpec p;
        switch (map) {
            case MapKind::Identity: p = make_identity_interval(density.c); break;
            case MapKind::ProjectX: p = make_project_x_band(l, density); break;
            case MapKind::NormSquared: p = make_norm_squared_ball(dim, density); break;
            case MapKind::Radial: p = make_radial_annulus(r_in, r_out, density); break;
        }
        if (map == MapKind::Identity) p.source.xi = density;
        p.validate();
        return p;
    }
};

struct RunConfig {
    Command command = Command::Verify;
    std::string suite = "all";
    std::string output_dir = "wsob-out";
    bool emit_svg = false;
    std::uint64_t seed = 1;
    std::optional<double> tolerance;  // replaces every suite tolerance
    GridConfig domain{DomainSpec::square(), 1.0 / 64, Stencil::N8};
    MeasureConfig measure;
    int k = 1;
    double p = 2.0;
    int resolution = 256;
    int bins = 20;
    long samples = 0;                 // density: Monte Carlo column when > 0
    std::string function = "x";       // sobolev-norm test function
    double gamma = 0.5;               // exponent of the "monomial" test function
    double weight_exponent = 0.0;     // f = x^a (a = 0: f = 1)
    Point from{0.25, 0.25}, to{0.75, 0.25};
    DistanceMode distance = DistanceMode::Taut;
    int nodes = 50;                   // kernel matrix size
    ExperimentConfig experiments;
};

inline const std::vector<std::string>& test_functions() {
    static const std::vector<std::string> names{"one", "x", "inverse-x", "monomial", "bump"};
    return names;
}

inline std::string density_kind_name(DensityKind k) {
    return k == DensityKind::Constant ? "constant" : k == DensityKind::Monomial ? "monomial" : "radial";
}

inline nlohmann::json to_json(const RunConfig& c) {
    using nlohmann::json;
    json j{{"command", to_string(c.command)},
           {"suite", c.suite},
           {"output_dir", c.output_dir},
           {"emit_svg", c.emit_svg},
           {"seed", c.seed},
           {"domain", to_json(c.domain)},
           {"measure",
            {{"map", to_string(c.measure.map)},
             {"dim", c.measure.dim},
             {"l", c.measure.l},
             {"r_in", c.measure.r_in},
             {"r_out", c.measure.r_out},
             {"density", {{"kind", density_kind_name(c.measure.density.kind)}, {"c", c.measure.density.c}, {"a", c.measure.density.a}}}}},
           {"k", c.k},
           {"p", c.p},
           {"resolution", c.resolution},
           {"bins", c.bins},
           {"samples", c.samples},
           {"function", c.function},
           {"gamma", c.gamma},
           {"weight_exponent", c.weight_exponent},
           {"from", {c.from.x, c.from.y}},
           {"to", {c.to.x, c.to.y}},
           {"distance", c.distance == DistanceMode::Taut ? "taut" : "lattice"},
           {"nodes", c.nodes},
           {"experiments", to_json(c.experiments)}};
    j["tolerance"] = c.tolerance ? json(*c.tolerance) : json(nullptr);
    return j;
}

namespace detail {

inline Point point_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw Error(ErrorCode::ConfigError, path + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline MeasureConfig measure_from_json(const nlohmann::json& j, const std::string& path) {
    reject_unknown_keys(j, {"map", "dim", "l", "r_in", "r_out", "density"}, path);
    MeasureConfig m;
    try {
        m.map = map_kind_from_string(get_or<std::string>(j, "map", to_string(m.map), path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        throw Error(ErrorCode::ConfigError, path + ".map: " + e.what());
    }
    m.dim = get_or(j, "dim", m.dim, path);
    m.l = get_or(j, "l", m.l, path);
    m.r_in = get_or(j, "r_in", m.r_in, path);
    m.r_out = get_or(j, "r_out", m.r_out, path);
    if (j.contains("density")) {
        const auto& dj = j.at("density");
        std::string dp = path + ".density";
        reject_unknown_keys(dj, {"kind", "c", "a"}, dp);
        std::string k = get_or<std::string>(dj, "kind", "constant", dp);
        if (k == "constant") m.density.kind = DensityKind::Constant;
        else if (k == "monomial") m.density.kind = DensityKind::Monomial;
        else if (k == "radial") m.density.kind = DensityKind::Radial;
        else throw Error(ErrorCode::ConfigError, dp + ".kind: unknown density '" + k + "'");
        m.density.c = get_or(dj, "c", 1.0, dp);
        m.density.a = get_or(dj, "a", 0.0, dp);
    }
    try {
        m.build();
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, path + ": " + e.what());
    }
    return m;
}

}  // namespace detail

/// Schema-checked configuration; unknown keys raise ConfigError naming the key path.
inline RunConfig parse_config(const nlohmann::json& j) {
    using detail::get_or;
    detail::reject_unknown_keys(j, {"command", "suite", "output_dir", "emit_svg", "seed", "tolerance", "domain", "measure",
                                    "k", "p", "resolution", "bins", "samples", "function", "gamma", "weight_exponent",
                                    "from", "to", "distance", "nodes", "experiments"},
                                "");
    RunConfig c;
    if (!j.contains("command")) throw Error(ErrorCode::ConfigError, "command: missing");
    c.command = command_from_string(get_or<std::string>(j, "command", "", ""));
    c.suite = get_or(j, "suite", c.suite, "");
    if (c.command == Command::Verify && c.suite != "all" &&
        std::find(suite_names().begin(), suite_names().end(), c.suite) == suite_names().end())
        throw Error(ErrorCode::ConfigError, "suite: unknown suite '" + c.suite + "'");
    c.output_dir = get_or(j, "output_dir", c.output_dir, "");
    c.emit_svg = get_or(j, "emit_svg", c.emit_svg, "");
    c.seed = get_or(j, "seed", c.seed, "");
    if (j.contains("tolerance") && !j.at("tolerance").is_null()) {
        double t = get_or(j, "tolerance", 0.0, "");
        if (!(t >= 0) || !std::isfinite(t)) throw Error(ErrorCode::ConfigError, "tolerance: must be finite and >= 0");
        c.tolerance = t;
    }
    if (j.contains("domain")) {
        // missing domain keys keep their defaults; a new kind drops the default params
        nlohmann::json d = to_json(c.domain);
        const nlohmann::json& given = j.at("domain");
        if (given.is_object() && given.contains("kind")) d.erase("params");
        d.merge_patch(given);
        c.domain = grid_config_from_json(d, "domain");
    }
    if (!(c.domain.h > 0)) throw Error(ErrorCode::ConfigError, "domain.h: must be positive");
    if (j.contains("measure")) c.measure = detail::measure_from_json(j.at("measure"), "measure");
    c.k = get_or(j, "k", c.k, "");
    if (c.k < 0) throw Error(ErrorCode::ConfigError, "k: must be >= 0");
    c.p = get_or(j, "p", c.p, "");
    if (!(c.p >= 1) || !std::isfinite(c.p)) throw Error(ErrorCode::ConfigError, "p: must lie in [1, inf)");
    c.resolution = get_or(j, "resolution", c.resolution, "");
    if (c.resolution < 1) throw Error(ErrorCode::ConfigError, "resolution: must be >= 1");
    c.bins = get_or(j, "bins", c.bins, "");
    if (c.bins < 1) throw Error(ErrorCode::ConfigError, "bins: must be >= 1");
    c.samples = get_or(j, "samples", c.samples, "");
    if (c.samples < 0) throw Error(ErrorCode::ConfigError, "samples: must be >= 0");
    c.function = get_or(j, "function", c.function, "");
    if (std::find(test_functions().begin(), test_functions().end(), c.function) == test_functions().end())
        throw Error(ErrorCode::ConfigError, "function: unknown test function '" + c.function + "'");
    c.gamma = get_or(j, "gamma", c.gamma, "");
    c.weight_exponent = get_or(j, "weight_exponent", c.weight_exponent, "");
    if (j.contains("from")) c.from = detail::point_from_json(j.at("from"), "from");
    if (j.contains("to")) c.to = detail::point_from_json(j.at("to"), "to");
    std::string dist = get_or<std::string>(j, "distance", "taut", "");
    if (dist == "taut") c.distance = DistanceMode::Taut;
    else if (dist == "lattice") c.distance = DistanceMode::Lattice;
    else throw Error(ErrorCode::ConfigError, "distance: expected 'taut' or 'lattice'");
    c.nodes = get_or(j, "nodes", c.nodes, "");
    if (c.nodes < 1 || c.nodes > static_cast<int>(max_kernel_nodes))
        throw Error(ErrorCode::ConfigError, "nodes: must lie in [1, " + std::to_string(max_kernel_nodes) + "]");
    if (j.contains("experiments")) update_from_json(c.experiments, j.at("experiments"), "experiments");
    c.experiments.seed = c.seed;
    if (c.tolerance) c.experiments.tolerances.set_all(*c.tolerance);
    return c;
}

/// Config file (optional) patched by `overrides`, then WSOB_OUTPUT_DIR unless the flags set output_dir.
inline RunConfig load_config(const std::optional<std::string>& path, const nlohmann::json& overrides) {
    nlohmann::json j = nlohmann::json::object();
    if (path) {
        std::ifstream is(*path);
        if (!is) throw Error(ErrorCode::ConfigError, "config file '" + *path + "' cannot be opened");
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ConfigError, "config file '" + *path + "' is not valid JSON: " + e.what());
        }
        if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config file must hold a JSON object");
    }
    if (const char* env = std::getenv("WSOB_OUTPUT_DIR"); env && *env) j["output_dir"] = env;
    j.merge_patch(overrides);
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Dispatch

namespace detail {

inline std::function<double(Point)> test_function(const RunConfig& c) {
    double g = c.gamma;
    if (c.function == "one") return [](Point) { return 1.0; };
    if (c.function == "x") return [](Point p) { return p.x; };
    if (c.function == "inverse-x") return [](Point p) { return 1.0 / p.x; };
    if (c.function == "monomial") return [g](Point p) { return std::pow(p.x, -g); };
    return [](Point p) { return std::max(0.0, 1.0 - 2.0 * norm(p)); };  // bump of radius 1/2 at the origin
}

inline WeightField weight_for(const GridDomain& g, double a) {
    if (a == 0.0) return WeightField::constant(g, 1.0);
    return WeightField::on_grid(g, [a](Point p) { return p.x > 0 ? std::pow(p.x, a) : 0.0; });
}

inline std::string json_text(const nlohmann::json& j) { return rounded(j).dump(2) + "\n"; }

}  // namespace detail

inline int run_density(const RunConfig& c, std::ostream& out) {
    PushforwardSpec spec = c.measure.build();
    Interval img = spec.image();
    spec.target = PushforwardSpec::bin_centers(img, c.bins);
    WeightField f = pushforward_density(spec, c.resolution);
    std::optional<WeightField> mc;
    if (c.samples > 0) mc = monte_carlo_density(spec, c.samples, c.bins, c.seed);
    std::ostringstream csv;
    csv << "t,density" << (mc ? ",monte_carlo" : "") << "\n";
    double mass = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        csv << format12(f.points[i].x) << ',' << format12(f.values[i]);
        if (mc) csv << ',' << format12(mc->values[i]);
        csv << '\n';
        mass += f.values[i] * img.length() / c.bins;
    }
    std::filesystem::path dir(c.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create output directory " + dir.string());
    write_atomic(dir / "density.csv", csv.str());
    out << "map " << to_string(spec.map) << " (" << spec.name << "), " << f.size() << " bins on [" << format12(img.lo)
        << ", " << format12(img.hi) << "]\n";
    out << "mass (midpoint) " << format12(mass) << "\n";
    out << "wrote " << (dir / "density.csv").string() << "\n";
    return 0;
}

inline int run_sobolev_norm(const RunConfig& c, std::ostream& out) {
    GridDomain g = GridDomain::build(c.domain.spec, c.domain.h, c.domain.stencil);
    auto u_fn = detail::test_function(c);
    std::vector<double> u;
    for (const Point& x : g.nodes()) u.push_back(u_fn(x));
    WeightField f = detail::weight_for(g, c.weight_exponent);
    DifferenceOperators ops(g, c.k);
    std::vector<double> levels = sobolev_level_norms(u, ops, f, c.p);
    double total = 0.0;
    for (double v : levels) total += v;
    nlohmann::json j{{"domain", to_json(c.domain)}, {"nodes", g.size()},   {"function", c.function},
                     {"k", c.k},                    {"p", c.p},            {"weight_exponent", c.weight_exponent},
                     {"levels", levels},            {"norm", total},       {"underflow", ops.underflow_count()}};
    std::filesystem::path dir(c.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create output directory " + dir.string());
    write_atomic(dir / "sobolev-norm.json", detail::json_text(j));
    out << "nodes " << g.size() << "\n";
    for (std::size_t i = 0; i < levels.size(); ++i) out << "level " << i << " " << format12(levels[i]) << "\n";
    out << "norm " << format12(total) << "\n";
    return 0;
}

inline int run_kernel(const RunConfig& c, std::ostream& out) {
    GridDomain g = GridDomain::build(c.domain.spec, c.domain.h, c.domain.stencil);
    WeightField f = detail::weight_for(g, c.weight_exponent);
    SobolevOperator op = assemble_operator(g, f, c.k);
    KernelSolver solver(op);
    std::vector<int> pick = op.support;
    Rng rng(c.seed);
    for (std::size_t i = pick.size(); i > 1; --i) std::swap(pick[i - 1], pick[rng.index(i)]);
    pick.resize(std::min<std::size_t>(pick.size(), static_cast<std::size_t>(c.nodes)));
    std::sort(pick.begin(), pick.end());
    KernelMatrix km = kernel_matrix(solver, pick);
    double sym = km.symmetry_error(), lmin = km.min_eigenvalue(), n2 = km.norm2();
    nlohmann::json j{{"domain", to_json(c.domain)}, {"k", c.k},           {"support", op.support.size()},
                     {"nodes", pick},                {"symmetry_error", sym}, {"min_eigenvalue", lmin},
                     {"norm2", n2}};
    std::filesystem::path dir(c.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create output directory " + dir.string());
    std::ostringstream csv;
    write_csv(csv, km);
    write_atomic(dir / "kernel.csv", csv.str());
    write_atomic(dir / "kernel.json", detail::json_text(j));
    out << "support " << op.support.size() << ", kernel on " << pick.size() << " nodes\n";
    out << "symmetry error " << format12(sym) << "\n";
    out << "min eigenvalue " << format12(lmin) << " (norm " << format12(n2) << ")\n";
    return 0;
}

inline int run_geodesic(const RunConfig& c, std::ostream& out) {
    GridDomain g = GridDomain::build(c.domain.spec, c.domain.h, c.domain.stencil);
    if (!c.domain.spec.contains(c.from)) throw Error(ErrorCode::OutOfDomain, "'from' point is not in the domain");
    if (!c.domain.spec.contains(c.to)) throw Error(ErrorCode::OutOfDomain, "'to' point is not in the domain");
    InnerMetricGraph graph(g);
    int a = g.nearest_node(c.from), b = g.nearest_node(c.to);
    double d = inner_distance(graph, a, b, c.distance);
    double e = distance(g.node(a), g.node(b));
    nlohmann::json j{{"domain", to_json(c.domain)},
                     {"from_node", {g.node(a).x, g.node(a).y}},
                     {"to_node", {g.node(b).x, g.node(b).y}},
                     {"inner_distance", d},
                     {"euclidean", e},
                     {"distance", c.distance == DistanceMode::Taut ? "taut" : "lattice"}};
    std::filesystem::path dir(c.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create output directory " + dir.string());
    write_atomic(dir / "geodesic.json", detail::json_text(j));
    out << "inner distance " << format12(d) << "\n";
    out << "euclidean " << format12(e) << "\n";
    return 0;
}

inline int run_verify(const RunConfig& c, std::ostream& out) {
    std::vector<std::string> names = c.suite == "all" ? suite_names() : std::vector<std::string>{c.suite};
    std::filesystem::path dir(c.output_dir);
    nlohmann::json summary = nlohmann::json::object();
    bool all_pass = true;
    for (const std::string& name : names) {
        ExperimentReport rep = run_suite(name, c.experiments);
        write_report(rep, dir, c.emit_svg);
        bool ok = rep.verdict();
        all_pass = all_pass && ok;
        int failed = static_cast<int>(std::count_if(rep.records.begin(), rep.records.end(), [](const Record& r) { return !r.pass; }));
        summary[name] = {{"verdict", ok ? "pass" : "fail"}, {"records", rep.records.size()}, {"failed", failed}};
        out << name << ": " << (ok ? "pass" : "fail") << " (" << rep.records.size() - failed << "/" << rep.records.size()
            << " records)\n";
    }
    nlohmann::json top{{"suites", summary}, {"verdict", all_pass ? "pass" : "fail"}, {"config", to_json(c.experiments)}};
    top["config"]["seed"] = c.seed;
    write_atomic(dir / "summary.json", detail::json_text(top));
    return all_pass ? 0 : 1;
}

/// 0 on success or pass, 1 on a failed verification, 2 on configuration or runtime errors.
inline int dispatch(const RunConfig& c, std::ostream& out, std::ostream& err) {
    try {
        switch (c.command) {
            case Command::Density: return run_density(c, out);
            case Command::SobolevNorm: return run_sobolev_norm(c, out);
            case Command::Kernel: return run_kernel(c, out);
            case Command::Geodesic: return run_geodesic(c, out);
            case Command::Verify: return run_verify(c, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace wsob
