#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "wsob/cli.hpp"

namespace {

void set_if(nlohmann::json& j, const CLI::Option* opt, const char* key, const nlohmann::json& value) {
    if (opt->count() > 0) j[key] = value;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weighted Sobolev spaces on cusp domains: densities, norms, kernels and verification suites", "wsob"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, output_dir;
    bool svg = false;
    std::uint64_t seed = 1;
    double tolerance = 0.0;
    auto* o_config = app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    auto* o_out = app.add_option("--output-dir", output_dir, "Directory for result files");
    auto* o_svg = app.add_flag("--svg", svg, "Also write an SVG plot per exponent fit");
    auto* o_seed = app.add_option("--seed", seed, "Random seed");
    auto* o_tol = app.add_option("--tolerance", tolerance, "Replace every verification tolerance")->check(CLI::NonNegativeNumber);

    // domain options shared by the grid commands
    std::string domain = "square";
    double cusp_l = 2.0, h = 1.0 / 64, eps_cut = 0.0, p = 2.0;
    int stencil = 8, k = 1;
    struct DomainOpts {
        CLI::Option *kind, *l, *h, *stencil, *eps, *k, *p;
    };
    auto add_domain = [&](CLI::App* sub) {
        DomainOpts d;
        d.kind = sub->add_option("--domain", domain, "interval, square, disk, sector, power-cusp, flat-cusp, annulus, l-shape");
        d.l = sub->add_option("--cusp-exponent", cusp_l, "Exponent l of the power cusp");
        d.h = sub->add_option("--spacing", h, "Grid spacing h");
        d.stencil = sub->add_option("--stencil", stencil, "Neighbourhood size: 4, 8 or 16");
        d.eps = sub->add_option("--eps-cut", eps_cut, "Remove points with x < eps_cut");
        d.k = sub->add_option("--k", k, "Differentiation order");
        d.p = sub->add_option("--p", p, "Integrability exponent");
        return d;
    };

    auto* density = app.add_subcommand("density", "Push-forward density of a catalog map, as CSV");
    std::string map = "norm-squared";
    int dim = 2, resolution = 256, bins = 20;
    double band_l = 2.0;
    long samples = 0;
    auto* o_map = density->add_option("--map", map, "identity, project-x, norm-squared, radial");
    auto* o_dim = density->add_option("--dim", dim, "Source dimension");
    auto* o_l = density->add_option("--l", band_l, "Band exponent for project-x");
    auto* o_res = density->add_option("--resolution", resolution, "Fiber quadrature resolution");
    auto* o_bins = density->add_option("--bins", bins, "Number of evaluation bins");
    auto* o_samples = density->add_option("--samples", samples, "Add a Monte Carlo column with this many samples");

    auto* norm = app.add_subcommand("sobolev-norm", "Discrete weighted Sobolev norm of a test function");
    DomainOpts norm_d = add_domain(norm);
    std::string function = "x";
    double gamma = 0.5, weight_exponent = 0.0;
    auto* o_fn = norm->add_option("--function", function, "one, x, inverse-x, monomial, bump");
    auto* o_gamma = norm->add_option("--gamma", gamma, "Exponent of the monomial x^-gamma");
    auto* o_wexp = norm->add_option("--weight-exponent", weight_exponent, "Weight f = x^a");

    auto* kernel = app.add_subcommand("kernel", "Reproducing kernel on a random node subset");
    DomainOpts kernel_d = add_domain(kernel);
    int nodes = 50;
    auto* o_nodes = kernel->add_option("--nodes", nodes, "Number of kernel nodes");
    auto* o_kwexp = kernel->add_option("--weight-exponent", weight_exponent, "Weight f = x^a");

    auto* geodesic = app.add_subcommand("geodesic", "Inner distance between two points");
    DomainOpts geo_d = add_domain(geodesic);
    std::vector<double> from, to;
    std::string distance = "taut";
    auto* o_from = geodesic->add_option("--from", from, "Start point x y")->expected(2);
    auto* o_to = geodesic->add_option("--to", to, "End point x y")->expected(2);
    auto* o_dist = geodesic->add_option("--distance", distance, "taut or lattice");

    auto* verify = app.add_subcommand("verify", "Run verification suites and write reports");
    std::string suite = "all";
    verify->add_option("suite", suite, "Suite name or 'all'");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        // top-level help lists every subcommand with its flags
        if (app.get_subcommands().empty()) {
            std::cout << app.help("", CLI::AppFormatMode::All);
            return 0;
        }
        return app.exit(CLI::CallForHelp());
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    nlohmann::json patch = nlohmann::json::object();
    CLI::App* sub = app.get_subcommands().front();
    patch["command"] = sub->get_name();
    set_if(patch, o_out, "output_dir", output_dir);
    set_if(patch, o_svg, "emit_svg", svg);
    set_if(patch, o_seed, "seed", seed);
    set_if(patch, o_tol, "tolerance", tolerance);

    auto domain_patch = [&](const DomainOpts& d) {
        nlohmann::json dj = nlohmann::json::object();
        set_if(dj, d.kind, "kind", domain);
        if (d.l->count() > 0) dj["params"] = {{"l", cusp_l}};
        set_if(dj, d.h, "h", h);
        set_if(dj, d.stencil, "stencil", stencil);
        set_if(dj, d.eps, "eps_cut", eps_cut);
        if (!dj.empty()) {
            if (!dj.contains("kind") && dj.contains("params")) dj["kind"] = "power-cusp";
            patch["domain"] = dj;
        }
        set_if(patch, d.k, "k", k);
        set_if(patch, d.p, "p", p);
    };

    if (sub == density) {
        nlohmann::json m = nlohmann::json::object();
        set_if(m, o_map, "map", map);
        set_if(m, o_dim, "dim", dim);
        set_if(m, o_l, "l", band_l);
        if (!m.empty()) patch["measure"] = m;
        set_if(patch, o_res, "resolution", resolution);
        set_if(patch, o_bins, "bins", bins);
        set_if(patch, o_samples, "samples", samples);
    } else if (sub == norm) {
        domain_patch(norm_d);
        set_if(patch, o_fn, "function", function);
        set_if(patch, o_gamma, "gamma", gamma);
        set_if(patch, o_wexp, "weight_exponent", weight_exponent);
    } else if (sub == kernel) {
        domain_patch(kernel_d);
        set_if(patch, o_nodes, "nodes", nodes);
        set_if(patch, o_kwexp, "weight_exponent", weight_exponent);
    } else if (sub == geodesic) {
        domain_patch(geo_d);
        if (o_from->count() > 0) patch["from"] = from;
        if (o_to->count() > 0) patch["to"] = to;
        set_if(patch, o_dist, "distance", distance);
    } else if (sub == verify) {
        patch["suite"] = suite;
    }

    wsob::RunConfig cfg;
    try {
        std::optional<std::string> path;
        if (o_config->count() > 0) path = config_path;
        cfg = wsob::load_config(path, patch);
    } catch (const wsob::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return wsob::dispatch(cfg, std::cout, std::cerr);
}
