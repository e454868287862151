// Acceptance checks: one PASS/FAIL line per criterion.
// Usage: acceptance <scratch-dir>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wsob/cli.hpp"

using namespace wsob;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

Tolerances spec_tolerances() {
    Tolerances t;
    t.norm_stability = 0.01;
    t.slope = 0.1;
    t.threshold = 0.05;
    t.beta = 0.05;
    t.alpha = 0.2;
    t.coarea = 0.02;
    t.quadrature = 0.02;
    t.monte_carlo = 0.05;
    t.vanishing = 0.1;
    t.lipschitz = 0.05;
    return t;
}

// every record whose anchor is listed must exist and pass
void check_records(Outcome& o, const ExperimentReport& rep, const std::set<std::string>& anchors) {
    std::set<std::string> seen;
    for (const Record& r : rep.records) {
        if (!anchors.count(r.anchor)) continue;
        seen.insert(r.anchor);
        o.check(r.pass, r.anchor + " [" + r.input + "] measured " + format12(r.measured) + " vs " +
                            format12(r.expected) + " (" + to_string(r.compare) + " " + format12(r.tolerance) + ")");
    }
    for (const std::string& a : anchors) o.check(seen.count(a) > 0, "no record " + a);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_command(const std::string& cmd) {
    int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

Outcome coarea_identity() {
    Outcome o;
    auto t0 = Clock::now();
    for (const PushforwardSpec& s : catalog_pushforwards())
        for (CoareaIntegrand g : {CoareaIntegrand::One, CoareaIntegrand::X1Squared, CoareaIntegrand::Xi}) {
            double gap = coarea_check(s, g, 512).relative_gap();
            o.check(gap <= 0.02, s.name + " g=" + to_string(g) + " gap " + format12(gap));
        }
    double t = seconds_since(t0);
    o.check(t < 10, "runtime " + format12(t) + " s");
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("runtime ") + format12(t) + " s";
    return o;
}

Outcome suite(const std::string& name, const ExperimentConfig& cfg, const std::set<std::string>& anchors,
              double max_seconds = 0) {
    Outcome o;
    auto t0 = Clock::now();
    ExperimentReport rep = run_suite(name, cfg);
    double t = seconds_since(t0);
    check_records(o, rep, anchors);
    if (max_seconds > 0) o.check(t < max_seconds, "runtime " + format12(t) + " s");
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("runtime ") + format12(t) + " s";
    return o;
}

Outcome kernel_correctness() {
    Outcome o;
    struct Case {
        DomainSpec spec;
        double h;
    };
    std::vector<Case> cases{{DomainSpec::square(), 1.0 / 10},
                            {DomainSpec::power_cusp(2), 1.0 / 64},
                            {DomainSpec::disk(), 1.0 / 32},
                            {DomainSpec::square(), 1.0 / 101}};
    Rng rng(7);
    std::size_t largest = 0;
    for (const Case& c : cases) {
        GridDomain g = GridDomain::build(c.spec, c.h);
        largest = std::max(largest, g.size());
        SobolevOperator op = assemble_operator(g, WeightField::constant(g, 1.0), 2);
        KernelSolver solver(op);
        std::string tag = to_string(c.spec.kind) + " n=" + std::to_string(g.size());
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            std::vector<double> u(g.size(), 0.0);
            for (int i : op.support) u[i] = rng.normal();
            int x = op.support[rng.index(op.support.size())];
            std::vector<double> phi = dirac_representer(solver, x);
            worst = std::max(worst, std::abs(a_inner(op, phi, u) - u[x]) / std::sqrt(a_inner(op, u, u)));
        }
        o.check(worst <= 1e-8, tag + " reproducing error " + format12(worst));

        std::vector<int> pick = op.support;
        for (std::size_t i = pick.size(); i > 1; --i) std::swap(pick[i - 1], pick[rng.index(i)]);
        std::vector<int> big(pick.begin(), pick.begin() + std::min<std::size_t>(pick.size(), 200));
        KernelMatrix km = kernel_matrix(solver, big);
        o.check(km.symmetry_error() <= 1e-10, tag + " symmetry " + format12(km.symmetry_error()));
        o.check(km.min_eigenvalue() >= -1e-10 * km.norm2(), tag + " min eigenvalue " + format12(km.min_eigenvalue()));
        std::vector<int> small(pick.begin(), pick.begin() + std::min<std::size_t>(pick.size(), 50));
        double lam = kernel_matrix(solver, small).min_eigenvalue();
        o.check(lam > 0, tag + " 50-node min eigenvalue " + format12(lam));
    }
    o.check(largest >= 10000, "largest grid has only " + std::to_string(largest) + " nodes");
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("largest grid ") + std::to_string(largest) + " nodes";
    return o;
}

Outcome geodesic_sanity() {
    Outcome o;
    Rng rng(11);
    for (const DomainSpec& s : {DomainSpec::square(), DomainSpec::disk()}) {
        GridDomain g = GridDomain::build(s, 1.0 / 128, Stencil::N16);
        InnerMetricGraph graph(g);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            int a = static_cast<int>(rng.index(g.size())), b = static_cast<int>(rng.index(g.size()));
            if (a == b) continue;
            worst = std::max(worst, inner_distance(graph, a, b) / distance(g.node(a), g.node(b)) - 1.0);
        }
        o.check(worst <= 0.02, to_string(s.kind) + " excess " + format12(worst));
    }
    for (const DomainSpec& s : {DomainSpec::l_shape(), DomainSpec::power_cusp(2)}) {
        GridDomain g = GridDomain::build(s, 1.0 / 64, Stencil::N16);
        InnerMetricGraph graph(g);
        int bad = 0;
        for (int i = 0; i < 1000; ++i) {
            int a = static_cast<int>(rng.index(g.size())), b = static_cast<int>(rng.index(g.size())),
                c = static_cast<int>(rng.index(g.size()));
            double ab = inner_distance(graph, a, b), ba = inner_distance(graph, b, a), bc = inner_distance(graph, b, c),
                   ac = inner_distance(graph, a, c);
            bool ok = ab == ba && inner_distance(graph, a, a) == 0.0 && (a == b || ab > 0) && ac <= ab + bc + 1e-12;
            bad += !ok;
        }
        o.check(bad == 0, to_string(s.kind) + " axiom violations " + std::to_string(bad));
    }
    return o;
}

Outcome determinism(const fs::path& scratch) {
    Outcome o;
    std::vector<fs::path> dirs{scratch / "run1", scratch / "run2"};
    for (const fs::path& d : dirs) {
        fs::remove_all(d);
        auto t0 = Clock::now();
        int st = run_command(std::string(WSOB_CLI_PATH) + " verify all --output-dir " + d.string() + " > " +
                             (d.string() + ".log") + " 2>&1");
        double t = seconds_since(t0);
        o.check(st == 0 || st == 1, "verify all exit status " + std::to_string(st));
        o.check(t < 600, "runtime " + format12(t) + " s");
        o.detail += (o.detail.empty() ? "" : "; ") + std::string("runtime ") + format12(t) + " s";
    }
    std::set<std::string> names[2];
    for (int i = 0; i < 2; ++i)
        if (fs::exists(dirs[i]))
            for (const auto& e : fs::directory_iterator(dirs[i])) names[i].insert(e.path().filename().string());
    o.check(!names[0].empty() && names[0] == names[1], "different file sets");
    int differing = 0;
    for (const std::string& n : names[0])
        if (names[1].count(n) && slurp(dirs[0] / n) != slurp(dirs[1] / n)) ++differing;
    o.check(differing == 0, std::to_string(differing) + " files differ");
    o.detail += "; " + std::to_string(names[0].size()) + " files compared";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    fs::path scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "wsob-acceptance";
    fs::create_directories(scratch);

    ExperimentConfig cfg;
    cfg.tolerances = spec_tolerances();

    struct Criterion {
        const char* title;
        std::function<Outcome()> run;
    };
    std::vector<Criterion> criteria{
        {"coarea identity", coarea_identity},
        {"push-forward density vanishes",
         [&] {
             return suite("coarea", cfg,
                          {"coarea.density-matches-analytic", "coarea.density-matches-monte-carlo",
                           "coarea.density-vanishing-exponent"});
         }},
        {"flat-cusp counterexample",
         [&] {
             return suite("flat-cusp", cfg, {"flat-cusp.sobolev-norm-converges", "flat-cusp.lipschitz-seminorm-diverges"},
                          60);
         }},
        {"power-cusp thresholds",
         [&] { return suite("thresholds", cfg, {"thresholds.gamma-star", "thresholds.p-independent-beta"}); }},
        {"slice lemma", [&] { return suite("slice-lemma", cfg, {"slice-lemma.ratio-bounded", "slice-lemma.slice-norm-slope"}); }},
        {"morrey shells", [&] { return suite("morrey", cfg, {"morrey.shell-measure", "morrey.density-lower-exponent"}); }},
        {"kernel correctness", kernel_correctness},
        {"kernel lipschitz embedding",
         [&] {
             return suite("kernel-threshold", cfg,
                          {"kernel-threshold.square-admissible", "kernel-threshold.flat-cusp-none-admissible",
                           "kernel-threshold.k-emp-monotone-in-l"});
         }},
        {"retraction bounds",
         [&] {
             return suite("retraction", cfg,
                          {"retraction.slice-jacobian-fit-found", "retraction.slice-jacobian-nu", "retraction.lipschitz-cs",
                           "retraction.density-comparison-nu", "retraction.flat-density-no-fit"});
         }},
        {"geodesic sanity", geodesic_sanity},
        {"determinism", [&] { return determinism(scratch); }},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("error: ") + e.what();
        }
        failed += !o.pass;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].title, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
