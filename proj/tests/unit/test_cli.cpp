#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wsob/cli.hpp"

using namespace wsob;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct CliRun {
    int status;
    std::string out;
};

CliRun run_cli(const std::string& args) {
    std::string cmd = std::string(WSOB_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    int st = pclose(pipe);
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

fs::path scratch_dir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("wsob-cli-" + name);
    fs::remove_all(d);
    return d;
}

}  // namespace

TEST(ParseConfig, MinimalDensityUsesDefaults) {
    RunConfig c = load_config(std::nullopt, {{"command", "density"}, {"measure", {{"map", "norm-squared"}, {"dim", 4}}}});
    EXPECT_EQ(c.command, Command::Density);
    EXPECT_EQ(c.measure.map, MapKind::NormSquared);
    EXPECT_EQ(c.measure.dim, 4);
    EXPECT_EQ(c.resolution, 256);
    EXPECT_EQ(c.bins, 20);
    EXPECT_EQ(c.seed, 1u);
    EXPECT_FALSE(c.tolerance.has_value());
}

TEST(ParseConfig, UnknownKeysAreNamed) {
    try {
        parse_config({{"command", "kernel"}, {"domain", {{"stencill", 8}}}});
        FAIL() << "accepted a misspelt key";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigError);
        EXPECT_NE(std::string(e.what()).find("domain.stencill"), std::string::npos) << e.what();
    }
    EXPECT_WSOB_ERROR(parse_config({{"commnd", "kernel"}}), ConfigError);
    EXPECT_WSOB_ERROR(parse_config(json::object()), ConfigError);
    EXPECT_WSOB_ERROR(parse_config({{"command", "verify"}, {"suite", "nope"}}), ConfigError);
    EXPECT_WSOB_ERROR(parse_config({{"command", "sobolev-norm"}, {"p", 0.5}}), ConfigError);
    EXPECT_WSOB_ERROR(parse_config({{"command", "sobolev-norm"}, {"function", "sin"}}), ConfigError);
    EXPECT_WSOB_ERROR(parse_config({{"command", "kernel"}, {"nodes", 0}}), ConfigError);
    EXPECT_WSOB_ERROR(parse_config({{"command", "fly"}}), ConfigError);
}

TEST(ParseConfig, DomainPatchKeepsDefaults) {
    RunConfig c = parse_config({{"command", "kernel"}, {"domain", {{"h", 0.125}}}});
    EXPECT_EQ(c.domain.spec.kind, DomainKind::Square);
    EXPECT_EQ(c.domain.h, 0.125);
    c = parse_config({{"command", "kernel"}, {"domain", {{"kind", "power-cusp"}, {"params", {{"l", 3}}}}}});
    EXPECT_EQ(c.domain.spec.kind, DomainKind::PowerCusp);
    EXPECT_EQ(c.domain.spec.l, 3.0);
}

TEST(ParseConfig, ToleranceAndSeedReachExperiments) {
    RunConfig c = parse_config({{"command", "verify"}, {"seed", 9}, {"tolerance", 0.5}});
    EXPECT_EQ(c.experiments.seed, 9u);
    EXPECT_EQ(c.experiments.tolerances.slope, 0.5);
    EXPECT_EQ(c.experiments.tolerances.coarea, 0.5);
}

TEST(ParseConfig, ThresholdConfigMatchesGolden) {
    fs::path dir = WSOB_GOLDEN_DIR;
    RunConfig c = load_config((dir / "thresholds_config.json").string(), json::object());
    EXPECT_EQ(c.experiments.thresholds.l, (std::vector<double>{2, 3, 5}));
    json expected = json::parse(slurp(dir / "thresholds_parsed.json"));
    EXPECT_EQ(detail::rounded(to_json(c)), expected);
}

TEST(ParseConfig, ConfigRoundTrip) {
    RunConfig c = parse_config({{"command", "geodesic"},
                                {"domain", {{"kind", "l-shape"}}},
                                {"from", {0.2, 0.8}},
                                {"distance", "lattice"},
                                {"tolerance", 0.1}});
    RunConfig back = parse_config(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
}

TEST(ParseConfig, PrecedenceFlagOverEnvOverFile) {
    fs::path dir = scratch_dir("prec");
    fs::create_directories(dir);
    fs::path cfg = dir / "c.json";
    std::ofstream(cfg) << R"({"command": "verify", "output_dir": "from-file"})";
    unsetenv("WSOB_OUTPUT_DIR");
    EXPECT_EQ(load_config(cfg.string(), json::object()).output_dir, "from-file");
    setenv("WSOB_OUTPUT_DIR", "from-env", 1);
    EXPECT_EQ(load_config(cfg.string(), json::object()).output_dir, "from-env");
    EXPECT_EQ(load_config(cfg.string(), {{"output_dir", "from-flag"}}).output_dir, "from-flag");
    unsetenv("WSOB_OUTPUT_DIR");
    EXPECT_EQ(load_config(std::nullopt, {{"command", "verify"}}).output_dir, "wsob-out");
    EXPECT_WSOB_ERROR(load_config((dir / "missing.json").string(), json::object()), ConfigError);
    std::ofstream(dir / "bad.json") << "{not json";
    EXPECT_WSOB_ERROR(load_config((dir / "bad.json").string(), json::object()), ConfigError);
    fs::remove_all(dir);
}

TEST(Dispatch, VerifyFlatCuspWritesReport) {
    fs::path dir = scratch_dir("verify");
    RunConfig c = parse_config({{"command", "verify"},
                                {"suite", "flat-cusp"},
                                {"output_dir", dir.string()},
                                {"experiments", {{"flat_cusp", {{"k_max", 1}, {"h", 1.0 / 512}}}}}});
    std::ostringstream out, err;
    EXPECT_EQ(dispatch(c, out, err), 0) << err.str();
    json rep = json::parse(slurp(dir / "flat-cusp.json"));
    EXPECT_EQ(rep["verdict"], "pass");
    json summary = json::parse(slurp(dir / "summary.json"));
    EXPECT_EQ(summary["verdict"], "pass");
    EXPECT_EQ(summary["suites"]["flat-cusp"]["failed"], 0);
    fs::remove_all(dir);
}

TEST(Dispatch, ZeroToleranceFailsVerification) {
    fs::path dir = scratch_dir("verify0");
    RunConfig c = parse_config({{"command", "verify"},
                                {"suite", "flat-cusp"},
                                {"output_dir", dir.string()},
                                {"tolerance", 0.0},
                                {"experiments", {{"flat_cusp", {{"k_max", 1}, {"h", 1.0 / 512}}}}}});
    std::ostringstream out, err;
    EXPECT_EQ(dispatch(c, out, err), 1);
    fs::remove_all(dir);
}

TEST(Dispatch, UnwritableDirectoryIsAnError) {
    RunConfig c = parse_config({{"command", "geodesic"}, {"output_dir", "/proc/wsob-no-such-dir"}});
    std::ostringstream out, err;
    EXPECT_EQ(dispatch(c, out, err), 2);
    EXPECT_NE(err.str().find("error:"), std::string::npos);
}

TEST(Dispatch, GeodesicOutsideDomainIsAnError) {
    fs::path dir = scratch_dir("geo");
    RunConfig c = parse_config(
        {{"command", "geodesic"}, {"domain", {{"kind", "l-shape"}}}, {"to", {0.75, 0.75}}, {"output_dir", dir.string()}});
    std::ostringstream out, err;
    EXPECT_EQ(dispatch(c, out, err), 2);
    fs::remove_all(dir);
}

TEST(Dispatch, DensityCsvHasOneRowPerBin) {
    fs::path dir = scratch_dir("density");
    RunConfig c = parse_config({{"command", "density"},
                                {"measure", {{"map", "identity"}}},
                                {"bins", 8},
                                {"samples", 10000},
                                {"output_dir", dir.string()}});
    std::ostringstream out, err;
    ASSERT_EQ(dispatch(c, out, err), 0) << err.str();
    std::istringstream csv(slurp(dir / "density.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "t,density,monte_carlo");
    int rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        EXPECT_NE(line.find(",1,"), std::string::npos) << line;
    }
    EXPECT_EQ(rows, 8);
    fs::remove_all(dir);
}

TEST(Binary, HelpMatchesGolden) {
    CliRun r = run_cli("--help");
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(r.out, slurp(fs::path(WSOB_GOLDEN_DIR) / "help.txt"));
    for (const char* flag : {"--config", "--output-dir", "--seed", "--tolerance", "--svg", "--spacing", "--nodes"})
        EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
}

TEST(Binary, ExitCodes) {
    EXPECT_EQ(run_cli("").status, 2);
    EXPECT_EQ(run_cli("verify nope").status, 2);
    EXPECT_EQ(run_cli("density --map nope").status, 2);
    EXPECT_EQ(run_cli("kernel --stencil 5 --output-dir /tmp/wsob-cli-exit").status, 2);
    fs::remove_all("/tmp/wsob-cli-exit");
}

TEST(Binary, SobolevNormPrintsValue) {
    fs::path dir = scratch_dir("norm");
    CliRun r = run_cli("sobolev-norm --spacing 0.03125 --output-dir " + dir.string());
    EXPECT_EQ(r.status, 0) << r.out;
    json j = json::parse(slurp(dir / "sobolev-norm.json"));
    // u = x on the unit square: ||u||_2 + ||grad u||_2 = 1/sqrt(3) + 1
    EXPECT_NEAR(j["norm"].get<double>(), 1.0 + 1.0 / std::sqrt(3.0), 0.02);
    fs::remove_all(dir);
}
