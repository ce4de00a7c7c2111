#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <critdrift/experiments.hpp>

using namespace critdrift;
using namespace critdrift::experiments;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
    const auto p = fs::path(testing::TempDir()) / ("critdrift_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(CRITDRIFT_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Config parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}
}  // namespace

TEST(Config, ParsesDocumentedKeys) {
    const auto c = parse(
        "# comment\n"
        "cbar = 3sqrtpi\n"
        "x_max = 80\n dx=0.02\n dt = 0.02\n t_end = 5\n tau_end = 8\n y_max = 20\n dy = 0.02\n"
        "n_modes = 48\n v0.kind = smooth_bump\n v0.a = 0.5\n v0.b = 2.5\n fit.window = 5,9\n"
        "mc.drift = 1.5\n mc.replicas = 123\n mc.seed = 77\n pipeline = solve,fit\n");
    EXPECT_DOUBLE_EQ(c.cbar, kThreeSqrtPi);
    EXPECT_EQ(c.x_max, 80.0);
    EXPECT_EQ(c.n_modes, 48u);
    EXPECT_EQ(c.v0.kind, pde::InitialKind::smooth_bump);
    EXPECT_EQ(c.fit_lo, 5.0);
    EXPECT_EQ(c.fit_hi, 9.0);
    EXPECT_EQ(c.mc_config().n_replicas, 123u);
    EXPECT_EQ(c.mc_config().seed, 77u);
    EXPECT_EQ(c.pipeline, (std::vector<std::string>{"solve", "fit"}));
    EXPECT_EQ(c.echo.at("cbar"), "3sqrtpi");
    const auto s = c.selfsim_config(0.0);
    EXPECT_EQ(s.cbar, 0.0);
    EXPECT_EQ(s.fit_tau_lo, 5.0);
}

TEST(Config, RejectsInvalidInput) {
    try {
        parse("cbar = 1\nbogus_key = 3\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("bogus_key"), std::string::npos);
    }
    EXPECT_THROW(parse("dx = -1\n"), ConfigError);
    EXPECT_THROW(parse("dx = abc\n"), ConfigError);
    EXPECT_THROW(parse("just a line\n"), ConfigError);
    EXPECT_THROW(parse("pipeline = solve,dance\n"), ConfigError);
    EXPECT_THROW(parse("fit.window = 9,5\n"), ConfigError);
    EXPECT_THROW(parse("v0.kind = square\n"), ConfigError);
}

TEST(RunExperiment, EmptyPipelineWritesManifestOnly) {
    const auto dir = scratch("empty");
    const auto manifest = run_experiment(Config{}, dir);
    EXPECT_TRUE(fs::exists(manifest));
    std::size_t n = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++n;
    EXPECT_EQ(n, 1u);
    const auto j = json::parse(slurp(manifest));
    EXPECT_TRUE(j["files"].empty());
    EXPECT_TRUE(j.contains("code_version"));
}

TEST(RunExperiment, ManifestHashesEveryFile) {
    const auto dir = scratch("specfun");
    Config c = parse("pipeline = specfun\ncbar = 0\n");
    run_experiment(c, dir);
    const auto j = json::parse(slurp(dir / "manifest.json"));
    ASSERT_EQ(j["files"].size(), 2u);
    for (const auto& f : j["files"]) {
        const auto p = dir / f["path"].get<std::string>();
        EXPECT_EQ(f["sha256"].get<std::string>(), sha256_file(p));
        EXPECT_EQ(f["sha256"].get<std::string>().size(), 64u);
        EXPECT_EQ(f["bytes"].get<std::uintmax_t>(), fs::file_size(p));
    }
    EXPECT_EQ(j["config"]["cbar"], "0");
    EXPECT_EQ(j["tasks"][0]["task"], "specfun");
}

TEST(Sha256, KnownDigest) {
    const auto dir = scratch("sha");
    std::ofstream(dir / "abc.txt") << "abc";
    EXPECT_EQ(sha256_file(dir / "abc.txt"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cli, UnknownConfigKeyExitsWithTwo) {
    const auto dir = scratch("cli_bad");
    std::ofstream(dir / "bad.cfg") << "cbar = 1\nnot_a_key = 2\n";
    const int rc = run_cli("--config " + (dir / "bad.cfg").string() + " --out " + (dir / "out").string() + " solve",
                           dir / "log.txt");
    EXPECT_EQ(rc, 2);
    EXPECT_NE(slurp(dir / "log.txt").find("not_a_key"), std::string::npos);
}

TEST(Cli, SpecfunPrintsJson) {
    const auto dir = scratch("cli_sf");
    ASSERT_EQ(run_cli("specfun --z 1 --alpha 1 --cbar 0", dir / "out.json"), 0);
    const auto j = json::parse(slurp(dir / "out.json"));
    EXPECT_NEAR(j["F2"].get<double>(), 0.77017734966187456, 1e-14);
    EXPECT_NEAR(j["g"].get<double>(), -2.9306986182306802, 1e-11);
    EXPECT_NEAR(j["g_slope0"].get<double>(), -3.0 * kSqrtPi, 1e-9);
}

TEST(Cli, SolveWritesSeriesAndFitReadsIt) {
    const auto dir = scratch("cli_solve");
    ASSERT_EQ(run_cli("--out " + (dir / "out").string() + " solve --t-end 5 --dx 0.05 --dt 0.05 --x-max 30",
                      dir / "log.txt"),
              0);
    const auto csv = dir / "out" / "physical_cbar3sqrtpi.csv";
    ASSERT_TRUE(fs::exists(csv)) << slurp(dir / "log.txt");
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "t,mass,slope0,flux_residual");
    EXPECT_EQ(run_cli("fit --input " + csv.string() + " --alpha0 0 --t-min 1.1", dir / "fit.json"), 0);
    EXPECT_TRUE(json::parse(slurp(dir / "fit.json")).contains("exponent"));
}

TEST(Cli, NumericalFailureExitsWithThree) {
    const auto dir = scratch("cli_nan");
    const int rc = run_cli("--out " + (dir / "out").string() + " solve --cbar 1e308 --t-end 0.1 --dx 0.05 --x-max 10",
                           dir / "log.txt");
    EXPECT_EQ(rc, 3) << slurp(dir / "log.txt");
}

TEST(Cli, ReproduceTheoremEmitsRateTable) {
    const auto dir = scratch("cli_repro");
    ASSERT_EQ(run_cli("--out " + (dir / "out").string() + " reproduce-theorem", dir / "summary.json"), 0);
    const auto j = json::parse(slurp(dir / "out" / "summary.json"));
    EXPECT_GT(j["alpha0"].get<double>(), 0.0);
    ASSERT_EQ(j["alpha0_by_cbar"].size(), 3u);
    EXPECT_EQ(j["fits"].size(), 12u);
    EXPECT_NEAR(j["initial_moments"]["int_y_exp_y_v0"].get<double>(), std::exp(2.0), 1e-9);
    EXPECT_NEAR(j["initial_moments"]["int_xi_v0"].get<double>(), 1.5, 1e-12);
    std::ifstream in(dir / "out" / "rate_table.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "cbar,quantity,model,exponent,prefactor,r2,alpha0");
    int rows = 0;
    while (std::getline(in, line)) rows += !line.empty();
    EXPECT_EQ(rows, 12);
    const auto m = json::parse(slurp(dir / "out" / "manifest.json"));
    EXPECT_EQ(m["files"].size(), 8u);  // 3 x (trajectory, observables) + rate table + summary
}
