#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lfv/config.hpp"
#include "lfv/ensemble.hpp"
#include "lfv/projected.hpp"

using namespace lfv;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("lfvsim_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string binary() {
    const char* p = std::getenv("LFVSIM");
    REQUIRE_MESSAGE(p != nullptr, "LFVSIM must point at the lfvsim executable");
    return p;
}

fs::path write_config(const std::string& name, const json& j) {
    const fs::path p = scratch() / (name + ".json");
    std::ofstream(p) << j.dump(2);
    return p;
}

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string& args) {
    const std::string cmd = binary() + " " + args + " 2>&1";
    Result r;
    FILE* f = ::popen(cmd.c_str(), "r");
    REQUIRE(f != nullptr);
    char buf[4096];
    while (std::fgets(buf, sizeof buf, f)) r.out += buf;
    const int st = ::pclose(f);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

json feller(double b, std::size_t reps, std::uint64_t seed = 1, const char* model = "feller") {
    return json{{"model", model},
                {"replicates", reps},
                {"horizon", 1.0},
                {"record_every", 0.5},
                {"base_seed", seed},
                {"diffusion", {{"a", 1.0}, {"b", b}, {"x0", 1.0}, {"dt", 1e-3}}}};
}

json lookdown_config() {
    return json{{"model", "lfvsfe-lookdown"},
                {"replicates", 24},
                {"horizon", 0.5},
                {"record_every", 0.25},
                {"base_seed", 3},
                {"scaling", {{"preset", "fluctuating"}, {"N", 500}}},
                {"lookdown", {{"x0", 1.0}, {"ceiling", 5.0}}}};
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_CASE("config parsing") {
    const RunConfig c = parse_config(feller(0.5, 10, 7));
    CHECK(c.model == Model::Feller);
    CHECK(c.replicates == 10);
    CHECK(c.base_seed == 7);
    CHECK(c.diffusion.b == 0.5);

    json bad = feller(0.0, 10);
    bad["diffusion"]["typo"] = 1;
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    json irrelevant = feller(0.0, 10);
    irrelevant["lookdown"] = {{"x0", 1.0}};
    CHECK_THROWS_AS(parse_config(irrelevant), ConfigError);
    json zero = feller(0.0, 0);
    CHECK_THROWS_AS(parse_config(zero), ConfigError);
    json horizon = feller(0.0, 10);
    horizon["horizon"] = -1.0;
    CHECK_THROWS_AS(parse_config(horizon), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"model", "nope"}}), ConfigError);

    CHECK(config_hash(parse_config(feller(0.0, 10)).source) == config_hash(parse_config(feller(0.0, 10)).source));
    CHECK(config_hash(parse_config(feller(0.0, 10)).source) != config_hash(parse_config(feller(0.1, 10)).source));
}

TEST_CASE("default guard follows the mean envelope") {
    const RunConfig c = parse_config(lookdown_config());
    REQUIRE(c.guard);
    CHECK(*c.guard == doctest::Approx(10.0 * std::exp(0.25 * 0.5)));
    json off = lookdown_config();
    off["lookdown"]["guard"] = 0.0;
    CHECK(*parse_config(off).guard == 0.0);
}

TEST_CASE("config errors exit with 2") {
    json bad = feller(0.0, 10);
    bad["bogus"] = true;
    CHECK(run("simulate --config " + write_config("bad", bad).string()).code == 2);
    json irrelevant = feller(0.0, 10);
    irrelevant["lookdown"] = {{"x0", 1.0}};
    CHECK(run("simulate --config " + write_config("irrelevant", irrelevant).string()).code == 2);
    CHECK(run("simulate --config " + (scratch() / "missing.json").string()).code == 2);
    CHECK(run("simulate --no-such-flag").code == 2);
}

TEST_CASE("simulate writes the report files") {
    const fs::path out = scratch() / "sim";
    const Result r = run("simulate --config " + write_config("sim", feller(0.0, 50)).string() + " --out " + out.string());
    CHECK(r.code == 0);
    REQUIRE(fs::exists(out / "run.csv"));
    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "plot.py"));
    const std::string csv = slurp(out / "run.csv");
    CHECK(csv.rfind("t,mean,se,var,var_lo,var_hi,n\n", 0) == 0);
    CHECK(read_csv(out / "run.csv").size() == 3);
    CHECK(slurp(out / "plot.py").find("run.csv") != std::string::npos);
}

TEST_CASE("a single replicate reproduces the library runner") {
    const fs::path out = scratch() / "single";
    REQUIRE(run("simulate --config " + write_config("single", feller(0.3, 1, 11)).string() + " --out " + out.string()).code == 0);
    Rng rng(derive_seed(11, 0));
    const Trajectory tr = run_diffusion(DiffusionParams{1.0, 0.3, 1.0}, DiffusionKind::Feller, 1.0, 1e-3, 0.5, rng);
    const auto rows = read_csv(out / "run.csv");
    REQUIRE(rows.size() == tr.values.size());
    for (std::size_t k = 0; k < rows.size(); ++k) CHECK(rows[k][1] == tr.values[k]);
}

TEST_CASE("output does not depend on the worker count") {
    const fs::path cfg = write_config("workers", lookdown_config());
    const fs::path a = scratch() / "w1", b = scratch() / "w3";
    REQUIRE(run("simulate --config " + cfg.string() + " --workers 1 --out " + a.string()).code == 0);
    REQUIRE(run("simulate --config " + cfg.string() + " --workers 3 --out " + b.string()).code == 0);
    CHECK(slurp(a / "run.csv") == slurp(b / "run.csv"));
}

TEST_CASE("provenance reproduces the run") {
    const fs::path a = scratch() / "prov_a", b = scratch() / "prov_b";
    REQUIRE(run("simulate --config " + write_config("prov", feller(0.2, 40, 5)).string() + " --seed 99 --out " +
                a.string())
                .code == 0);
    const json report = json::parse(slurp(a / "report.json"));
    const json cfg = report.at("provenance").at("config");
    CHECK(cfg.at("base_seed") == 99);
    REQUIRE(run("simulate --config " + write_config("prov_again", cfg).string() + " --out " + b.string()).code == 0);
    CHECK(slurp(a / "run.csv") == slurp(b / "run.csv"));
    CHECK(json::parse(slurp(b / "report.json")).at("provenance").at("config_hash") ==
          report.at("provenance").at("config_hash"));
}

TEST_CASE("doubling replicates shrinks the standard error by about sqrt 2") {
    const RunReport small = simulate(parse_config(feller(0.0, 2000, 21)), 0);
    const RunReport big = simulate(parse_config(feller(0.0, 4000, 22)), 0);
    const double ratio = small.rows.back().se / big.rows.back().se;
    CHECK(ratio == doctest::Approx(std::sqrt(2.0)).epsilon(0.15));
}

TEST_CASE("compare verdicts") {
    const fs::path self = write_config("cmp_self", feller(0.0, 500));
    CHECK(run("compare --config " + self.string() + " --config " + self.string()).code == 0);

    const fs::path re = write_config("cmp_re", feller(0.0, 2000, 31, "feller-re"));
    const fs::path fe = write_config("cmp_fe", feller(0.0, 2000, 32));
    CHECK(run("compare --config " + fe.string() + " --config " + re.string()).code == 0);

    const fs::path b0 = write_config("cmp_b0", feller(0.0, 10000, 33));
    const fs::path b5 = write_config("cmp_b5", feller(0.5, 10000, 34));
    const Result r = run("compare --config " + b0.string() + " --config " + b5.string());
    CHECK(r.code == 1);
    CHECK(r.out.find("FAIL") != std::string::npos);

    json longer = feller(0.0, 100);
    longer["horizon"] = 2.0;
    CHECK(run("compare --config " + self.string() + " --config " + write_config("cmp_long", longer).string()).code == 2);
}

TEST_CASE("validate-schedule exit codes") {
    const Result ok = run("validate-schedule --config " + write_config("val_ok", lookdown_config()).string());
    CHECK(ok.code == 0);
    CHECK(ok.out.find("PASS") != std::string::npos);

    json kj = lookdown_config();
    kj["scaling"] = {{"preset", "custom"}, {"theorem", "fluctuating"}, {"J", {1.0, 0.85}}, {"K", {1.0, 0.85}},
                     {"S", {1.0, 0.1}}, {"Shat", {1.0, 0.05}}, {"s", {1.0, -0.05}}};
    const Result bad = run("validate-schedule --config " + write_config("val_kj", kj).string());
    CHECK(bad.code == 1);
    CHECK(bad.out.find("K/J -> 0") != std::string::npos);
}

TEST_CASE("diagnose-poisson") {
    const Result r = run("diagnose-poisson --config " + write_config("diag", lookdown_config()).string());
    CHECK(r.code == 0);
    CHECK(r.out.find("gaps") != std::string::npos);
    CHECK(run("diagnose-poisson --config " + write_config("diag_feller", feller(0.0, 10)).string()).code == 2);
}
