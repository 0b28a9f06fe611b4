#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fracheat/cli.hpp"
#include "fracheat/config.hpp"

using namespace fracheat;
namespace fs = std::filesystem;

namespace {

fs::path temp_root() {
    fs::path p = fs::temp_directory_path() / "fracheat_cli_tests";
    fs::create_directories(p);
    return p;
}

std::string write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::string tiny_config = R"({
  "n_modes": 12, "time_steps": 64, "n_paths": 8, "seed": 7,
  "malliavin_stride": 16, "malliavin_summaries": true
})";

}  // namespace

TEST_CASE("config defaults and validation") {
    ExperimentConfig def = config_from_json(nlohmann::json::object());
    CHECK(def.hurst == 0.75);
    CHECK(def.solver.gamma == 0.70);
    CHECK(def.solver.kappa == 0.45);
    CHECK(def.solver.n_modes == 64);
    CHECK(def.solver.time_steps == 1024);
    CHECK(def.solver.horizon == 1.0);
    CHECK(def.n_paths == 1000);
    CHECK(def.seed == 42);
    CHECK(def.lambda0 == 0.5);
    CHECK(def.kernel == "averaging");

    // round trip: emit defaults, re-parse, identical JSON
    nlohmann::json dumped = config_to_json(def);
    ExperimentConfig again = config_from_json(dumped);
    CHECK(config_to_json(again) == dumped);

    // the Young regime needs H > 1/2; smaller Hurst indices are rejected
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"hurst", 0.4}}), ConfigError);
    try {
        config_from_json(nlohmann::json{{"hurst", 0.4}});
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("hurst") != std::string::npos);
    }

    // kappa window (max(1-gamma, 1/4), 1/2) is named on violation
    try {
        config_from_json(nlohmann::json{{"kappa", 0.2}});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("kappa") != std::string::npos);
    }

    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"mystery_key", 1}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"n_paths", 1}}), ConfigError);
}

TEST_CASE("config file parsing") {
    const fs::path dir = temp_root();
    const std::string good = write_file(dir / "good.json", tiny_config);
    ExperimentConfig cfg = parse_config(good);
    CHECK(cfg.solver.n_modes == 12);
    CHECK(cfg.n_paths == 8);

    const std::string bad = write_file(dir / "bad.json", "{\n  \"hurst\": 0.75,,\n}");
    try {
        parse_config(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("parse-error") != std::string::npos);
        CHECK(msg.find("line") != std::string::npos);  // position diagnostics
    }

    CHECK_THROWS_AS(parse_config((dir / "missing.json").string()), ConfigError);
}

TEST_CASE("cli subcommands run and are byte-deterministic") {
    const fs::path dir = temp_root();
    const std::string cfg = write_file(dir / "tiny.json", tiny_config);

    auto run_in = [&](const std::string& sub, const fs::path& out,
                      std::vector<std::string> extra = {}) {
        fs::create_directories(out);
        std::vector<std::string> args = {sub, "--config", cfg, "--out", out.string()};
        for (auto& e : extra) args.push_back(e);
        return run_cli(args);
    };

    SECTION("density and inverse moments, rerun byte-identical") {
        CHECK(run_in("density", dir / "d1") == 0);
        CHECK(run_in("density", dir / "d2") == 0);
        CHECK(slurp(dir / "d1" / "density.csv") == slurp(dir / "d2" / "density.csv"));
        CHECK(slurp(dir / "d1" / "inverse_moments.csv") ==
              slurp(dir / "d2" / "inverse_moments.csv"));
        // manifest header line present
        CHECK(slurp(dir / "d1" / "density.csv").substr(0, 1) == "#");
        const std::string header = slurp(dir / "d1" / "density.csv");
        CHECK(header.find("point,density") != std::string::npos);
    }

    SECTION("malliavin matrix schema") {
        CHECK(run_in("malliavin", dir / "m1") == 0);
        const std::string body = slurp(dir / "m1" / "malliavin_matrix.csv");
        CHECK(body.find("s,comp_1") != std::string::npos);
        CHECK(run_in("malliavin", dir / "m2") == 0);
        CHECK(body == slurp(dir / "m2" / "malliavin_matrix.csv"));
    }

    SECTION("sample-fbm writes one file per path") {
        CHECK(run_in("sample-fbm", dir / "f1") == 0);
        CHECK(fs::exists(dir / "f1" / "fbm_path_0000.csv"));
        CHECK(fs::exists(dir / "f1" / "fbm_path_0007.csv"));
        const std::string body = slurp(dir / "f1" / "fbm_path_0000.csv");
        CHECK(body.find("time,comp_1") != std::string::npos);
    }

    SECTION("solve in coefficient and grid-value modes") {
        CHECK(run_in("solve", dir / "s1") == 0);
        CHECK(slurp(dir / "s1" / "solution.csv").find("time,coeff_1") != std::string::npos);
        CHECK(run_in("solve", dir / "s2", {"--values", "grid"}) == 0);
        CHECK(slurp(dir / "s2" / "solution.csv").find("time,value_1") != std::string::npos);
    }

    SECTION("verify-bounds and convergence") {
        CHECK(run_in("verify-bounds", dir / "b1") == 0);
        const std::string body = slurp(dir / "b1" / "bounds_report.csv");
        CHECK(body.find("bound_id") != std::string::npos);
        CHECK(body.find("poly-4.10") != std::string::npos);
        CHECK(body.find("sewing-2.11") != std::string::npos);
        CHECK(run_in("convergence", dir / "c1") == 0);
        CHECK(slurp(dir / "c1" / "convergence.csv").find("fitted_order") !=
              std::string::npos);
    }

    SECTION("seed override changes outputs") {
        CHECK(run_in("solve", dir / "o1") == 0);
        fs::create_directories(dir / "o2");
        CHECK(run_cli({"solve", "--config", cfg, "--out", (dir / "o2").string(), "--seed",
                       "31"}) == 0);
        CHECK(slurp(dir / "o1" / "solution.csv") != slurp(dir / "o2" / "solution.csv"));
    }
}

TEST_CASE("threads resolution honors the environment fallback") {
    ::setenv("FRACHEAT_THREADS", "3", 1);
    CHECK(resolve_threads(0) == 3);
    CHECK(resolve_threads(5) == 5);  // explicit request wins
    ::unsetenv("FRACHEAT_THREADS");
    CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("cli error paths") {
    const fs::path dir = temp_root();
    const std::string cfg = write_file(dir / "tiny2.json", tiny_config);

    // unwritable output directory -> io-error, nonzero exit
    write_file(dir / "blocker", "not a directory");
    CHECK(run_cli({"solve", "--config", cfg, "--out", (dir / "blocker" / "sub").string()}) ==
          1);

    // invalid config -> nonzero exit
    const std::string bad = write_file(dir / "badh.json", R"({"hurst": 0.4})");
    CHECK(run_cli({"solve", "--config", bad}) == 1);

    // unknown subcommand -> CLI parse error (nonzero)
    CHECK(run_cli({"frobnicate"}) != 0);
}
