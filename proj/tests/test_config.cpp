#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "grasp/config.hpp"

using namespace grasp;
using namespace grasp::config;

namespace {

namespace fs = std::filesystem;

}  // namespace

TEST_CASE("default config is surprise-valid and self-consistent") {
    const auto cfg = default_config();
    CHECK(cfg.surprise_ok);
    CHECK(cfg.fingerprint.size() == 16);
    CHECK(cfg.fingerprint == fingerprint_of(cfg));
}

TEST_CASE("canonical text round-trips through the parser") {
    const auto cfg = default_config();
    const auto reparsed = parse_config(canonical_text(cfg));
    CHECK(reparsed.fingerprint == cfg.fingerprint);
    CHECK(canonical_text(reparsed) == canonical_text(cfg));
}

TEST_CASE("partial documents take defaults; values override") {
    const auto cfg = parse_config(R"({"assumption": {"alpha_mean": 250.0, "tau": 2.0}})");
    CHECK(cfg.alpha_mean == 250.0);
    CHECK(cfg.tau == 2.0);
    CHECK(cfg.d_out == 32);  // untouched default
    CHECK(cfg.fingerprint != default_config().fingerprint);
}

TEST_CASE("unknown keys are hard errors naming the path") {
    try {
        parse_config(R"({"assumption": {"alpha_men": 100.0}})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("assumption.alpha_men") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config(R"({"extra_section": {}})"), ConfigError);
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
    CHECK_THROWS_AS(parse_config("[1,2,3]"), ConfigError);
}

TEST_CASE("value validation") {
    CHECK_THROWS_AS(parse_config(R"({"assumption": {"alpha_mean": -5.0}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"assumption": {"alpha_jitter": 1.0}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"assumption": {"r_t": 100}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"optimizer": {"kind": "lbfgs"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"adapter": {"mode": "full"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"activation": "relu"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"seeds": []})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"optimizer": {"lr": "fast"}})"), ConfigError);
}

TEST_CASE("surprise flag recorded at load time") {
    const auto weak = parse_config(R"({"assumption": {"alpha_mean": 11.0, "tau": 50.0}})");
    // alpha >= 10*mu_frob holds but alpha < 10*tau/sqrt(n) = 15.8.
    CHECK(!weak.surprise_ok);
    const auto strong = parse_config(R"({"data": {"n": 10000}, "assumption": {"alpha_mean": 11.0, "tau": 50.0}})");
    CHECK(!strong.surprise_ok ==
          !(11.0 >= 10.0 * 50.0 / 100.0));  // 10*tau/sqrt(10000) = 5 -> valid
    CHECK(strong.surprise_ok);
}

TEST_CASE("fingerprints are sensitive to every section") {
    const auto base = default_config();
    const auto seeds = parse_config(R"({"seeds": [2]})");
    CHECK(seeds.fingerprint != base.fingerprint);
    const auto opt = parse_config(R"({"optimizer": {"lr": 0.001}})");
    CHECK(opt.fingerprint != base.fingerprint);
}

TEST_CASE("load_config reads files and reports the path on failure") {
    const fs::path dir = fs::temp_directory_path() / "grasp-config-test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path good = dir / "good.json";
    std::ofstream(good) << R"({"dims": {"d_out": 32, "d_in": 32}})";
    const auto cfg = load_config(good);
    CHECK(cfg.d_out == 32);

    CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
    const fs::path bad = dir / "bad.json";
    std::ofstream(bad) << "{broken";
    try {
        load_config(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bad.json") != std::string::npos);
    }
}

TEST_CASE("train config mapping") {
    auto cfg = parse_config(R"({"dims": {"d_out": 16, "d_in": 16, "sites": 3}})");
    const auto tc = to_train_config(cfg, 7);
    CHECK(tc.model.layer_dims == std::vector<int>{16, 16, 16, 16});
    CHECK(tc.seed == 7);
    CHECK(tc.fingerprint == cfg.fingerprint);

    const auto rect = parse_config(R"({"dims": {"d_out": 16, "d_in": 8}, "assumption": {"r_t": 4}, "data": {"task_rank": 4}})");
    CHECK_THROWS_AS(to_train_config(rect, 1), ConfigError);
}

TEST_CASE("sweep grids from config") {
    const auto cfg = parse_config(
        R"({"sweep": {"n_values": [100, 200], "r_t_values": [4, 8]}})");
    CHECK(cfg.sweep_present);
    const auto grid = identify_grid_from(cfg);
    CHECK(grid.n_values == std::vector<std::int64_t>{100, 200});
    CHECK(grid.r_t_values == std::vector<int>{4, 8});
    CHECK(grid.alpha_means == std::vector<double>{100.0});  // falls back to config point

    const auto plain = default_config();
    CHECK(!plain.sweep_present);
    const auto sel = selectivity_grid_from(plain);
    // Default axis is clipped to the configured dimensions (d = 32 here).
    CHECK(sel.r_t_values == std::vector<int>{4, 16});
    const auto wide = parse_config(R"({"dims": {"d_out": 64, "d_in": 64}})");
    CHECK(selectivity_grid_from(wide).r_t_values == std::vector<int>{4, 16, 64});
}

TEST_CASE("optimizer schedule keys") {
    const auto cfg = parse_config(
        R"({"optimizer": {"schedule": "linear", "warmup_steps": 50}})");
    CHECK(cfg.schedule == grasp::trainkit::LrSchedule::linear_decay);
    CHECK(cfg.warmup_steps == 50);
    CHECK_THROWS_AS(parse_config(R"({"optimizer": {"schedule": "cosine"}})"),
                    ConfigError);
}
