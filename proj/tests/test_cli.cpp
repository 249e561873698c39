#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#ifndef GRASP_CLI_PATH
#error "GRASP_CLI_PATH must point at the built CLI binary"
#endif

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string output;
};

// Runs the CLI with stdout+stderr captured to a file.
RunResult run_cli(const std::string& args, const fs::path& scratch) {
    static int counter = 0;
    const fs::path log = scratch / ("cli-log-" + std::to_string(counter++) + ".txt");
    const std::string cmd =
        std::string(GRASP_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult result;
#ifdef _WIN32
    result.exit_code = status;
#else
    result.exit_code = WEXITSTATUS(status);
#endif
    std::ifstream in(log);
    result.output.assign((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
    return result;
}

fs::path scratch_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

// Small config so CLI integration stays fast.
const char* kTinyConfig = R"({
  "dims": {"d_out": 16, "d_in": 16, "sites": 2, "adapter_rank": 4},
  "data": {"n": 64, "n_train": 96, "n_eval": 48, "beta": 0.3, "task_rank": 4, "task_frob": 0.03},
  "assumption": {"alpha_mean": 100.0, "mu_frob": 1.0, "r_t": 4, "tau": 1.0},
  "optimizer": {"kind": "sgd", "lr": 0.1, "epochs": 40, "batch_size": 96},
  "seeds": [3]
})";

}  // namespace

TEST_CASE("gen is deterministic and refuses accidental overwrite") {
    const auto dir = scratch_dir("grasp-cli-gen");
    const auto cfg = dir / "cfg.json";
    write_file(cfg, kTinyConfig);

    const auto a = run_cli("gen --config " + cfg.string() + " --out " + (dir / "a").string(), dir);
    REQUIRE(a.exit_code == 0);
    CHECK(a.output.find("wrote") != std::string::npos);
    const auto b = run_cli("gen --config " + cfg.string() + " --out " + (dir / "b").string(), dir);
    REQUIRE(b.exit_code == 0);

    CHECK(file_bytes(dir / "a" / "stream_3.grasp") == file_bytes(dir / "b" / "stream_3.grasp"));

    const auto overwrite =
        run_cli("gen --config " + cfg.string() + " --out " + (dir / "a").string(), dir);
    CHECK(overwrite.exit_code == 4);
    CHECK(overwrite.output.find("force") != std::string::npos);

    const auto forced = run_cli(
        "gen --config " + cfg.string() + " --out " + (dir / "a").string() + " --force", dir);
    CHECK(forced.exit_code == 0);

    // N = 1 produces a valid single-sample stream.
    const auto single_cfg = dir / "single.json";
    write_file(single_cfg, R"({"data": {"n": 1}, "seeds": [4]})");
    const auto single = run_cli(
        "gen --config " + single_cfg.string() + " --out " + (dir / "one").string(), dir);
    REQUIRE(single.exit_code == 0);
    const auto ident = run_cli("identify " + (dir / "one" / "stream_4.grasp").string(), dir);
    CHECK(ident.exit_code == 0);
    CHECK(ident.output.find("n=1") != std::string::npos);
}

TEST_CASE("identify prints probe, alignment and bound for a stream") {
    const auto dir = scratch_dir("grasp-cli-identify");
    const auto cfg = dir / "cfg.json";
    write_file(cfg, kTinyConfig);
    REQUIRE(run_cli("gen --config " + cfg.string() + " --out " + dir.string(), dir)
                .exit_code == 0);

    const auto r = run_cli("identify " + (dir / "stream_3.grasp").string(), dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("sigma_1") != std::string::npos);
    CHECK(r.output.find("alignment vs planted truth") != std::string::npos);
    CHECK(r.output.find("bound_value") != std::string::npos);
    CHECK(r.output.find("alignment >= bound") != std::string::npos);
}

TEST_CASE("identify reports malformed files with a byte offset") {
    const auto dir = scratch_dir("grasp-cli-malformed");
    const auto junk = dir / "junk.grasp";
    write_file(junk, "GRASP-CONTAINER v1\n12\n{\"kind\": ??}\nXXXX");
    const auto r = run_cli("identify " + junk.string(), dir);
    CHECK(r.exit_code == 4);
    CHECK(r.output.find("byte offset") != std::string::npos);

    const auto missing = run_cli("identify " + (dir / "nope.grasp").string(), dir);
    CHECK(missing.exit_code == 4);
}

TEST_CASE("train naive then grasp; identify and leakage on the checkpoints") {
    const auto dir = scratch_dir("grasp-cli-train");
    const auto cfg = dir / "cfg.json";
    write_file(cfg, kTinyConfig);

    const auto naive = run_cli("train --config " + cfg.string() + " --mode naive --out " +
                                   dir.string(),
                               dir);
    REQUIRE(naive.exit_code == 0);
    CHECK(fs::exists(dir / "naive_3.grasp"));
    CHECK(naive.output.find("naive:") != std::string::npos);

    // One-command pipeline (reusing the saved naive checkpoint).
    const auto grasp_run = run_cli("train --config " + cfg.string() +
                                       " --mode grasp --naive-ckpt " +
                                       (dir / "naive_3.grasp").string() + " --out " +
                                       dir.string() + " --force",
                                   dir);
    REQUIRE(grasp_run.exit_code == 0);
    CHECK(fs::exists(dir / "projected_3.grasp"));
    CHECK(grasp_run.output.find("constraint") != std::string::npos);

    const auto ident = run_cli("identify " + (dir / "naive_3.grasp").string(), dir);
    REQUIRE(ident.exit_code == 0);
    CHECK(ident.output.find("alignment omitted") != std::string::npos);

    const auto leak = run_cli("leakage " + (dir / "naive_3.grasp").string() + " " +
                                  (dir / "projected_3.grasp").string() + " --out " +
                                  dir.string(),
                              dir);
    REQUIRE(leak.exit_code == 0);
    CHECK(leak.output.find("reduction") != std::string::npos);
    CHECK(fs::exists(dir / "leakage_report.csv"));

    // Identical checkpoints compare at reduction exactly 1.
    const auto self_leak = run_cli("leakage " + (dir / "naive_3.grasp").string() + " " +
                                       (dir / "naive_3.grasp").string() + " --out -",
                                   dir);
    REQUIRE(self_leak.exit_code == 0);
    CHECK(self_leak.output.find("reduction: mean=1 median=1") != std::string::npos);

    // A projected checkpoint against itself sits at the numerical-zero rho
    // floor; reductions are reported as ">=" bounds, not divisions by ~0.
    const auto saturated = run_cli("leakage " + (dir / "projected_3.grasp").string() +
                                       " " + (dir / "projected_3.grasp").string() +
                                       " --out -",
                                   dir);
    REQUIRE(saturated.exit_code == 0);
    CHECK(saturated.output.find(">=") != std::string::npos);

    // grasp mode without a naive checkpoint runs the full pipeline itself.
    const auto pipeline = run_cli("train --config " + cfg.string() +
                                      " --mode grasp --out " + (dir / "p2").string(),
                                  dir);
    REQUIRE(pipeline.exit_code == 0);
    CHECK(fs::exists(dir / "p2" / "naive_3.grasp"));
    CHECK(fs::exists(dir / "p2" / "projected_3.grasp"));
    // Same config and seed: the checkpoints match the explicit two-step run.
    CHECK(file_bytes(dir / "p2" / "naive_3.grasp") == file_bytes(dir / "naive_3.grasp"));
    CHECK(file_bytes(dir / "p2" / "projected_3.grasp") ==
          file_bytes(dir / "projected_3.grasp"));
}

TEST_CASE("sweep: identify CSV, empty grid error, surprise-violation error") {
    const auto dir = scratch_dir("grasp-cli-sweep");
    const auto cfg = dir / "cfg.json";
    write_file(cfg, R"({
      "dims": {"d_out": 16, "d_in": 16},
      "data": {"n": 64},
      "assumption": {"alpha_mean": 100.0, "r_t": 4, "tau": 1.0},
      "sweep": {"n_values": [50, 100]},
      "seeds": [1, 2]
    })");

    const auto r = run_cli("sweep --kind identify --config " + cfg.string() + " --out " +
                               dir.string(),
                           dir);
    REQUIRE(r.exit_code == 0);
    const auto csv = file_bytes(dir / "identify_sweep.csv");
    CHECK(csv.rfind("n,r_t,alpha_mean,tau,seed,alignment,bound_value,surprise_valid\n",
                    0) == 0);
    CHECK(csv.find("\n50,") != std::string::npos);
    CHECK(csv.find("\n100,") != std::string::npos);

    // Deterministic re-run writes identical bytes.
    const auto again = run_cli("sweep --kind identify --config " + cfg.string() +
                                   " --out " + (dir / "again").string(),
                               dir);
    REQUIRE(again.exit_code == 0);
    CHECK(file_bytes(dir / "again" / "identify_sweep.csv") == csv);

    const auto empty_cfg = dir / "empty.json";
    write_file(empty_cfg, R"({"sweep": {"n_values": []}})");
    const auto empty = run_cli("sweep --kind identify --config " + empty_cfg.string() +
                                   " --out " + dir.string(),
                               dir);
    CHECK(empty.exit_code == 2);
    CHECK(empty.output.find("empty grid") != std::string::npos);

    const auto invalid_cfg = dir / "invalid.json";
    write_file(invalid_cfg,
               R"({"assumption": {"alpha_mean": 5.0}, "sweep": {"n_values": [50]}})");
    const auto invalid = run_cli("sweep --kind identify --config " +
                                     invalid_cfg.string() + " --out " + dir.string(),
                                 dir);
    CHECK(invalid.exit_code == 5);
    CHECK(invalid.output.find("surprise") != std::string::npos);
}

TEST_CASE("config errors exit with the config code") {
    const auto dir = scratch_dir("grasp-cli-config");
    const auto bad = dir / "bad.json";
    write_file(bad, R"({"assumption": {"alpha_men": 1.0}})");
    const auto r = run_cli("gen --config " + bad.string() + " --out " + dir.string(), dir);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("alpha_men") != std::string::npos);

    const auto unknown = run_cli("frobnicate", dir);
    CHECK(unknown.exit_code == 2);
}
