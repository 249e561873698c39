#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "grasp/identify.hpp"
#include "grasp/metrics.hpp"
#include "grasp/trainkit.hpp"

namespace grasp::config {

// Experiment-level configuration, loaded from a JSON document with a fixed
// schema. Unknown keys are hard errors: a typo in an assumption parameter
// would silently invalidate every bound check downstream. Missing keys
// take the defaults below; the fingerprint hashes the fully-canonicalized
// document, so two configs agree iff their fingerprints do.
struct ExperimentConfig {
    // dims
    int d_out = 32;
    int d_in = 32;
    int sites = 4;
    int adapter_rank = 4;
    // data (toy training corpus)
    std::int64_t n = 1000;  // gradient-stream length N
    int n_train = 512;
    int n_eval = 512;
    double beta = 0.3;
    int task_rank = 8;
    double task_frob = 0.03;
    // assumption (synthetic stream parameters)
    double alpha_mean = 100.0;
    double alpha_jitter = 0.0;
    double mu_frob = 1.0;
    int r_t = 16;
    double tau = 1.0;
    bool orthogonal_task = false;
    double noise_const = 3.0;
    // optimizer
    trainkit::OptimizerKind optimizer = trainkit::OptimizerKind::sgd;
    double lr = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
    int warmup_steps = 0;
    trainkit::LrSchedule schedule = trainkit::LrSchedule::constant;
    int epochs = 300;
    int batch_size = 512;
    // adapter / model
    trainkit::AdapterMode adapter_mode = trainkit::AdapterMode::joint;
    double lora_scale = 1.0;
    double init_scale = 0.01;
    trainkit::Activation activation = trainkit::Activation::identity;
    // sweep axes; when the section is absent each command applies its own
    // default axes, when present the arrays are used verbatim (and an empty
    // resolved grid is an error, never an empty output file)
    bool sweep_present = false;
    std::vector<std::int64_t> sweep_n;
    std::vector<int> sweep_r_t;
    std::vector<double> sweep_alpha_means;
    std::vector<double> sweep_tau;
    // run control
    std::vector<std::uint64_t> seeds = {1};
    std::string output_dir = ".";

    // derived at load time, not part of the document
    bool surprise_ok = false;
    std::string fingerprint;
};

ExperimentConfig default_config();

// Parse + validate + canonicalize + fingerprint.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// The canonicalized document: every key present, sorted, shortest
// round-trip numbers. Hashing this text yields the fingerprint.
std::string canonical_text(const ExperimentConfig& cfg);
std::string fingerprint_of(const ExperimentConfig& cfg);

trainkit::TrainConfig to_train_config(const ExperimentConfig& cfg, std::uint64_t seed);
synthgrad::SpuriousSpec spurious_from(const ExperimentConfig& cfg, std::uint64_t seed);
synthgrad::TaskSpec task_from(const ExperimentConfig& cfg, std::uint64_t seed);
identify::IdentifySweepGrid identify_grid_from(const ExperimentConfig& cfg);
metrics::SelectivityGrid selectivity_grid_from(const ExperimentConfig& cfg);

}  // namespace grasp::config
