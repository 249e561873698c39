#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grasp/linalg.hpp"
#include "grasp/project.hpp"
#include "grasp/synthgrad.hpp"

namespace grasp::trainkit {

enum class Activation { identity, tanh };
enum class AdapterMode { joint, factored };
enum class OptimizerKind { sgd, adamw };
enum class StageTag { naive, projected };
enum class PretrainedKind { identity, gaussian };

const char* to_string(Activation a);
const char* to_string(AdapterMode m);
const char* to_string(OptimizerKind k);
const char* to_string(StageTag s);

// One site of the chain. The pretrained weight w0 is frozen; only the
// adapter trains. In joint mode the adapter is the full update delta_w
// (projection constraints hold exactly); in factored mode it is the product
// lora_scale * b * a and the constraint holds to first order only.
struct Site {
    linalg::Matrix w0;
    linalg::Matrix delta_w;  // joint mode
    linalg::Matrix a;        // factored: rank x d_in
    linalg::Matrix b;        // factored: d_out x rank
};

struct ModelConfig {
    // layer_dims has sites+1 entries; site l maps layer_dims[l] ->
    // layer_dims[l+1]. Activation sits between sites, not after the last.
    std::vector<int> layer_dims = {32, 32, 32, 32, 32};
    int adapter_rank = 4;
    Activation activation = Activation::identity;
    AdapterMode mode = AdapterMode::joint;
    double lora_scale = 1.0;
    PretrainedKind pretrained = PretrainedKind::identity;
    double pretrained_scale = 0.0;  // entry std of the gaussian part of w0
    double init_scale = 0.01;       // factored-mode A init std

    int num_sites() const { return static_cast<int>(layer_dims.size()) - 1; }
};

struct ToyModel {
    ModelConfig cfg;
    std::vector<Site> sites;

    int num_sites() const { return static_cast<int>(sites.size()); }
    linalg::Matrix adapter_delta(int l) const;     // effective Delta W_l
    linalg::Matrix effective_weight(int l) const;  // w0 + Delta W_l
    std::pair<int, int> site_shape(int l) const;
};

// Adapters start at exact zero product: joint delta_w = 0; factored b = 0
// with a small Gaussian a, so gradients are nonzero at step one.
ToyModel make_toy_model(const ModelConfig& cfg, std::uint64_t seed);

// Regression data with a planted spurious correlation: train targets carry
// an extra beta * (v_s . x) u_s term that the decorrelated eval split lacks.
// The pretrained reference map is the (rectangular) identity, matching the
// identity-pretrained toy model; the task improvement is a rank-task_rank
// equal-mode matrix of Frobenius norm task_frob.
struct SpuriousDataset {
    linalg::Matrix train_inputs;   // d_in x n_train, one example per column
    linalg::Matrix train_targets;  // d_out x n_train
    linalg::Matrix eval_inputs;
    linalg::Matrix eval_targets;
    double spurious_strength = 0.0;  // beta, signed
    synthgrad::SpuriousSpec spurious_dirs;
    linalg::Matrix task_improvement;
};

SpuriousDataset make_dataset(int d_in, int d_out, int n_train, int n_eval,
                             int task_rank, double beta, std::uint64_t seed,
                             double task_frob = 1.0);

std::vector<double> forward(const ToyModel& model, std::span<const double> x);
linalg::Matrix forward_batch(const ToyModel& model, const linalg::Matrix& x);

// Mean-squared-error batch loss, (1/B) sum_i 0.5 |y_hat_i - y_i|^2, and its
// exact reverse-mode gradients with respect to every effective site weight.
struct BatchGradients {
    std::vector<linalg::Matrix> site_grads;
    double loss = 0.0;
};

BatchGradients site_gradients(const ToyModel& model, const linalg::Matrix& x_batch,
                              const linalg::Matrix& y_batch);

struct OptimizerHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
};

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::sgd;
    OptimizerHyper hyper;
    std::int64_t step_count = 0;
    // AdamW moment buffers, shaped like the trainable parameters.
    std::vector<linalg::Matrix> m1, m2;          // joint: per-site delta_w moments
    std::vector<linalg::Matrix> m1_a, m2_a;      // factored
    std::vector<linalg::Matrix> m1_b, m2_b;
};

OptimizerState make_optimizer(OptimizerKind kind, const OptimizerHyper& hyper,
                              const ToyModel& model);

// W-space gradients are projected (when a plan is given) before anything
// else sees them; factored mode then maps the projected gradient to factor
// gradients by the product rule.
void sgd_step(OptimizerState& state, ToyModel& model,
              std::span<const linalg::Matrix> w_grads,
              const project::ProjectionPlan* plan = nullptr);
void adamw_step(OptimizerState& state, ToyModel& model,
                std::span<const linalg::Matrix> w_grads,
                const project::ProjectionPlan* plan = nullptr);
void optimizer_step(OptimizerState& state, ToyModel& model,
                    std::span<const linalg::Matrix> w_grads,
                    const project::ProjectionPlan* plan = nullptr);

struct CheckpointSite {
    int d_out = 0;
    int d_in = 0;
    linalg::Matrix delta_w;  // joint payload
    linalg::Matrix a, b;     // factored payload
};

struct Checkpoint {
    StageTag stage = StageTag::naive;
    AdapterMode mode = AdapterMode::joint;
    int adapter_rank = 0;
    double lora_scale = 1.0;
    std::int64_t step_count = 0;
    std::string config_fingerprint;
    std::vector<CheckpointSite> sites;
    std::vector<project::ProbePair> probes;  // exactly one per site iff projected

    std::vector<linalg::Matrix> deltas() const;  // effective Delta W per site
};

enum class LrSchedule { constant, linear_decay };

struct TrainConfig {
    ModelConfig model;
    int n_train = 512;
    int n_eval = 512;
    int task_rank = 8;
    double beta = 0.5;
    double task_frob = 0.05;
    OptimizerKind optimizer = OptimizerKind::sgd;
    OptimizerHyper hyper;
    // Learning-rate schedule: linear ramp over warmup_steps, then either
    // constant or linear decay to zero at the end of training. AdamW keeps
    // taking near-full-size steps as gradients vanish, so its runs want
    // warmup plus decay to settle.
    int warmup_steps = 0;
    LrSchedule schedule = LrSchedule::constant;
    int epochs = 300;
    int batch_size = 512;  // equals n_train: full-batch gradient descent
    std::uint64_t seed = 1;
    std::string fingerprint;  // echoed into checkpoints
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<double> epoch_loss;    // mean train loss per epoch
    std::vector<double> h_initial;     // per-site h_l(theta_0), projected runs
    std::vector<double> max_h_drift;   // per-site max_t |h_l(theta_t) - h_l(theta_0)|
};

// The dataset a training run sees, reconstructable from the config alone.
SpuriousDataset make_train_dataset(const TrainConfig& cfg);

// Algorithm stage 1: plain fine-tune from zero adapters.
TrainResult train_naive(const TrainConfig& cfg);

// Algorithm stage 3: adapters re-initialized, every step's W-space gradients
// projected against the frozen probes (one per site).
TrainResult train_projected(const TrainConfig& cfg,
                            std::vector<project::ProbePair> probes);

// Stage 2: probes from a naive checkpoint's per-site updates.
std::vector<project::ProbePair> extract_probes(const Checkpoint& naive);

double eval_loss(const ToyModel& model, const linalg::Matrix& inputs,
                 const linalg::Matrix& targets);
// Mean squared residual component along the planted output direction u_s,
// measured on the decorrelated eval split.
double spurious_energy(const ToyModel& model, const SpuriousDataset& data);

// Rebuild a model that carries a checkpoint's adapters (w0 from cfg).
ToyModel model_from_checkpoint(const ModelConfig& cfg, std::uint64_t seed,
                               const Checkpoint& ckpt);

}  // namespace grasp::trainkit
