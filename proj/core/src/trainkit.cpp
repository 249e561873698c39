#include "grasp/trainkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "grasp/rng.hpp"

namespace grasp::trainkit {

const char* to_string(Activation a) {
    return a == Activation::identity ? "identity" : "tanh";
}
const char* to_string(AdapterMode m) {
    return m == AdapterMode::joint ? "joint" : "factored";
}
const char* to_string(OptimizerKind k) {
    return k == OptimizerKind::sgd ? "sgd" : "adamw";
}
const char* to_string(StageTag s) {
    return s == StageTag::naive ? "naive" : "projected";
}

namespace {

linalg::Matrix rectangular_identity(int rows, int cols) {
    linalg::Matrix m(rows, cols);
    for (int i = 0; i < std::min(rows, cols); ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

void validate_model_config(const ModelConfig& cfg) {
    if (cfg.layer_dims.size() < 2) {
        throw ParameterError("ModelConfig: need at least one site");
    }
    for (int d : cfg.layer_dims) {
        if (d <= 0) {
            throw ParameterError("ModelConfig: non-positive layer dimension");
        }
    }
    for (int l = 0; l < cfg.num_sites(); ++l) {
        const int d_out = cfg.layer_dims[static_cast<std::size_t>(l) + 1];
        const int d_in = cfg.layer_dims[static_cast<std::size_t>(l)];
        if (cfg.mode == AdapterMode::factored &&
            cfg.adapter_rank > std::min(d_out, d_in)) {
            throw ParameterError("ModelConfig: adapter_rank " +
                                 std::to_string(cfg.adapter_rank) +
                                 " exceeds min site dimension");
        }
    }
    if (cfg.mode == AdapterMode::factored && cfg.adapter_rank < 1) {
        throw ParameterError("ModelConfig: adapter_rank must be >= 1");
    }
    if (!(cfg.lora_scale > 0.0)) {
        throw ParameterError("ModelConfig: lora_scale must be positive");
    }
}

}  // namespace

linalg::Matrix ToyModel::adapter_delta(int l) const {
    const Site& s = sites[static_cast<std::size_t>(l)];
    if (cfg.mode == AdapterMode::joint) {
        return s.delta_w;
    }
    linalg::Matrix d = linalg::matmul(s.b, s.a);
    d *= cfg.lora_scale;
    return d;
}

linalg::Matrix ToyModel::effective_weight(int l) const {
    return sites[static_cast<std::size_t>(l)].w0 + adapter_delta(l);
}

std::pair<int, int> ToyModel::site_shape(int l) const {
    const Site& s = sites[static_cast<std::size_t>(l)];
    return {s.w0.rows(), s.w0.cols()};
}

ToyModel make_toy_model(const ModelConfig& cfg, std::uint64_t seed) {
    validate_model_config(cfg);
    ToyModel model;
    model.cfg = cfg;
    model.sites.reserve(static_cast<std::size_t>(cfg.num_sites()));
    for (int l = 0; l < cfg.num_sites(); ++l) {
        const int d_in = cfg.layer_dims[static_cast<std::size_t>(l)];
        const int d_out = cfg.layer_dims[static_cast<std::size_t>(l) + 1];
        Site site;
        site.w0 = rectangular_identity(d_out, d_in);
        if (cfg.pretrained == PretrainedKind::gaussian && cfg.pretrained_scale > 0.0) {
            auto gen = rng::substream(seed, "pretrained", static_cast<std::uint64_t>(l));
            auto data = site.w0.data();
            for (double& x : data) {
                x += cfg.pretrained_scale * gen.gaussian();
            }
        }
        if (cfg.mode == AdapterMode::joint) {
            site.delta_w = linalg::Matrix(d_out, d_in);
        } else {
            site.a = linalg::Matrix(cfg.adapter_rank, d_in);
            site.b = linalg::Matrix(d_out, cfg.adapter_rank);
            auto gen = rng::substream(seed, "init-a", static_cast<std::uint64_t>(l));
            auto data = site.a.data();
            for (double& x : data) {
                x = cfg.init_scale * gen.gaussian();
            }
        }
        model.sites.push_back(std::move(site));
    }
    return model;
}

SpuriousDataset make_dataset(int d_in, int d_out, int n_train, int n_eval,
                             int task_rank, double beta, std::uint64_t seed,
                             double task_frob) {
    if (d_in <= 0 || d_out <= 0 || n_train <= 0 || n_eval <= 0) {
        throw ParameterError("make_dataset: sizes must be positive");
    }
    if (task_rank < 1 || task_rank > std::min(d_in, d_out)) {
        throw ParameterError("make_dataset: task_rank out of range");
    }

    auto spurious = synthgrad::SpuriousSpec::random(
        d_out, d_in, beta != 0.0 ? std::abs(beta) : 1.0, 0.0,
        rng::derive_seed(seed, "dataset-spurious"));
    auto improvement = synthgrad::make_task_mean(d_out, d_in, task_rank, task_frob,
                                                 rng::derive_seed(seed, "dataset-task"));

    const auto w0 = rectangular_identity(d_out, d_in);
    const auto w_star = w0 + improvement;

    auto fill_inputs = [&](const char* name, int n) {
        linalg::Matrix x(d_in, n);
        auto gen = rng::substream(seed, name);
        auto data = x.data();
        for (double& e : data) {
            e = gen.gaussian();
        }
        return x;
    };

    auto targets_for = [&](const linalg::Matrix& inputs, bool with_spurious) {
        linalg::Matrix y(d_out, inputs.cols());
        for (int c = 0; c < inputs.cols(); ++c) {
            double v_dot_x = 0.0;
            for (int j = 0; j < d_in; ++j) {
                v_dot_x += spurious.v_s[j] * inputs(j, c);
            }
            for (int i = 0; i < d_out; ++i) {
                double s = 0.0;
                for (int j = 0; j < d_in; ++j) {
                    s += w_star(i, j) * inputs(j, c);
                }
                if (with_spurious) {
                    s += beta * v_dot_x * spurious.u_s[i];
                }
                y(i, c) = s;
            }
        }
        return y;
    };

    auto train_inputs = fill_inputs("dataset-train-x", n_train);
    auto eval_inputs = fill_inputs("dataset-eval-x", n_eval);
    auto train_targets = targets_for(train_inputs, true);
    auto eval_targets = targets_for(eval_inputs, false);
    return SpuriousDataset{
        std::move(train_inputs),  std::move(train_targets), std::move(eval_inputs),
        std::move(eval_targets),  beta,                     std::move(spurious),
        std::move(improvement),
    };
}

namespace {

struct ForwardTrace {
    // post[l] is the input fed to site l; post[num_sites] is the output.
    std::vector<linalg::Matrix> post;
    // pre[l] is site l's raw output W_l * post[l] (before any activation).
    std::vector<linalg::Matrix> pre;
};

ForwardTrace run_forward(const ToyModel& model, const linalg::Matrix& x) {
    if (x.rows() != model.cfg.layer_dims.front()) {
        throw DimensionError("forward: input dim " + std::to_string(x.rows()) +
                             " vs model " + std::to_string(model.cfg.layer_dims.front()));
    }
    ForwardTrace trace;
    trace.post.push_back(x);
    for (int l = 0; l < model.num_sites(); ++l) {
        const auto w = model.effective_weight(l);
        linalg::Matrix z = linalg::matmul(w, trace.post.back());
        trace.pre.push_back(z);
        if (model.cfg.activation == Activation::tanh && l + 1 < model.num_sites()) {
            auto d = z.data();
            for (double& e : d) {
                e = std::tanh(e);
            }
        }
        trace.post.push_back(std::move(z));
    }
    return trace;
}

}  // namespace

linalg::Matrix forward_batch(const ToyModel& model, const linalg::Matrix& x) {
    return run_forward(model, x).post.back();
}

std::vector<double> forward(const ToyModel& model, std::span<const double> x) {
    linalg::Matrix col(static_cast<int>(x.size()), 1,
                       std::vector<double>(x.begin(), x.end()));
    const auto out = forward_batch(model, col);
    return std::vector<double>(out.data().begin(), out.data().end());
}

BatchGradients site_gradients(const ToyModel& model, const linalg::Matrix& x_batch,
                              const linalg::Matrix& y_batch) {
    if (x_batch.cols() != y_batch.cols()) {
        throw DimensionError("site_gradients: batch size mismatch");
    }
    if (y_batch.rows() != model.cfg.layer_dims.back()) {
        throw DimensionError("site_gradients: target dim mismatch");
    }
    if (x_batch.cols() == 0) {
        throw ParameterError("site_gradients: empty batch");
    }

    const auto trace = run_forward(model, x_batch);
    const int batch = x_batch.cols();
    const int num_sites = model.num_sites();

    // d(loss)/d(output) for loss = (1/B) sum 0.5 |y_hat - y|^2.
    linalg::Matrix delta = trace.post.back() - y_batch;
    double loss = 0.0;
    for (double e : delta.data()) {
        loss += 0.5 * e * e;
    }
    loss /= batch;
    delta *= 1.0 / batch;

    BatchGradients out;
    out.loss = loss;
    out.site_grads.resize(static_cast<std::size_t>(num_sites));

    for (int l = num_sites - 1; l >= 0; --l) {
        // delta currently holds d(loss)/d(pre[l]) once the activation at the
        // output of site l (if any) has been unwound.
        if (model.cfg.activation == Activation::tanh && l + 1 < num_sites) {
            // post[l+1] = tanh(pre[l]); d tanh = 1 - tanh^2.
            const auto& activated = trace.post[static_cast<std::size_t>(l) + 1];
            auto d = delta.data();
            auto h = activated.data();
            for (std::size_t i = 0; i < d.size(); ++i) {
                d[i] *= 1.0 - h[i] * h[i];
            }
        }
        out.site_grads[static_cast<std::size_t>(l)] =
            linalg::matmul(delta, linalg::transpose(trace.post[static_cast<std::size_t>(l)]));
        if (l > 0) {
            delta = linalg::matmul(linalg::transpose(model.effective_weight(l)), delta);
        }
    }
    return out;
}

OptimizerState make_optimizer(OptimizerKind kind, const OptimizerHyper& hyper,
                              const ToyModel& model) {
    OptimizerState state;
    state.kind = kind;
    state.hyper = hyper;
    if (kind == OptimizerKind::adamw) {
        for (int l = 0; l < model.num_sites(); ++l) {
            const Site& s = model.sites[static_cast<std::size_t>(l)];
            if (model.cfg.mode == AdapterMode::joint) {
                state.m1.emplace_back(s.delta_w.rows(), s.delta_w.cols());
                state.m2.emplace_back(s.delta_w.rows(), s.delta_w.cols());
            } else {
                state.m1_a.emplace_back(s.a.rows(), s.a.cols());
                state.m2_a.emplace_back(s.a.rows(), s.a.cols());
                state.m1_b.emplace_back(s.b.rows(), s.b.cols());
                state.m2_b.emplace_back(s.b.rows(), s.b.cols());
            }
        }
    }
    return state;
}

namespace {

void validate_step(const ToyModel& model, std::span<const linalg::Matrix> w_grads,
                   const project::ProjectionPlan* plan) {
    if (static_cast<int>(w_grads.size()) != model.num_sites()) {
        throw DimensionError("optimizer step: gradient count " +
                             std::to_string(w_grads.size()) + " vs sites " +
                             std::to_string(model.num_sites()));
    }
    for (int l = 0; l < model.num_sites(); ++l) {
        const auto [d_out, d_in] = model.site_shape(l);
        const auto& g = w_grads[static_cast<std::size_t>(l)];
        if (g.rows() != d_out || g.cols() != d_in) {
            throw DimensionError("optimizer step: gradient shape mismatch at site " +
                                 std::to_string(l));
        }
    }
    if (plan != nullptr) {
        if (static_cast<int>(plan->probes().size()) != model.num_sites()) {
            throw ParameterError("optimizer step: plan must carry one probe per site");
        }
        for (int l = 0; l < model.num_sites(); ++l) {
            if (plan->probes()[static_cast<std::size_t>(l)].site_id != l) {
                throw ParameterError("optimizer step: plan probes must be site-ordered");
            }
        }
    }
}

linalg::Matrix maybe_project(const linalg::Matrix& g, const project::ProjectionPlan* plan,
                             int site) {
    if (plan == nullptr) {
        return g;
    }
    return project::project_site_gradient(
               g, plan->probes()[static_cast<std::size_t>(site)])
        .g_projected;
}

// One AdamW parameter update with decoupled weight decay and bias correction.
void adamw_update(linalg::Matrix& param, const linalg::Matrix& grad, linalg::Matrix& m1,
                  linalg::Matrix& m2, const OptimizerHyper& h, std::int64_t t) {
    const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
    auto p = param.data();
    auto g = grad.data();
    auto m = m1.data();
    auto v = m2.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
        v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        p[i] -= h.lr * (m_hat / (std::sqrt(v_hat) + h.epsilon) + h.weight_decay * p[i]);
    }
}

}  // namespace

void sgd_step(OptimizerState& state, ToyModel& model,
              std::span<const linalg::Matrix> w_grads,
              const project::ProjectionPlan* plan) {
    validate_step(model, w_grads, plan);
    const double lr = state.hyper.lr;
    for (int l = 0; l < model.num_sites(); ++l) {
        const auto g = maybe_project(w_grads[static_cast<std::size_t>(l)], plan, l);
        Site& site = model.sites[static_cast<std::size_t>(l)];
        if (model.cfg.mode == AdapterMode::joint) {
            auto p = site.delta_w.data();
            auto gd = g.data();
            for (std::size_t i = 0; i < p.size(); ++i) {
                p[i] -= lr * gd[i];
            }
        } else {
            // dL/dA = scale * B^T G, dL/dB = scale * G A^T.
            linalg::Matrix ga = linalg::matmul(linalg::transpose(site.b), g);
            ga *= model.cfg.lora_scale;
            linalg::Matrix gb = linalg::matmul(g, linalg::transpose(site.a));
            gb *= model.cfg.lora_scale;
            auto pa = site.a.data();
            auto gad = ga.data();
            for (std::size_t i = 0; i < pa.size(); ++i) {
                pa[i] -= lr * gad[i];
            }
            auto pb = site.b.data();
            auto gbd = gb.data();
            for (std::size_t i = 0; i < pb.size(); ++i) {
                pb[i] -= lr * gbd[i];
            }
        }
    }
    ++state.step_count;
}

void adamw_step(OptimizerState& state, ToyModel& model,
                std::span<const linalg::Matrix> w_grads,
                const project::ProjectionPlan* plan) {
    if (state.kind != OptimizerKind::adamw) {
        throw ParameterError("adamw_step: optimizer state is not adamw");
    }
    validate_step(model, w_grads, plan);
    const std::int64_t t = state.step_count + 1;
    for (int l = 0; l < model.num_sites(); ++l) {
        const auto g = maybe_project(w_grads[static_cast<std::size_t>(l)], plan, l);
        Site& site = model.sites[static_cast<std::size_t>(l)];
        if (model.cfg.mode == AdapterMode::joint) {
            adamw_update(site.delta_w, g, state.m1[static_cast<std::size_t>(l)],
                         state.m2[static_cast<std::size_t>(l)], state.hyper, t);
        } else {
            linalg::Matrix ga = linalg::matmul(linalg::transpose(site.b), g);
            ga *= model.cfg.lora_scale;
            linalg::Matrix gb = linalg::matmul(g, linalg::transpose(site.a));
            gb *= model.cfg.lora_scale;
            adamw_update(site.a, ga, state.m1_a[static_cast<std::size_t>(l)],
                         state.m2_a[static_cast<std::size_t>(l)], state.hyper, t);
            adamw_update(site.b, gb, state.m1_b[static_cast<std::size_t>(l)],
                         state.m2_b[static_cast<std::size_t>(l)], state.hyper, t);
        }
    }
    state.step_count = t;
}

void optimizer_step(OptimizerState& state, ToyModel& model,
                    std::span<const linalg::Matrix> w_grads,
                    const project::ProjectionPlan* plan) {
    if (state.kind == OptimizerKind::sgd) {
        sgd_step(state, model, w_grads, plan);
    } else {
        adamw_step(state, model, w_grads, plan);
    }
}

std::vector<linalg::Matrix> Checkpoint::deltas() const {
    std::vector<linalg::Matrix> out;
    out.reserve(sites.size());
    for (const auto& s : sites) {
        if (mode == AdapterMode::joint) {
            out.push_back(s.delta_w);
        } else {
            linalg::Matrix d = linalg::matmul(s.b, s.a);
            d *= lora_scale;
            out.push_back(std::move(d));
        }
    }
    return out;
}

SpuriousDataset make_train_dataset(const TrainConfig& cfg) {
    const int d_in = cfg.model.layer_dims.front();
    const int d_out = cfg.model.layer_dims.back();
    return make_dataset(d_in, d_out, cfg.n_train, cfg.n_eval, cfg.task_rank, cfg.beta,
                        rng::derive_seed(cfg.seed, "dataset"), cfg.task_frob);
}

namespace {

Checkpoint snapshot(const ToyModel& model, StageTag stage, std::int64_t steps,
                    const std::string& fingerprint,
                    std::vector<project::ProbePair> probes) {
    Checkpoint ckpt;
    ckpt.stage = stage;
    ckpt.mode = model.cfg.mode;
    ckpt.adapter_rank = model.cfg.adapter_rank;
    ckpt.lora_scale = model.cfg.lora_scale;
    ckpt.step_count = steps;
    ckpt.config_fingerprint = fingerprint;
    for (int l = 0; l < model.num_sites(); ++l) {
        const Site& s = model.sites[static_cast<std::size_t>(l)];
        CheckpointSite cs;
        const auto [d_out, d_in] = model.site_shape(l);
        cs.d_out = d_out;
        cs.d_in = d_in;
        if (model.cfg.mode == AdapterMode::joint) {
            cs.delta_w = s.delta_w;
        } else {
            cs.a = s.a;
            cs.b = s.b;
        }
        ckpt.sites.push_back(std::move(cs));
    }
    if (stage == StageTag::projected &&
        static_cast<int>(probes.size()) != model.num_sites()) {
        throw ParameterError("checkpoint: projected stage needs one probe per site");
    }
    if (stage == StageTag::naive && !probes.empty()) {
        throw ParameterError("checkpoint: naive stage carries no probes");
    }
    ckpt.probes = std::move(probes);
    return ckpt;
}

TrainResult run_training(const TrainConfig& cfg, StageTag stage,
                         std::vector<project::ProbePair> probes) {
    if (cfg.epochs < 0 || cfg.batch_size < 1) {
        throw ParameterError("train: epochs must be >= 0 and batch_size >= 1");
    }
    ToyModel model = make_toy_model(cfg.model, rng::derive_seed(cfg.seed, "init"));
    const auto data = make_train_dataset(cfg);
    if (data.train_inputs.rows() != cfg.model.layer_dims.front() ||
        data.train_targets.rows() != cfg.model.layer_dims.back()) {
        throw DimensionError("train: dataset does not match model dims");
    }

    std::optional<project::ProjectionPlan> plan;
    if (stage == StageTag::projected) {
        std::vector<std::pair<int, int>> shapes;
        for (int l = 0; l < model.num_sites(); ++l) {
            shapes.push_back(model.site_shape(l));
        }
        plan.emplace(probes, std::move(shapes));
    }

    OptimizerState opt = make_optimizer(cfg.optimizer, cfg.hyper, model);

    TrainResult result;
    if (plan) {
        for (int l = 0; l < model.num_sites(); ++l) {
            result.h_initial.push_back(project::spurious_component(
                model.effective_weight(l), plan->probes()[static_cast<std::size_t>(l)]));
        }
        result.max_h_drift.assign(static_cast<std::size_t>(model.num_sites()), 0.0);
    }

    const int n_train = data.train_inputs.cols();
    std::vector<int> order(static_cast<std::size_t>(n_train));
    std::int64_t step = 0;

    const std::int64_t batches_per_epoch =
        (n_train + cfg.batch_size - 1) / cfg.batch_size;
    const std::int64_t total_steps = batches_per_epoch * cfg.epochs;
    const double base_lr = cfg.hyper.lr;
    auto lr_at = [&](std::int64_t t) {
        double lr = base_lr;
        if (cfg.warmup_steps > 0 && t < cfg.warmup_steps) {
            lr *= static_cast<double>(t + 1) / cfg.warmup_steps;
        }
        if (cfg.schedule == LrSchedule::linear_decay && total_steps > 0) {
            lr *= static_cast<double>(total_steps - t) / static_cast<double>(total_steps);
        }
        return lr;
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        auto shuffle_gen =
            rng::substream(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch));
        for (int i = n_train - 1; i > 0; --i) {
            const auto j = static_cast<int>(
                shuffle_gen.below(static_cast<std::uint64_t>(i) + 1));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        double loss_sum = 0.0;
        int batches = 0;
        for (int start = 0; start < n_train; start += cfg.batch_size) {
            const int size = std::min(cfg.batch_size, n_train - start);
            linalg::Matrix x(data.train_inputs.rows(), size);
            linalg::Matrix y(data.train_targets.rows(), size);
            for (int c = 0; c < size; ++c) {
                const int col = order[static_cast<std::size_t>(start + c)];
                for (int r = 0; r < x.rows(); ++r) {
                    x(r, c) = data.train_inputs(r, col);
                }
                for (int r = 0; r < y.rows(); ++r) {
                    y(r, c) = data.train_targets(r, col);
                }
            }

            auto grads = site_gradients(model, x, y);
            if (!std::isfinite(grads.loss)) {
                throw TrainingError("train: loss diverged at step " + std::to_string(step),
                                    step);
            }
            opt.hyper.lr = lr_at(step);
            optimizer_step(opt, model, grads.site_grads, plan ? &*plan : nullptr);
            ++step;

            if (plan) {
                for (int l = 0; l < model.num_sites(); ++l) {
                    const double h = project::spurious_component(
                        model.effective_weight(l),
                        plan->probes()[static_cast<std::size_t>(l)]);
                    const double drift =
                        std::abs(h - result.h_initial[static_cast<std::size_t>(l)]);
                    auto& worst = result.max_h_drift[static_cast<std::size_t>(l)];
                    worst = std::max(worst, drift);
                }
            }

            loss_sum += grads.loss;
            ++batches;
        }
        result.epoch_loss.push_back(batches > 0 ? loss_sum / batches : 0.0);
    }

    result.checkpoint = snapshot(model, stage, step, cfg.fingerprint, std::move(probes));
    return result;
}

}  // namespace

TrainResult train_naive(const TrainConfig& cfg) {
    return run_training(cfg, StageTag::naive, {});
}

TrainResult train_projected(const TrainConfig& cfg,
                            std::vector<project::ProbePair> probes) {
    if (probes.empty()) {
        throw ParameterError("train_projected: need one frozen probe per site");
    }
    return run_training(cfg, StageTag::projected, std::move(probes));
}

std::vector<project::ProbePair> extract_probes(const Checkpoint& naive) {
    std::vector<project::ProbePair> probes;
    const auto deltas = naive.deltas();
    for (int l = 0; l < static_cast<int>(deltas.size()); ++l) {
        probes.push_back(identify::extract_probe(deltas[static_cast<std::size_t>(l)], l));
    }
    return probes;
}

double eval_loss(const ToyModel& model, const linalg::Matrix& inputs,
                 const linalg::Matrix& targets) {
    const auto y_hat = forward_batch(model, inputs);
    double loss = 0.0;
    auto a = y_hat.data();
    auto b = targets.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        loss += 0.5 * d * d;
    }
    return loss / inputs.cols();
}

double spurious_energy(const ToyModel& model, const SpuriousDataset& data) {
    const auto y_hat = forward_batch(model, data.eval_inputs);
    const auto& u = data.spurious_dirs.u_s;
    double energy = 0.0;
    for (int c = 0; c < y_hat.cols(); ++c) {
        double along = 0.0;
        for (int i = 0; i < y_hat.rows(); ++i) {
            along += u[i] * (y_hat(i, c) - data.eval_targets(i, c));
        }
        energy += along * along;
    }
    return energy / y_hat.cols();
}

ToyModel model_from_checkpoint(const ModelConfig& cfg, std::uint64_t seed,
                               const Checkpoint& ckpt) {
    ToyModel model = make_toy_model(cfg, seed);
    if (static_cast<int>(ckpt.sites.size()) != model.num_sites()) {
        throw ParameterError("model_from_checkpoint: site count mismatch");
    }
    if (ckpt.mode != cfg.mode) {
        throw ParameterError("model_from_checkpoint: adapter mode mismatch");
    }
    for (int l = 0; l < model.num_sites(); ++l) {
        const auto& cs = ckpt.sites[static_cast<std::size_t>(l)];
        const auto [d_out, d_in] = model.site_shape(l);
        if (cs.d_out != d_out || cs.d_in != d_in) {
            throw DimensionError("model_from_checkpoint: site shape mismatch at " +
                                 std::to_string(l));
        }
        Site& site = model.sites[static_cast<std::size_t>(l)];
        if (cfg.mode == AdapterMode::joint) {
            site.delta_w = cs.delta_w;
        } else {
            site.a = cs.a;
            site.b = cs.b;
        }
    }
    return model;
}

}  // namespace grasp::trainkit
