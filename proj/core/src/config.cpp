#include "grasp/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "grasp/rng.hpp"

namespace grasp::config {

namespace {

using nlohmann::json;

trainkit::OptimizerKind optimizer_from(const std::string& s) {
    if (s == "sgd") return trainkit::OptimizerKind::sgd;
    if (s == "adamw") return trainkit::OptimizerKind::adamw;
    throw ConfigError("optimizer.kind must be 'sgd' or 'adamw', got '" + s + "'");
}

trainkit::AdapterMode adapter_mode_from(const std::string& s) {
    if (s == "joint") return trainkit::AdapterMode::joint;
    if (s == "factored") return trainkit::AdapterMode::factored;
    throw ConfigError("adapter.mode must be 'joint' or 'factored', got '" + s + "'");
}

trainkit::Activation activation_from(const std::string& s) {
    if (s == "identity") return trainkit::Activation::identity;
    if (s == "tanh") return trainkit::Activation::tanh;
    throw ConfigError("model.activation must be 'identity' or 'tanh', got '" + s + "'");
}

const char* schedule_to_string(trainkit::LrSchedule s) {
    return s == trainkit::LrSchedule::constant ? "constant" : "linear";
}

trainkit::LrSchedule schedule_from(const std::string& s) {
    if (s == "constant") return trainkit::LrSchedule::constant;
    if (s == "linear") return trainkit::LrSchedule::linear_decay;
    throw ConfigError("optimizer.schedule must be 'constant' or 'linear', got '" + s + "'");
}

// The full schema as the canonical JSON document for a config.
json to_json(const ExperimentConfig& c) {
    return json{
        {"dims",
         {{"d_out", c.d_out},
          {"d_in", c.d_in},
          {"sites", c.sites},
          {"adapter_rank", c.adapter_rank}}},
        {"data",
         {{"n", c.n},
          {"n_train", c.n_train},
          {"n_eval", c.n_eval},
          {"beta", c.beta},
          {"task_rank", c.task_rank},
          {"task_frob", c.task_frob}}},
        {"assumption",
         {{"alpha_mean", c.alpha_mean},
          {"alpha_jitter", c.alpha_jitter},
          {"mu_frob", c.mu_frob},
          {"r_t", c.r_t},
          {"tau", c.tau},
          {"orthogonal_task", c.orthogonal_task},
          {"noise_const", c.noise_const}}},
        {"optimizer",
         {{"kind", trainkit::to_string(c.optimizer)},
          {"lr", c.lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon},
          {"weight_decay", c.weight_decay},
          {"warmup_steps", c.warmup_steps},
          {"schedule", schedule_to_string(c.schedule)},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size}}},
        {"adapter",
         {{"mode", trainkit::to_string(c.adapter_mode)},
          {"lora_scale", c.lora_scale},
          {"init_scale", c.init_scale}}},
        {"model", {{"activation", trainkit::to_string(c.activation)}}},
        {"sweep",
         {{"n_values", c.sweep_n},
          {"r_t_values", c.sweep_r_t},
          {"alpha_means", c.sweep_alpha_means},
          {"tau_values", c.sweep_tau}}},
        {"seeds", c.seeds},
        {"output_dir", c.output_dir},
    };
}

void reject_unknown_keys(const json& doc, const json& schema, const std::string& path) {
    if (!doc.is_object()) {
        return;
    }
    for (const auto& [key, value] : doc.items()) {
        const std::string where = path.empty() ? key : path + "." + key;
        if (!schema.contains(key)) {
            throw ConfigError("unknown config key '" + where + "'");
        }
        if (value.is_object()) {
            reject_unknown_keys(value, schema.at(key), where);
        }
    }
}

template <typename T>
void read_if(const json& doc, const char* section, const char* key, T& out) {
    if (!doc.contains(section)) {
        return;
    }
    const auto& s = doc.at(section);
    if (s.contains(key)) {
        try {
            out = s.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config key '") + section + "." + key +
                              "': " + e.what());
        }
    }
}

void validate(const ExperimentConfig& c) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) {
            throw ConfigError(std::string("config: ") + name + " must be positive");
        }
    };
    positive(c.d_out, "dims.d_out");
    positive(c.d_in, "dims.d_in");
    positive(c.sites, "dims.sites");
    positive(static_cast<double>(c.n), "data.n");
    positive(c.n_train, "data.n_train");
    positive(c.n_eval, "data.n_eval");
    positive(c.task_frob, "data.task_frob");
    positive(c.alpha_mean, "assumption.alpha_mean");
    positive(c.mu_frob, "assumption.mu_frob");
    positive(c.lora_scale, "adapter.lora_scale");
    positive(c.batch_size, "optimizer.batch_size");
    if (c.tau < 0.0) {
        throw ConfigError("config: assumption.tau must be >= 0");
    }
    if (c.alpha_jitter < 0.0 || c.alpha_jitter >= 1.0) {
        throw ConfigError("config: assumption.alpha_jitter must lie in [0, 1)");
    }
    if (c.r_t < 1 || c.r_t > std::min(c.d_out, c.d_in)) {
        throw ConfigError("config: assumption.r_t out of range for dims");
    }
    if (c.task_rank < 1 || c.task_rank > std::min(c.d_out, c.d_in)) {
        throw ConfigError("config: data.task_rank out of range for dims");
    }
    if (c.epochs < 0) {
        throw ConfigError("config: optimizer.epochs must be >= 0");
    }
    if (c.seeds.empty()) {
        throw ConfigError("config: seeds must be non-empty");
    }
    if (c.noise_const < 0.0) {
        throw ConfigError("config: assumption.noise_const must be >= 0");
    }
}

}  // namespace

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.surprise_ok =
        synthgrad::surprise_valid(cfg.alpha_mean, cfg.mu_frob, cfg.tau, cfg.n);
    cfg.fingerprint = fingerprint_of(cfg);
    return cfg;
}

ExperimentConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("config document must be a JSON object");
    }

    ExperimentConfig cfg;
    reject_unknown_keys(doc, to_json(cfg), "");

    read_if(doc, "dims", "d_out", cfg.d_out);
    read_if(doc, "dims", "d_in", cfg.d_in);
    read_if(doc, "dims", "sites", cfg.sites);
    read_if(doc, "dims", "adapter_rank", cfg.adapter_rank);

    read_if(doc, "data", "n", cfg.n);
    read_if(doc, "data", "n_train", cfg.n_train);
    read_if(doc, "data", "n_eval", cfg.n_eval);
    read_if(doc, "data", "beta", cfg.beta);
    read_if(doc, "data", "task_rank", cfg.task_rank);
    read_if(doc, "data", "task_frob", cfg.task_frob);

    read_if(doc, "assumption", "alpha_mean", cfg.alpha_mean);
    read_if(doc, "assumption", "alpha_jitter", cfg.alpha_jitter);
    read_if(doc, "assumption", "mu_frob", cfg.mu_frob);
    read_if(doc, "assumption", "r_t", cfg.r_t);
    read_if(doc, "assumption", "tau", cfg.tau);
    read_if(doc, "assumption", "orthogonal_task", cfg.orthogonal_task);
    read_if(doc, "assumption", "noise_const", cfg.noise_const);

    if (doc.contains("optimizer") && doc.at("optimizer").contains("kind")) {
        cfg.optimizer = optimizer_from(doc.at("optimizer").at("kind").get<std::string>());
    }
    read_if(doc, "optimizer", "lr", cfg.lr);
    read_if(doc, "optimizer", "beta1", cfg.beta1);
    read_if(doc, "optimizer", "beta2", cfg.beta2);
    read_if(doc, "optimizer", "epsilon", cfg.epsilon);
    read_if(doc, "optimizer", "weight_decay", cfg.weight_decay);
    read_if(doc, "optimizer", "warmup_steps", cfg.warmup_steps);
    if (doc.contains("optimizer") && doc.at("optimizer").contains("schedule")) {
        cfg.schedule = schedule_from(doc.at("optimizer").at("schedule").get<std::string>());
    }
    read_if(doc, "optimizer", "epochs", cfg.epochs);
    read_if(doc, "optimizer", "batch_size", cfg.batch_size);

    if (doc.contains("adapter") && doc.at("adapter").contains("mode")) {
        cfg.adapter_mode =
            adapter_mode_from(doc.at("adapter").at("mode").get<std::string>());
    }
    read_if(doc, "adapter", "lora_scale", cfg.lora_scale);
    read_if(doc, "adapter", "init_scale", cfg.init_scale);

    if (doc.contains("model") && doc.at("model").contains("activation")) {
        cfg.activation = activation_from(doc.at("model").at("activation").get<std::string>());
    }

    cfg.sweep_present = doc.contains("sweep");
    read_if(doc, "sweep", "n_values", cfg.sweep_n);
    read_if(doc, "sweep", "r_t_values", cfg.sweep_r_t);
    read_if(doc, "sweep", "alpha_means", cfg.sweep_alpha_means);
    read_if(doc, "sweep", "tau_values", cfg.sweep_tau);

    if (doc.contains("seeds")) {
        try {
            cfg.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config key 'seeds': ") + e.what());
        }
    }
    if (doc.contains("output_dir")) {
        try {
            cfg.output_dir = doc.at("output_dir").get<std::string>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config key 'output_dir': ") + e.what());
        }
    }

    validate(cfg);
    cfg.surprise_ok =
        synthgrad::surprise_valid(cfg.alpha_mean, cfg.mu_frob, cfg.tau, cfg.n);
    cfg.fingerprint = fingerprint_of(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_config(buffer.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string canonical_text(const ExperimentConfig& cfg) {
    return to_json(cfg).dump();
}

std::string fingerprint_of(const ExperimentConfig& cfg) {
    const std::string text = canonical_text(cfg);
    const std::uint64_t h = rng::hash_name(text);
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 0; i < 16; ++i) {
        buf[15 - i] = hex[(h >> (4 * i)) & 0xF];
    }
    buf[16] = '\0';
    return std::string(buf);
}

trainkit::TrainConfig to_train_config(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.d_out != cfg.d_in) {
        throw ConfigError("to_train_config: the site chain needs d_out == d_in");
    }
    trainkit::TrainConfig tc;
    tc.model.layer_dims.assign(static_cast<std::size_t>(cfg.sites) + 1, cfg.d_out);
    tc.model.adapter_rank = cfg.adapter_rank;
    tc.model.activation = cfg.activation;
    tc.model.mode = cfg.adapter_mode;
    tc.model.lora_scale = cfg.lora_scale;
    tc.model.init_scale = cfg.init_scale;
    tc.n_train = cfg.n_train;
    tc.n_eval = cfg.n_eval;
    tc.task_rank = cfg.task_rank;
    tc.beta = cfg.beta;
    tc.task_frob = cfg.task_frob;
    tc.optimizer = cfg.optimizer;
    tc.hyper = trainkit::OptimizerHyper{cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon,
                                        cfg.weight_decay};
    tc.warmup_steps = cfg.warmup_steps;
    tc.schedule = cfg.schedule;
    tc.epochs = cfg.epochs;
    tc.batch_size = cfg.batch_size;
    tc.seed = seed;
    tc.fingerprint = cfg.fingerprint;
    return tc;
}

synthgrad::SpuriousSpec spurious_from(const ExperimentConfig& cfg, std::uint64_t seed) {
    return synthgrad::SpuriousSpec::random(cfg.d_out, cfg.d_in, cfg.alpha_mean,
                                           cfg.alpha_jitter, seed);
}

synthgrad::TaskSpec task_from(const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto spurious = spurious_from(cfg, seed);
    const auto mu = synthgrad::make_task_mean(
        cfg.d_out, cfg.d_in, cfg.r_t, cfg.mu_frob, seed,
        cfg.orthogonal_task ? &spurious.u_s : nullptr,
        cfg.orthogonal_task ? &spurious.v_s : nullptr);
    return synthgrad::TaskSpec(mu, cfg.r_t, cfg.mu_frob, cfg.tau);
}

identify::IdentifySweepGrid identify_grid_from(const ExperimentConfig& cfg) {
    identify::IdentifySweepGrid grid;
    grid.n_values = cfg.sweep_n.empty() ? std::vector<std::int64_t>{cfg.n} : cfg.sweep_n;
    grid.r_t_values = cfg.sweep_r_t.empty() ? std::vector<int>{cfg.r_t} : cfg.sweep_r_t;
    grid.alpha_means = cfg.sweep_alpha_means.empty()
                           ? std::vector<double>{cfg.alpha_mean}
                           : cfg.sweep_alpha_means;
    grid.tau_values = cfg.sweep_tau.empty() ? std::vector<double>{cfg.tau} : cfg.sweep_tau;
    grid.d_out = cfg.d_out;
    grid.d_in = cfg.d_in;
    grid.mu_frob = cfg.mu_frob;
    grid.alpha_jitter = cfg.alpha_jitter;
    grid.orthogonal_task = cfg.orthogonal_task;
    grid.noise_const = cfg.noise_const;
    return grid;
}

metrics::SelectivityGrid selectivity_grid_from(const ExperimentConfig& cfg) {
    metrics::SelectivityGrid grid;
    if (!cfg.sweep_r_t.empty()) {
        grid.r_t_values = cfg.sweep_r_t;
    } else {
        // Default axis {4, 16, 64}, clipped to the configured dimensions.
        for (int rt : {4, 16, 64}) {
            if (rt <= std::min(cfg.d_out, cfg.d_in)) {
                grid.r_t_values.push_back(rt);
            }
        }
    }
    grid.alpha_mean = cfg.alpha_mean;
    grid.mu_frob = cfg.mu_frob;
    grid.tau = cfg.tau;
    grid.alpha_jitter = cfg.alpha_jitter;
    grid.n = cfg.n;
    grid.d_out = cfg.d_out;
    grid.d_in = cfg.d_in;
    return grid;
}

}  // namespace grasp::config
