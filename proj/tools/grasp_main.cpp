// Command-line front end: gradient-stream generation, probe identification,
// two-stage training, leakage analysis, and batch sweeps, all driven by a
// JSON config. Every command with a seed is bit-reproducible.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grasp/checkpoint.hpp"
#include "grasp/config.hpp"
#include "grasp/identify.hpp"
#include "grasp/metrics.hpp"
#include "grasp/project.hpp"
#include "grasp/report.hpp"
#include "grasp/rng.hpp"
#include "grasp/synthgrad.hpp"
#include "grasp/trainkit.hpp"

namespace {

namespace fs = std::filesystem;
using namespace grasp;

// Exit codes: 0 ok, 2 config/usage, 3 numeric (convergence/divergence),
// 4 I/O, 5 failed runtime check, 1 anything else.
constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;
constexpr int kExitCheck = 5;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    bool force = false;
    std::string format = "csv";
};

config::ExperimentConfig load_effective_config(const CommonArgs& args) {
    config::ExperimentConfig cfg = args.config_path.empty()
                                       ? config::default_config()
                                       : config::load_config(args.config_path);
    if (args.seed) {
        cfg.seeds = {*args.seed};
        cfg.fingerprint = config::fingerprint_of(cfg);
    }
    return cfg;
}

fs::path ensure_out_dir(const CommonArgs& args) {
    fs::path dir(args.out_dir);
    if (!dir.empty() && !fs::exists(dir)) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) {
            throw IoError("cannot create output directory " + dir.string() + ": " +
                          ec.message());
        }
    }
    return dir;
}

std::string reduction_text(double value, bool saturated) {
    const std::string num = report::format_double(value);
    return saturated ? (">=" + num) : num;
}

int cmd_gen(const CommonArgs& args) {
    const auto cfg = load_effective_config(args);
    const auto dir = ensure_out_dir(args);

    for (const auto seed : cfg.seeds) {
        const auto spurious = config::spurious_from(cfg, seed);
        const auto task = config::task_from(cfg, seed);

        trainkit::GradientStream stream;
        stream.seed = seed;
        stream.n = cfg.n;
        stream.d_out = cfg.d_out;
        stream.d_in = cfg.d_in;
        stream.config_fingerprint = cfg.fingerprint;
        stream.gradients.reserve(static_cast<std::size_t>(cfg.n));
        for (std::int64_t i = 0; i < cfg.n; ++i) {
            auto sample = synthgrad::sample_gradient(spurious, task, seed, i);
            stream.alphas.push_back(sample.alpha);
            stream.gradients.push_back(std::move(sample.g));
        }
        stream.truth.emplace(trainkit::GradientStream::Truth{
            spurious.u_s, spurious.v_s, cfg.alpha_mean, cfg.alpha_jitter, cfg.mu_frob,
            cfg.tau, cfg.r_t});

        const fs::path path = dir / ("stream_" + std::to_string(seed) + ".grasp");
        trainkit::save_stream(stream, path, args.force);
        std::cout << "wrote " << path.string() << " (n=" << cfg.n << ", d=" << cfg.d_out
                  << "x" << cfg.d_in << ", fingerprint=" << cfg.fingerprint
                  << ", surprise_valid=" << (cfg.surprise_ok ? "true" : "false") << ")\n";
    }
    return kExitOk;
}

void print_bound_report(const identify::BoundReport& bound) {
    std::cout << "  bound_value        = " << report::format_double(bound.bound_value)
              << "  (1 - structural - c*noise)\n"
              << "  structural_term    = " << report::format_double(bound.structural_term)
              << "\n"
              << "  noise_term         = " << report::format_double(bound.noise_term)
              << "  (unit constant, c=" << report::format_double(bound.noise_const)
              << ")\n"
              << "  n                  = " << bound.n << "\n";
}

int cmd_identify(const std::string& input) {
    const fs::path path(input);
    const auto kind = trainkit::container_kind(path);

    if (kind == "gradient-stream") {
        const auto stream = trainkit::load_stream(path);
        const auto delta = stream.accumulated();
        const auto probe = identify::extract_probe(delta, 0);
        std::cout << "gradient stream: n=" << stream.n << ", d=" << stream.d_out << "x"
                  << stream.d_in << "\n";
        std::cout << "probe sigma_1 = " << report::format_double(probe.sigma) << "\n";
        if (stream.truth) {
            const auto& t = *stream.truth;
            const synthgrad::SpuriousSpec truth(t.u_s, t.v_s, t.alpha_mean,
                                                t.alpha_jitter);
            const double align = identify::alignment(probe, truth);
            const auto bound =
                identify::theorem1_bound(t.alpha_mean, t.mu_frob, t.r_t, t.tau, stream.n);
            std::cout << "alignment vs planted truth = " << report::format_double(align)
                      << "\n";
            // Per-vector diagnostics; the bound controls only their product.
            std::cout << "  |u1 . u_s| = "
                      << report::format_double(std::abs(probe.u.dot(truth.u_s)))
                      << ", |v1 . v_s| = "
                      << report::format_double(std::abs(probe.v.dot(truth.v_s))) << "\n";
            print_bound_report(bound);
            std::cout << (align >= bound.bound_value ? "alignment >= bound\n"
                                                     : "alignment BELOW bound\n");
        } else {
            std::cout << "no planted truth stored; alignment omitted\n";
        }
        return kExitOk;
    }

    if (kind == "checkpoint") {
        const auto ckpt = trainkit::load_checkpoint(path);
        const auto deltas = ckpt.deltas();
        std::cout << "checkpoint: stage=" << trainkit::to_string(ckpt.stage)
                  << ", sites=" << deltas.size() << ", steps=" << ckpt.step_count << "\n";
        for (std::size_t l = 0; l < deltas.size(); ++l) {
            if (linalg::frobenius_norm(deltas[l]) == 0.0) {
                std::cout << "site " << l << ": zero update, no probe\n";
                continue;
            }
            const auto probe =
                identify::extract_probe(deltas[l], static_cast<int>(l));
            std::cout << "site " << l
                      << ": sigma_1 = " << report::format_double(probe.sigma)
                      << ", |dW|_F = "
                      << report::format_double(linalg::frobenius_norm(deltas[l])) << "\n";
        }
        std::cout << "no planted truth in checkpoints; alignment omitted\n";
        return kExitOk;
    }

    throw IoError("unrecognized container kind '" + kind + "' in " + input);
}

struct TrainOutcome {
    trainkit::TrainResult naive;
    std::optional<trainkit::TrainResult> projected;
};

void print_train_summary(const config::ExperimentConfig& cfg, std::uint64_t seed,
                         const TrainOutcome& outcome) {
    const auto tc = config::to_train_config(cfg, seed);
    const auto data = trainkit::make_train_dataset(tc);

    const auto report_run = [&](const char* name, const trainkit::TrainResult& run) {
        const auto model = trainkit::model_from_checkpoint(
            tc.model, rng::derive_seed(tc.seed, "init"), run.checkpoint);
        std::cout << name << ": steps=" << run.checkpoint.step_count;
        if (!run.epoch_loss.empty()) {
            std::cout << ", first-epoch loss=" << report::format_double(run.epoch_loss.front())
                      << ", last-epoch loss=" << report::format_double(run.epoch_loss.back());
        }
        std::cout << ", eval loss=" << report::format_double(trainkit::eval_loss(
                         model, data.eval_inputs, data.eval_targets))
                  << ", spurious energy=" << report::format_double(trainkit::spurious_energy(model, data))
                  << "\n";
    };

    report_run("naive", outcome.naive);
    if (outcome.projected) {
        report_run("projected", *outcome.projected);
        const auto deltas = outcome.projected->checkpoint.deltas();
        const auto& probes = outcome.projected->checkpoint.probes;
        std::cout << "final per-site constraint <dW_l, u_l v_l^T>:\n";
        for (std::size_t l = 0; l < deltas.size(); ++l) {
            std::cout << "  site " << l << ": "
                      << report::format_double(
                             project::spurious_component(deltas[l], probes[l]))
                      << " (max step drift "
                      << report::format_double(outcome.projected->max_h_drift[l]) << ")\n";
        }
    }
}

int cmd_train(const CommonArgs& args, const std::string& mode,
              const std::string& naive_ckpt_path) {
    if (mode != "naive" && mode != "grasp") {
        throw ConfigError("train: --mode must be 'naive' or 'grasp'");
    }
    const auto cfg = load_effective_config(args);
    const auto dir = ensure_out_dir(args);

    for (const auto seed : cfg.seeds) {
        const auto tc = config::to_train_config(cfg, seed);
        TrainOutcome outcome;

        std::optional<trainkit::Checkpoint> naive_ckpt;
        if (!naive_ckpt_path.empty()) {
            naive_ckpt = trainkit::load_checkpoint(naive_ckpt_path);
            if (naive_ckpt->config_fingerprint != cfg.fingerprint) {
                throw ConfigError("train: naive checkpoint fingerprint " +
                                  naive_ckpt->config_fingerprint +
                                  " does not match config " + cfg.fingerprint);
            }
            if (naive_ckpt->stage != trainkit::StageTag::naive) {
                throw ConfigError("train: --naive-ckpt must point at a naive checkpoint");
            }
        }

        if (naive_ckpt) {
            outcome.naive.checkpoint = *naive_ckpt;
        } else {
            outcome.naive = trainkit::train_naive(tc);
            const fs::path path = dir / ("naive_" + std::to_string(seed) + ".grasp");
            trainkit::save_checkpoint(outcome.naive.checkpoint, path, args.force);
            std::cout << "wrote " << path.string() << "\n";
        }

        if (mode == "grasp") {
            auto probes = trainkit::extract_probes(outcome.naive.checkpoint);
            outcome.projected = trainkit::train_projected(tc, std::move(probes));
            const fs::path path = dir / ("projected_" + std::to_string(seed) + ".grasp");
            trainkit::save_checkpoint(outcome.projected->checkpoint, path, args.force);
            std::cout << "wrote " << path.string() << "\n";
        }

        print_train_summary(cfg, seed, outcome);
    }
    return kExitOk;
}

int cmd_leakage(const CommonArgs& args, const std::string& naive_path,
                const std::string& projected_path) {
    const auto naive = trainkit::load_checkpoint(naive_path);
    const auto projected = trainkit::load_checkpoint(projected_path);
    const auto naive_deltas = naive.deltas();
    const auto projected_deltas = projected.deltas();
    // Frozen probes come from the projected checkpoint; comparing two
    // probe-free checkpoints falls back to stage-2 extraction on the first.
    const auto probes = projected.probes.empty() ? trainkit::extract_probes(naive)
                                                 : projected.probes;
    const auto rep = metrics::leakage_report(naive_deltas, projected_deltas, probes);

    std::cout << "site  rho_naive      rho_projected  reduction\n";
    for (std::size_t l = 0; l < rep.rho_naive.size(); ++l) {
        std::cout << l << "     " << report::format_double(rep.rho_naive[l]) << "  "
                  << report::format_double(rep.rho_projected[l]) << "  "
                  << reduction_text(rep.reduction[l], rep.reduction_saturated[l]) << "\n";
    }
    std::cout << "naive:     mean=" << report::format_double(rep.naive_mean)
              << " median=" << report::format_double(rep.naive_median)
              << " max=" << report::format_double(rep.naive_max) << "\n";
    std::cout << "projected: mean=" << report::format_double(rep.projected_mean)
              << " median=" << report::format_double(rep.projected_median)
              << " max=" << report::format_double(rep.projected_max) << "\n";
    std::cout << "reduction: mean=" << report::format_double(rep.mean_reduction)
              << " median=" << report::format_double(rep.median_reduction)
              << " min=" << report::format_double(rep.min_reduction) << "\n";

    if (!args.out_dir.empty() && args.out_dir != "-") {
        const auto dir = ensure_out_dir(args);
        report::Table table({"site", "rho_naive", "rho_projected", "reduction",
                             "reduction_saturated"});
        for (std::size_t l = 0; l < rep.rho_naive.size(); ++l) {
            table.start_row();
            table.cell(static_cast<std::int64_t>(l));
            table.cell(rep.rho_naive[l]);
            table.cell(rep.rho_projected[l]);
            table.cell(rep.reduction[l]);
            table.cell(static_cast<bool>(rep.reduction_saturated[l]));
        }
        const auto format = report::format_from_string(args.format);
        const fs::path path =
            dir / (format == report::Format::csv ? "leakage_report.csv"
                                                 : "leakage_report.json");
        report::write_report(table, path, format);
        std::cout << "wrote " << path.string() << "\n";
    }
    return kExitOk;
}

int cmd_sweep(const CommonArgs& args, const std::string& kind) {
    auto cfg = load_effective_config(args);
    const auto dir = ensure_out_dir(args);
    const auto format = report::format_from_string(args.format);
    const char* ext = format == report::Format::csv ? ".csv" : ".json";

    if (cfg.sweep_present &&
        (cfg.sweep_n.empty() && cfg.sweep_r_t.empty() && cfg.sweep_alpha_means.empty() &&
         cfg.sweep_tau.empty())) {
        throw ConfigError("sweep: config declares a sweep section with no axes (empty grid)");
    }

    if (kind == "identify") {
        auto grid = config::identify_grid_from(cfg);
        if (!cfg.sweep_present) {
            grid.n_values = {100, 400, 1600};
        }
        if (grid.n_values.empty() || grid.r_t_values.empty() ||
            grid.alpha_means.empty() || grid.tau_values.empty()) {
            throw ConfigError("sweep: identify grid has an empty axis");
        }
        const auto rows = identify::identification_sweep(grid, cfg.seeds);

        report::Table table({"n", "r_t", "alpha_mean", "tau", "seed", "alignment",
                             "bound_value", "surprise_valid"});
        for (const auto& row : rows) {
            table.start_row();
            table.cell(row.n);
            table.cell(row.r_t);
            table.cell(row.alpha_mean);
            table.cell(row.tau);
            table.cell(row.seed);
            table.cell(row.alignment);
            table.cell(row.bound_value);
            table.cell(row.surprise_valid);
        }
        const fs::path path = dir / (std::string("identify_sweep") + ext);
        report::write_report(table, path, format);
        std::cout << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
        return kExitOk;
    }

    if (kind == "selectivity") {
        auto grid = config::selectivity_grid_from(cfg);
        if (cfg.sweep_present) {
            grid.r_t_values = cfg.sweep_r_t;
        }
        if (grid.r_t_values.empty()) {
            throw ConfigError("sweep: selectivity grid has an empty r_t axis");
        }
        const auto rows = metrics::selectivity_sweep(grid, cfg.seeds);

        report::Table table({"r_t", "mean_spurious_removed_fraction",
                             "mean_task_removed_fraction", "measured_ratio",
                             "guaranteed_floor", "clears_floor", "degenerate",
                             "samples", "seed_count"});
        for (const auto& row : rows) {
            table.start_row();
            table.cell(row.r_t);
            table.cell(row.mean_spurious_removed_fraction);
            table.cell(row.mean_task_removed_fraction);
            table.cell(row.measured_ratio);
            table.cell(row.guaranteed_floor);
            table.cell(row.clears_floor);
            table.cell(row.degenerate);
            table.cell(row.samples);
            table.cell(row.seed_count);
        }
        const fs::path path = dir / (std::string("selectivity_sweep") + ext);
        report::write_report(table, path, format);
        std::cout << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
        return kExitOk;
    }

    if (kind == "leakage") {
        report::Table table({"seed", "site", "rho_naive", "rho_projected", "reduction",
                             "reduction_saturated"});
        for (const auto seed : cfg.seeds) {
            const auto tc = config::to_train_config(cfg, seed);
            const auto naive = trainkit::train_naive(tc);
            auto probes = trainkit::extract_probes(naive.checkpoint);
            const auto projected = trainkit::train_projected(tc, std::move(probes));
            const auto naive_deltas = naive.checkpoint.deltas();
            const auto projected_deltas = projected.checkpoint.deltas();
            const auto rep = metrics::leakage_report(naive_deltas, projected_deltas,
                                                     projected.checkpoint.probes);
            for (std::size_t l = 0; l < rep.rho_naive.size(); ++l) {
                table.start_row();
                table.cell(seed);
                table.cell(static_cast<std::int64_t>(l));
                table.cell(rep.rho_naive[l]);
                table.cell(rep.rho_projected[l]);
                table.cell(rep.reduction[l]);
                table.cell(static_cast<bool>(rep.reduction_saturated[l]));
            }
        }
        const fs::path path = dir / (std::string("leakage_sweep") + ext);
        report::write_report(table, path, format);
        std::cout << "wrote " << path.string() << " (" << table.rows.size() << " rows)\n";
        return kExitOk;
    }

    throw ConfigError("sweep: unknown kind '" + kind + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GRASP numerical laboratory: planted-spurious-factor "
                 "identification and gradient-projection training"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string mode = "naive";
    std::string input_path;
    std::string naive_ckpt;
    std::string projected_ckpt;
    std::string sweep_kind;

    auto add_common = [&](CLI::App* sub, bool with_format = false) {
        sub->add_option("--config", args.config_path, "JSON experiment config");
        sub->add_option("--seed", args.seed, "override the config seed list");
        sub->add_option("--out", args.out_dir, "output directory");
        sub->add_flag("--force", args.force, "allow overwriting existing files");
        if (with_format) {
            sub->add_option("--format", args.format, "report format: csv|text")
                ->check(CLI::IsMember({"csv", "text"}));
        }
    };

    auto* gen = app.add_subcommand("gen", "generate and persist a gradient stream");
    add_common(gen);

    auto* identify_cmd =
        app.add_subcommand("identify", "probe + bound report for a stream or checkpoint");
    identify_cmd->add_option("input", input_path, "stream or checkpoint container")
        ->required();

    auto* train = app.add_subcommand("train", "run the naive or projected pipeline");
    add_common(train);
    train->add_option("--mode", mode, "naive|grasp")
        ->check(CLI::IsMember({"naive", "grasp"}));
    train->add_option("--naive-ckpt", naive_ckpt,
                      "reuse an existing naive checkpoint for stage 2");

    auto* leakage = app.add_subcommand("leakage", "per-site alignment-ratio comparison");
    leakage->add_option("naive", naive_ckpt, "naive checkpoint")->required();
    leakage->add_option("projected", projected_ckpt, "projected checkpoint")->required();
    leakage->add_option("--out", args.out_dir, "output directory ('-' to skip file)");
    leakage->add_option("--format", args.format, "report format: csv|text")
        ->check(CLI::IsMember({"csv", "text"}));

    auto* sweep = app.add_subcommand("sweep", "batch grids to CSV");
    add_common(sweep, true);
    sweep->add_option("--kind", sweep_kind, "identify|selectivity|leakage")
        ->required()
        ->check(CLI::IsMember({"identify", "selectivity", "leakage"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed()) return cmd_gen(args);
        if (identify_cmd->parsed()) return cmd_identify(input_path);
        if (train->parsed()) return cmd_train(args, mode, naive_ckpt);
        if (leakage->parsed()) return cmd_leakage(args, naive_ckpt, projected_ckpt);
        if (sweep->parsed()) return cmd_sweep(args, sweep_kind);
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const DegenerateInputError& e) {
        std::cerr << "degenerate input: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what();
        if (e.byte_offset >= 0) {
            std::cerr << " (byte offset " << e.byte_offset << ")";
        }
        std::cerr << "\n";
        return kExitIo;
    } catch (const CheckError& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return kExitCheck;
    } catch (const ParameterError& e) {
        std::cerr << "invalid parameters: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOther;
    }
}
