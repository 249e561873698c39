#include "grasp/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "grasp/project.hpp"

namespace grasp::metrics {

namespace {

constexpr double kSaturationFloor = 1e-15;

double median_of(std::vector<double> values) {
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) {
        return values[mid];
    }
    return 0.5 * (values[mid - 1] + values[mid]);
}

double mean_of(std::span<const double> values) {
    double s = 0.0;
    for (double v : values) {
        s += v;
    }
    return values.empty() ? 0.0 : s / static_cast<double>(values.size());
}

}  // namespace

double rank1_alignment_ratio(const linalg::Matrix& delta_w,
                             const identify::ProbePair& probe) {
    const double norm = linalg::frobenius_norm(delta_w);
    if (norm == 0.0) {
        throw DegenerateInputError("rank1_alignment_ratio: zero update matrix");
    }
    const double ratio = std::abs(project::spurious_component(delta_w, probe)) / norm;
    // Cauchy-Schwarz bounds the exact value by 1; clamp rounding spill.
    return std::min(ratio, 1.0);
}

SelectivityReport removal_fractions(const synthgrad::GradientSample& sample,
                                    const identify::ProbePair& probe) {
    if (sample.g.rows() != probe.u.dim() || sample.g.cols() != probe.v.dim()) {
        throw DimensionError("removal_fractions: sample vs probe shape mismatch");
    }

    const double removed_spurious =
        std::abs(project::spurious_component(sample.g_spurious, probe));
    const double removed_task =
        std::abs(project::spurious_component(sample.g_task, probe));
    const double norm_spurious = linalg::frobenius_norm(sample.g_spurious);
    const double norm_task = linalg::frobenius_norm(sample.g_task);

    SelectivityReport report;
    report.spurious_removed_fraction =
        norm_spurious > kSaturationFloor ? removed_spurious / norm_spurious : 0.0;
    report.task_removed_fraction =
        norm_task > kSaturationFloor ? removed_task / norm_task : 0.0;
    if (removed_task > kSaturationFloor) {
        report.selectivity_ratio = removed_spurious / removed_task;
    } else {
        report.selectivity_ratio = 0.0;
        report.saturated = true;
    }
    return report;
}

namespace {

SelectivitySweepRow run_selectivity_point(const SelectivityGrid& grid, int r_t,
                                          std::span<const std::uint64_t> seeds) {
    double sum_frac_spurious = 0.0;
    double sum_frac_task = 0.0;
    double sum_removed_spurious = 0.0;
    double sum_removed_task = 0.0;
    std::int64_t count = 0;

    for (const auto seed : seeds) {
        const auto spurious = synthgrad::SpuriousSpec::random(
            grid.d_out, grid.d_in, grid.alpha_mean, grid.alpha_jitter, seed);
        const auto mu = synthgrad::make_task_mean(grid.d_out, grid.d_in, r_t,
                                                  grid.mu_frob, seed);
        const synthgrad::TaskSpec task(mu, r_t, grid.mu_frob, grid.tau);
        const auto delta = synthgrad::accumulate_stream(spurious, task, seed, grid.n);
        const auto probe = identify::extract_probe(delta, 0);

        for (std::int64_t i = 0; i < grid.n; ++i) {
            const auto sample = synthgrad::sample_gradient(spurious, task, seed, i);
            const auto report = removal_fractions(sample, probe);
            sum_frac_spurious += report.spurious_removed_fraction;
            sum_frac_task += report.task_removed_fraction;
            sum_removed_spurious +=
                std::abs(project::spurious_component(sample.g_spurious, probe));
            sum_removed_task +=
                std::abs(project::spurious_component(sample.g_task, probe));
            ++count;
        }
    }

    SelectivitySweepRow row;
    row.r_t = r_t;
    row.samples = count;
    row.seed_count = static_cast<int>(seeds.size());
    row.mean_spurious_removed_fraction = sum_frac_spurious / static_cast<double>(count);
    row.mean_task_removed_fraction = sum_frac_task / static_cast<double>(count);
    row.measured_ratio = sum_removed_task > kSaturationFloor
                             ? sum_removed_spurious / sum_removed_task
                             : 0.0;
    row.guaranteed_floor =
        grid.alpha_mean * std::sqrt(static_cast<double>(r_t)) / (4.0 * grid.mu_frob);
    row.clears_floor = row.measured_ratio >= row.guaranteed_floor;
    row.degenerate = (r_t == 1);
    return row;
}

}  // namespace

std::vector<SelectivitySweepRow> selectivity_sweep(const SelectivityGrid& grid,
                                                   std::span<const std::uint64_t> seeds,
                                                   int workers) {
    if (grid.r_t_values.empty() || seeds.empty()) {
        throw ParameterError("selectivity_sweep: empty grid or seed list");
    }
    for (int r_t : grid.r_t_values) {
        if (!synthgrad::surprise_valid(grid.alpha_mean, grid.mu_frob, grid.tau, grid.n)) {
            throw CheckError("selectivity_sweep: grid (alpha_mean=" +
                             std::to_string(grid.alpha_mean) +
                             ", tau=" + std::to_string(grid.tau) +
                             ", n=" + std::to_string(grid.n) +
                             ") violates the surprise condition");
        }
        if (r_t < 1 || r_t > std::min(grid.d_out, grid.d_in)) {
            throw ParameterError("selectivity_sweep: r_t " + std::to_string(r_t) +
                                 " out of range");
        }
    }

    std::vector<SelectivitySweepRow> rows(grid.r_t_values.size());
    int pool = workers > 0 ? workers
                           : static_cast<int>(std::thread::hardware_concurrency());
    pool = std::max(1, std::min<int>(pool, static_cast<int>(rows.size())));

    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t j = cursor.fetch_add(1);
            if (j >= rows.size()) {
                return;
            }
            rows[j] = run_selectivity_point(grid, grid.r_t_values[j], seeds);
        }
    };
    if (pool == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < pool; ++t) {
            threads.emplace_back(worker);
        }
        for (auto& t : threads) {
            t.join();
        }
    }
    return rows;
}

AlignmentReport leakage_report(std::span<const linalg::Matrix> naive_deltas,
                               std::span<const linalg::Matrix> projected_deltas,
                               std::span<const identify::ProbePair> probes) {
    if (naive_deltas.size() != projected_deltas.size() ||
        naive_deltas.size() != probes.size() || probes.empty()) {
        throw ParameterError("leakage_report: need matching non-empty site lists");
    }

    AlignmentReport report;
    for (std::size_t l = 0; l < probes.size(); ++l) {
        const double rho_n = rank1_alignment_ratio(naive_deltas[l], probes[l]);
        const double rho_p = rank1_alignment_ratio(projected_deltas[l], probes[l]);
        report.rho_naive.push_back(rho_n);
        report.rho_projected.push_back(rho_p);
        const bool saturated = rho_p <= AlignmentReport::kRhoFloor;
        report.reduction_saturated.push_back(saturated);
        report.reduction.push_back(rho_n /
                                   std::max(rho_p, AlignmentReport::kRhoFloor));
    }

    report.naive_mean = mean_of(report.rho_naive);
    report.naive_median = median_of(report.rho_naive);
    report.naive_max = *std::max_element(report.rho_naive.begin(), report.rho_naive.end());
    report.projected_mean = mean_of(report.rho_projected);
    report.projected_median = median_of(report.rho_projected);
    report.projected_max =
        *std::max_element(report.rho_projected.begin(), report.rho_projected.end());
    report.mean_reduction = mean_of(report.reduction);
    report.median_reduction = median_of(report.reduction);
    report.min_reduction =
        *std::min_element(report.reduction.begin(), report.reduction.end());
    return report;
}

std::vector<double> spurious_drift(const trainkit::Checkpoint& ckpt,
                                   const synthgrad::SpuriousSpec& truth) {
    std::vector<double> drift;
    const auto deltas = ckpt.deltas();
    for (std::size_t l = 0; l < deltas.size(); ++l) {
        const auto& d = deltas[l];
        if (d.rows() != truth.u_s.dim() || d.cols() != truth.v_s.dim()) {
            throw DimensionError("spurious_drift: site " + std::to_string(l) +
                                 " shape vs truth mismatch");
        }
        double s = 0.0;
        for (int i = 0; i < d.rows(); ++i) {
            double row = 0.0;
            for (int j = 0; j < d.cols(); ++j) {
                row += d(i, j) * truth.v_s[j];
            }
            s += truth.u_s[i] * row;
        }
        drift.push_back(s);
    }
    return drift;
}

}  // namespace grasp::metrics
