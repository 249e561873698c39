#include "grasp/identify.hpp"

#include <atomic>
#include <cmath>
#include <string>
#include <thread>

namespace grasp::identify {

ProbePair extract_probe(const linalg::Matrix& delta_w, int site_id, double tol,
                        int max_iter) {
    auto triple = linalg::top1_svd(delta_w, tol, max_iter);
    return ProbePair{std::move(triple.u), std::move(triple.v), triple.sigma, site_id};
}

double alignment(const ProbePair& probe, const synthgrad::SpuriousSpec& truth) {
    if (probe.u.dim() != truth.u_s.dim() || probe.v.dim() != truth.v_s.dim()) {
        throw DimensionError("alignment: probe dims " + std::to_string(probe.u.dim()) +
                             "x" + std::to_string(probe.v.dim()) + " vs truth " +
                             std::to_string(truth.u_s.dim()) + "x" +
                             std::to_string(truth.v_s.dim()));
    }
    return std::abs(probe.u.dot(truth.u_s)) * std::abs(probe.v.dot(truth.v_s));
}

BoundReport theorem1_bound(double alpha_mean, double mu_frob, int r_t, double tau,
                           std::int64_t n, double noise_const) {
    if (!(alpha_mean > 0.0) || !(mu_frob > 0.0)) {
        throw ParameterError("theorem1_bound: alpha_mean and mu_frob must be positive");
    }
    if (r_t < 1) {
        throw ParameterError("theorem1_bound: r_t must be >= 1");
    }
    if (tau < 0.0 || noise_const < 0.0) {
        throw ParameterError("theorem1_bound: tau and noise_const must be >= 0");
    }
    if (n < 1) {
        throw ParameterError("theorem1_bound: n must be >= 1");
    }

    BoundReport report;
    report.structural_term =
        2.0 * mu_frob / (alpha_mean * std::sqrt(static_cast<double>(r_t)));
    report.noise_term = tau / (alpha_mean * std::sqrt(static_cast<double>(n)));
    report.noise_const = noise_const;
    report.bound_value = 1.0 - report.structural_term - noise_const * report.noise_term;
    report.n = n;
    return report;
}

namespace {

struct GridPoint {
    std::int64_t n;
    int r_t;
    double alpha_mean;
    double tau;
};

IdentifySweepRow run_point(const IdentifySweepGrid& grid, const GridPoint& point,
                           std::uint64_t seed) {
    const auto spurious = synthgrad::SpuriousSpec::random(
        grid.d_out, grid.d_in, point.alpha_mean, grid.alpha_jitter, seed);
    const auto mu = synthgrad::make_task_mean(
        grid.d_out, grid.d_in, point.r_t, grid.mu_frob, seed,
        grid.orthogonal_task ? &spurious.u_s : nullptr,
        grid.orthogonal_task ? &spurious.v_s : nullptr);
    const synthgrad::TaskSpec task(mu, point.r_t, grid.mu_frob, point.tau);

    const auto delta = synthgrad::accumulate_stream(spurious, task, seed, point.n);
    const auto probe = extract_probe(delta, 0);
    const auto bound = theorem1_bound(point.alpha_mean, grid.mu_frob, point.r_t,
                                      point.tau, point.n, grid.noise_const);

    IdentifySweepRow row;
    row.n = point.n;
    row.r_t = point.r_t;
    row.alpha_mean = point.alpha_mean;
    row.tau = point.tau;
    row.seed = seed;
    row.alignment = alignment(probe, spurious);
    row.bound_value = bound.bound_value;
    row.structural_term = bound.structural_term;
    row.noise_term = bound.noise_term;
    row.surprise_valid =
        synthgrad::surprise_valid(point.alpha_mean, grid.mu_frob, point.tau, point.n);
    return row;
}

}  // namespace

std::vector<IdentifySweepRow> identification_sweep(const IdentifySweepGrid& grid,
                                                   std::span<const std::uint64_t> seeds,
                                                   int workers) {
    if (grid.n_values.empty() || grid.r_t_values.empty() || grid.alpha_means.empty() ||
        grid.tau_values.empty() || seeds.empty()) {
        throw ParameterError("identification_sweep: empty grid axis or seed list");
    }

    std::vector<GridPoint> points;
    for (auto n : grid.n_values) {
        for (auto r_t : grid.r_t_values) {
            for (auto alpha : grid.alpha_means) {
                for (auto tau : grid.tau_values) {
                    if (!synthgrad::surprise_valid(alpha, grid.mu_frob, tau, n)) {
                        throw CheckError(
                            "identification_sweep: grid point (n=" + std::to_string(n) +
                            ", r_t=" + std::to_string(r_t) +
                            ", alpha_mean=" + std::to_string(alpha) +
                            ", tau=" + std::to_string(tau) +
                            ") violates the surprise condition (needs alpha_mean >= "
                            "10*mu_frob and alpha_mean >= 10*tau/sqrt(n))");
                    }
                    points.push_back(GridPoint{n, r_t, alpha, tau});
                }
            }
        }
    }

    // One job per (point, seed); each job writes its own slot, so the output
    // order is grid order no matter how the pool schedules.
    const std::size_t jobs = points.size() * seeds.size();
    std::vector<IdentifySweepRow> rows(jobs);

    int pool = workers > 0 ? workers
                           : static_cast<int>(std::thread::hardware_concurrency());
    if (pool < 1) {
        pool = 1;
    }
    pool = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(pool), jobs));

    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t j = cursor.fetch_add(1);
            if (j >= jobs) {
                return;
            }
            const auto& point = points[j / seeds.size()];
            const auto seed = seeds[j % seeds.size()];
            rows[j] = run_point(grid, point, seed);
        }
    };

    if (pool == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(pool));
        for (int t = 0; t < pool; ++t) {
            threads.emplace_back(worker);
        }
        for (auto& t : threads) {
            t.join();
        }
    }
    return rows;
}

}  // namespace grasp::identify
