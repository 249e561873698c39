#include "grasp/synthgrad.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "grasp/rng.hpp"

namespace grasp::synthgrad {

namespace {

std::vector<double> gaussian_vector(rng::Rng& gen, int dim) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (double& x : v) {
        x = gen.gaussian();
    }
    return v;
}

// Draw `count` orthonormal vectors in R^dim, optionally all orthogonal to
// `avoid`. Re-orthogonalizes twice per vector (plain Gram-Schmidt drifts).
std::vector<std::vector<double>> orthonormal_set(rng::Rng& gen, int dim, int count,
                                                 const linalg::UnitVector* avoid) {
    std::vector<std::vector<double>> basis;
    basis.reserve(static_cast<std::size_t>(count));
    int attempts = 0;
    while (static_cast<int>(basis.size()) < count) {
        if (++attempts > 64 * count) {
            throw ParameterError("orthonormal_set: cannot draw " + std::to_string(count) +
                                 " orthonormal vectors in dimension " + std::to_string(dim));
        }
        auto cand = gaussian_vector(gen, dim);
        for (int pass = 0; pass < 2; ++pass) {
            if (avoid != nullptr) {
                double proj = 0.0;
                for (int i = 0; i < dim; ++i) {
                    proj += cand[static_cast<std::size_t>(i)] * (*avoid)[i];
                }
                for (int i = 0; i < dim; ++i) {
                    cand[static_cast<std::size_t>(i)] -= proj * (*avoid)[i];
                }
            }
            for (const auto& b : basis) {
                double proj = 0.0;
                for (std::size_t i = 0; i < cand.size(); ++i) {
                    proj += cand[i] * b[i];
                }
                for (std::size_t i = 0; i < cand.size(); ++i) {
                    cand[i] -= proj * b[i];
                }
            }
        }
        double n2 = 0.0;
        for (double x : cand) {
            n2 += x * x;
        }
        const double n = std::sqrt(n2);
        if (n < 1e-8) {
            continue;  // degenerate draw, try the next one
        }
        for (double& x : cand) {
            x /= n;
        }
        basis.push_back(std::move(cand));
    }
    return basis;
}

}  // namespace

SpuriousSpec::SpuriousSpec(linalg::UnitVector u, linalg::UnitVector v, double alpha_mean,
                           double alpha_jitter)
    : u_s(std::move(u)), v_s(std::move(v)), alpha_mean(alpha_mean), alpha_jitter(alpha_jitter) {
    if (!(alpha_mean > 0.0)) {
        throw ParameterError("SpuriousSpec: alpha_mean must be positive");
    }
    if (alpha_jitter < 0.0 || alpha_jitter >= 1.0) {
        throw ParameterError("SpuriousSpec: alpha_jitter must lie in [0, 1)");
    }
}

SpuriousSpec SpuriousSpec::random(int d_out, int d_in, double alpha_mean,
                                  double alpha_jitter, std::uint64_t seed) {
    auto gu = rng::substream(seed, "spurious-u");
    auto gv = rng::substream(seed, "spurious-v");
    return SpuriousSpec(linalg::UnitVector::normalized(gaussian_vector(gu, d_out)),
                        linalg::UnitVector::normalized(gaussian_vector(gv, d_in)),
                        alpha_mean, alpha_jitter);
}

TaskSpec::TaskSpec(linalg::Matrix mu, int r_t, double mu_frob, double tau)
    : mu_t(std::move(mu)), r_t(r_t), mu_frob(mu_frob), tau(tau) {
    if (r_t < 1 || r_t > std::min(mu_t.rows(), mu_t.cols())) {
        throw ParameterError("TaskSpec: r_t out of range");
    }
    if (!(mu_frob > 0.0)) {
        throw ParameterError("TaskSpec: mu_frob must be positive");
    }
    if (tau < 0.0) {
        throw ParameterError("TaskSpec: tau must be non-negative");
    }
    const double actual = linalg::frobenius_norm(mu_t);
    if (std::abs(actual - mu_frob) > 1e-9 * mu_frob) {
        throw ParameterError("TaskSpec: |mu_t|_F = " + std::to_string(actual) +
                             " deviates from declared " + std::to_string(mu_frob));
    }
}

linalg::Matrix make_task_mean(int d_out, int d_in, int r_t, double mu_frob,
                              std::uint64_t seed, const linalg::UnitVector* avoid_u,
                              const linalg::UnitVector* avoid_v) {
    if (r_t < 1 || r_t > std::min(d_out, d_in)) {
        throw ParameterError("make_task_mean: r_t " + std::to_string(r_t) +
                             " out of range for " + std::to_string(d_out) + "x" +
                             std::to_string(d_in));
    }
    if (!(mu_frob > 0.0)) {
        throw ParameterError("make_task_mean: mu_frob must be positive");
    }

    auto ga = rng::substream(seed, "task-left");
    auto gb = rng::substream(seed, "task-right");
    const auto left = orthonormal_set(ga, d_out, r_t, avoid_u);
    const auto right = orthonormal_set(gb, d_in, r_t, avoid_v);

    linalg::Matrix mu(d_out, d_in);
    const double weight = mu_frob / std::sqrt(static_cast<double>(r_t));
    for (int k = 0; k < r_t; ++k) {
        const auto& a = left[static_cast<std::size_t>(k)];
        const auto& b = right[static_cast<std::size_t>(k)];
        for (int i = 0; i < d_out; ++i) {
            const double wa = weight * a[static_cast<std::size_t>(i)];
            for (int j = 0; j < d_in; ++j) {
                mu(i, j) += wa * b[static_cast<std::size_t>(j)];
            }
        }
    }
    return mu;
}

GradientSample sample_gradient(const SpuriousSpec& spurious, const TaskSpec& task,
                               std::uint64_t seed, std::int64_t index) {
    const int d_out = task.mu_t.rows();
    const int d_in = task.mu_t.cols();
    if (spurious.u_s.dim() != d_out || spurious.v_s.dim() != d_in) {
        throw DimensionError("sample_gradient: spurious directions " +
                             std::to_string(spurious.u_s.dim()) + "x" +
                             std::to_string(spurious.v_s.dim()) + " vs task " +
                             std::to_string(d_out) + "x" + std::to_string(d_in));
    }

    auto galpha = rng::substream(seed, "alpha", static_cast<std::uint64_t>(index));
    const double alpha =
        spurious.alpha_mean * (1.0 + spurious.alpha_jitter * galpha.uniform(-1.0, 1.0));

    GradientSample out;
    out.alpha = alpha;
    out.g_spurious = linalg::Matrix(d_out, d_in);
    linalg::add_scaled_outer(out.g_spurious, alpha, spurious.u_s, spurious.v_s);

    // Per-entry std tau/sqrt(d_out*d_in) makes E|xi|_F^2 = tau^2 exactly.
    out.g_task = task.mu_t;
    if (task.tau > 0.0) {
        auto gxi = rng::substream(seed, "xi", static_cast<std::uint64_t>(index));
        const double entry_std =
            task.tau / std::sqrt(static_cast<double>(d_out) * static_cast<double>(d_in));
        auto data = out.g_task.data();
        for (double& x : data) {
            x += entry_std * gxi.gaussian();
        }
    }

    out.g = out.g_spurious + out.g_task;
    return out;
}

linalg::Matrix accumulate_delta(std::span<const GradientSample> samples) {
    if (samples.empty()) {
        throw ParameterError("accumulate_delta: empty sample sequence");
    }
    linalg::Matrix sum = samples.front().g;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (!samples[i].g.same_shape(sum)) {
            throw DimensionError("accumulate_delta: inconsistent sample shapes");
        }
        sum += samples[i].g;
    }
    return sum;
}

linalg::Matrix accumulate_stream(const SpuriousSpec& spurious, const TaskSpec& task,
                                 std::uint64_t seed, std::int64_t n) {
    if (n < 1) {
        throw ParameterError("accumulate_stream: n must be >= 1");
    }
    linalg::Matrix sum = sample_gradient(spurious, task, seed, 0).g;
    for (std::int64_t i = 1; i < n; ++i) {
        sum += sample_gradient(spurious, task, seed, i).g;
    }
    return sum;
}

bool surprise_valid(double alpha_mean, double mu_frob, double tau, std::int64_t n) {
    if (n < 1) {
        return false;
    }
    return alpha_mean >= 10.0 * mu_frob &&
           alpha_mean >= 10.0 * tau / std::sqrt(static_cast<double>(n));
}

}  // namespace grasp::synthgrad
