#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "grasp/linalg.hpp"

namespace grasp::synthgrad {

// Planted ground-truth spurious factor: fixed unit read/write directions
// and a positive per-example coefficient with mean alpha_mean. Coefficients
// are drawn uniform on [mean*(1-jitter), mean*(1+jitter)]; jitter < 1 keeps
// every draw positive.
struct SpuriousSpec {
    SpuriousSpec(linalg::UnitVector u, linalg::UnitVector v, double alpha_mean,
                 double alpha_jitter);

    static SpuriousSpec random(int d_out, int d_in, double alpha_mean,
                               double alpha_jitter, std::uint64_t seed);

    linalg::UnitVector u_s;
    linalg::UnitVector v_s;
    double alpha_mean = 0.0;
    double alpha_jitter = 0.0;
};

// Coherent task mean of effective rank r_t (equal singular values
// mu_frob/sqrt(r_t)) plus per-example Gaussian noise of total scale tau.
struct TaskSpec {
    TaskSpec(linalg::Matrix mu, int r_t, double mu_frob, double tau);

    linalg::Matrix mu_t;
    int r_t = 0;
    double mu_frob = 0.0;
    double tau = 0.0;
};

// Orthonormal-mode task mean: sum of r_t equal-weight rank-1 modes from
// seeded Gram-Schmidt on Gaussian vectors. When avoid_* are given the modes
// are made exactly orthogonal to those directions (clean test regime);
// otherwise overlap with any fixed direction is the generic O(1/sqrt(d)).
linalg::Matrix make_task_mean(int d_out, int d_in, int r_t, double mu_frob,
                              std::uint64_t seed,
                              const linalg::UnitVector* avoid_u = nullptr,
                              const linalg::UnitVector* avoid_v = nullptr);

struct GradientSample {
    linalg::Matrix g;
    linalg::Matrix g_spurious;
    linalg::Matrix g_task;
    double alpha = 0.0;
};

// Pure in (seed, index): the same pair always yields the bitwise-identical
// sample, so streams can be partitioned across workers.
GradientSample sample_gradient(const SpuriousSpec& spurious, const TaskSpec& task,
                               std::uint64_t seed, std::int64_t index);

// Plain sum of per-example gradients (the accumulation proportionality
// constant is 1; the alignment quantity downstream is scale-invariant).
linalg::Matrix accumulate_delta(std::span<const GradientSample> samples);

// Sum of sample_gradient(spurious, task, seed, 0..n-1).g in index order,
// without materializing the stream. Bitwise-equal to accumulate_delta over
// the same samples.
linalg::Matrix accumulate_stream(const SpuriousSpec& spurious, const TaskSpec& task,
                                 std::uint64_t seed, std::int64_t n);

// Assumption-3 regime flag: alpha_mean >= 10*mu_frob and
// alpha_mean >= 10*tau/sqrt(n). Bound checks refuse configurations that
// fail it.
bool surprise_valid(double alpha_mean, double mu_frob, double tau, std::int64_t n);

}  // namespace grasp::synthgrad
