#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "grasp/identify.hpp"
#include "grasp/synthgrad.hpp"
#include "grasp/trainkit.hpp"

namespace grasp::metrics {

// rho = |<delta_w, u v^T>| / |delta_w|_F in [0, 1]. Equals sigma_1/|.|_F
// when the probe is delta_w's own top triple; the leakage diagnostic for
// optimizer interaction.
double rank1_alignment_ratio(const linalg::Matrix& delta_w,
                             const identify::ProbePair& probe);

// How much of a decomposed gradient the projection removes, measured
// against the known spurious/task parts. The removed mass of each part is
// the magnitude of its rank-1 coefficient along the probe (projector
// linearity makes the per-part removals sum to the total removal exactly).
struct SelectivityReport {
    double spurious_removed_fraction = 0.0;
    double task_removed_fraction = 0.0;
    double selectivity_ratio = 0.0;  // removed-spurious / removed-task magnitude
    bool saturated = false;          // removed-task magnitude below 1e-15
    // params echo, filled by sweeps
    double alpha_mean = 0.0;
    double mu_frob = 0.0;
    int r_t = 0;
    std::int64_t n = 0;
};

SelectivityReport removal_fractions(const synthgrad::GradientSample& sample,
                                    const identify::ProbePair& probe);

// Selectivity sweep over task rank at a fixed surprise ratio. The measured
// per-gradient selectivity sits far above the guarantee; the certified
// floor (quarter-constant instantiation of the ratio lower bound,
// alpha_mean*sqrt(r_t)/(4*mu_frob)) is what grows with task complexity, and
// every row must clear its floor.
struct SelectivityGrid {
    std::vector<int> r_t_values;
    double alpha_mean = 100.0;
    double mu_frob = 1.0;
    double tau = 1.0;
    double alpha_jitter = 0.0;
    std::int64_t n = 1000;
    int d_out = 64;
    int d_in = 64;
};

struct SelectivitySweepRow {
    int r_t = 0;
    double mean_spurious_removed_fraction = 0.0;
    double mean_task_removed_fraction = 0.0;
    double measured_ratio = 0.0;    // mean removed-spurious / mean removed-task mass
    double guaranteed_floor = 0.0;  // alpha_mean*sqrt(r_t)/(4*mu_frob)
    bool clears_floor = false;
    bool degenerate = false;  // r_t == 1: single-mode task, margin vanishes
    std::int64_t samples = 0;
    int seed_count = 0;
};

std::vector<SelectivitySweepRow> selectivity_sweep(const SelectivityGrid& grid,
                                                   std::span<const std::uint64_t> seeds,
                                                   int workers = 0);

// Per-site leakage comparison between a naive and a projected checkpoint,
// both measured against the same frozen probes.
struct AlignmentReport {
    std::vector<double> rho_naive;
    std::vector<double> rho_projected;
    std::vector<double> reduction;        // rho_naive / max(rho_projected, floor)
    std::vector<bool> reduction_saturated;  // projected rho at numerical zero
    double naive_mean = 0.0, naive_median = 0.0, naive_max = 0.0;
    double projected_mean = 0.0, projected_median = 0.0, projected_max = 0.0;
    double mean_reduction = 0.0, median_reduction = 0.0, min_reduction = 0.0;
    static constexpr double kRhoFloor = 1e-12;
};

AlignmentReport leakage_report(std::span<const linalg::Matrix> naive_deltas,
                               std::span<const linalg::Matrix> projected_deltas,
                               std::span<const identify::ProbePair> probes);

// <Delta W_l, u_s v_s^T> per site against the planted ground truth.
std::vector<double> spurious_drift(const trainkit::Checkpoint& ckpt,
                                   const synthgrad::SpuriousSpec& truth);

}  // namespace grasp::metrics
