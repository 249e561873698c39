#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "grasp/linalg.hpp"
#include "grasp/synthgrad.hpp"

namespace grasp::identify {

// The unsupervised probe: top-1 singular triple of an accumulated update at
// one site. Frozen once extracted.
struct ProbePair {
    linalg::UnitVector u;
    linalg::UnitVector v;
    double sigma = 0.0;
    int site_id = 0;
};

ProbePair extract_probe(const linalg::Matrix& delta_w, int site_id,
                        double tol = 1e-13, int max_iter = 5000);

// |u1.u_s| * |v1.v_s|, the exact quantity the identification bound controls.
double alignment(const ProbePair& probe, const synthgrad::SpuriousSpec& truth);

// Identification bound: 1 - structural - noise_const * noise, with
//   structural = 2*mu_frob / (alpha_mean * sqrt(r_t))
//   noise      = tau / (alpha_mean * sqrt(n))
// The noise constant is not pinned by the theory; it is configuration
// (default 3.0) and the sweep reports the empirical fit alongside.
struct BoundReport {
    double structural_term = 0.0;
    double noise_term = 0.0;           // unit-constant term tau/(alpha_mean*sqrt(n))
    double noise_const = 0.0;
    double bound_value = 0.0;          // 1 - structural - noise_const*noise
    std::int64_t n = 0;
    std::optional<double> alignment;   // measured value, when paired with data
};

BoundReport theorem1_bound(double alpha_mean, double mu_frob, int r_t, double tau,
                           std::int64_t n, double noise_const = 3.0);

// Grid for the identification sweep. Every combination of the four axes is
// one grid point; all points must be surprise-valid or the sweep refuses to
// run. mu_frob stays fixed so alpha_means doubles as the surprise ratio axis.
struct IdentifySweepGrid {
    std::vector<std::int64_t> n_values;
    std::vector<int> r_t_values;
    std::vector<double> alpha_means;
    std::vector<double> tau_values;
    int d_out = 64;
    int d_in = 64;
    double mu_frob = 1.0;
    double alpha_jitter = 0.0;
    bool orthogonal_task = false;  // force task modes orthogonal to the planted pair
    double noise_const = 3.0;
};

struct IdentifySweepRow {
    std::int64_t n = 0;
    int r_t = 0;
    double alpha_mean = 0.0;
    double tau = 0.0;
    std::uint64_t seed = 0;
    double alignment = 0.0;
    double bound_value = 0.0;
    double structural_term = 0.0;
    double noise_term = 0.0;
    bool surprise_valid = false;
};

// One row per (grid point, seed), in grid-then-seed order regardless of the
// number of workers. Grid order is n, then r_t, then alpha_mean, then tau.
std::vector<IdentifySweepRow> identification_sweep(const IdentifySweepGrid& grid,
                                                   std::span<const std::uint64_t> seeds,
                                                   int workers = 0);

}  // namespace grasp::identify
