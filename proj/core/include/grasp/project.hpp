#pragma once

#include <span>
#include <utility>
#include <vector>

#include "grasp/identify.hpp"
#include "grasp/linalg.hpp"

namespace grasp::project {

using identify::ProbePair;

// One frozen rank-1 constraint per site over the flattened parameter space.
// site_shapes fixes the flat layout (segments concatenated in order); each
// probe pins the constraint u_l v_l^T inside the segment of its site_id.
// With one unit probe per distinct site the constraint Gram matrix is the
// identity; verify_gram_identity measures any deviation, and duplicate or
// non-unit probes are representable so that violation paths stay testable.
class ProjectionPlan {
public:
    ProjectionPlan(std::vector<ProbePair> probes,
                   std::vector<std::pair<int, int>> site_shapes);

    const std::vector<ProbePair>& probes() const { return probes_; }
    const std::vector<std::pair<int, int>>& site_shapes() const { return site_shapes_; }

    std::size_t flat_size() const { return flat_size_; }
    std::size_t site_offset(int site) const;
    std::size_t site_extent(int site) const;

private:
    std::vector<ProbePair> probes_;
    std::vector<std::pair<int, int>> site_shapes_;
    std::vector<std::size_t> offsets_;
    std::size_t flat_size_ = 0;
};

// The per-site constraint statistic h_l(theta) = u^T W v = <W, u v^T>.
double spurious_component(const linalg::Matrix& w, const ProbePair& probe);

struct ProjectedGradient {
    linalg::Matrix g_projected;
    double removed_coefficient = 0.0;  // <g, u v^T>
};

// Fast path: g - <g, u v^T> u v^T. O(d_out*d_in) with no Gram solve.
ProjectedGradient project_site_gradient(const linalg::Matrix& g, const ProbePair& probe);

// The general null-space projector (I - J^T (J J^T)^-1 J) v through an
// explicit L x L Gram solve. Verification path only; training uses the fast
// path, which equals this whenever the Gram identity holds.
std::vector<double> general_projector(const ProjectionPlan& plan,
                                      std::span<const double> v_flat);

struct GramReport {
    linalg::Matrix gram;           // L x L computed Gram matrix J J^T
    double max_abs_deviation = 0.0;  // max |gram - I|
};

GramReport verify_gram_identity(const ProjectionPlan& plan);

}  // namespace grasp::project
