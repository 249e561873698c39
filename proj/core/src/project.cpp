#include "grasp/project.hpp"

#include <cmath>
#include <string>

namespace grasp::project {

namespace {

// Unnormalized inner products against raw probe data; correct for non-unit
// fixture probes as well.
double dot_raw(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

}  // namespace

ProjectionPlan::ProjectionPlan(std::vector<ProbePair> probes,
                               std::vector<std::pair<int, int>> site_shapes)
    : probes_(std::move(probes)), site_shapes_(std::move(site_shapes)) {
    if (site_shapes_.empty()) {
        throw ParameterError("ProjectionPlan: no sites");
    }
    if (probes_.empty()) {
        throw ParameterError("ProjectionPlan: no probes");
    }
    offsets_.reserve(site_shapes_.size());
    for (const auto& [d_out, d_in] : site_shapes_) {
        if (d_out <= 0 || d_in <= 0) {
            throw ParameterError("ProjectionPlan: non-positive site shape");
        }
        offsets_.push_back(flat_size_);
        flat_size_ += static_cast<std::size_t>(d_out) * static_cast<std::size_t>(d_in);
    }
    for (const auto& probe : probes_) {
        if (probe.site_id < 0 ||
            probe.site_id >= static_cast<int>(site_shapes_.size())) {
            throw ParameterError("ProjectionPlan: probe site_id " +
                                 std::to_string(probe.site_id) + " out of range");
        }
        const auto& [d_out, d_in] = site_shapes_[static_cast<std::size_t>(probe.site_id)];
        if (probe.u.dim() != d_out || probe.v.dim() != d_in) {
            throw DimensionError("ProjectionPlan: probe dims " +
                                 std::to_string(probe.u.dim()) + "x" +
                                 std::to_string(probe.v.dim()) + " vs site " +
                                 std::to_string(probe.site_id) + " shape " +
                                 std::to_string(d_out) + "x" + std::to_string(d_in));
        }
    }
}

std::size_t ProjectionPlan::site_offset(int site) const {
    return offsets_[static_cast<std::size_t>(site)];
}

std::size_t ProjectionPlan::site_extent(int site) const {
    const auto& [d_out, d_in] = site_shapes_[static_cast<std::size_t>(site)];
    return static_cast<std::size_t>(d_out) * static_cast<std::size_t>(d_in);
}

double spurious_component(const linalg::Matrix& w, const ProbePair& probe) {
    if (w.rows() != probe.u.dim() || w.cols() != probe.v.dim()) {
        throw DimensionError("spurious_component: matrix " + std::to_string(w.rows()) +
                             "x" + std::to_string(w.cols()) + " vs probe " +
                             std::to_string(probe.u.dim()) + "x" +
                             std::to_string(probe.v.dim()));
    }
    // u^T W v, evaluated as u . (W v).
    double s = 0.0;
    for (int i = 0; i < w.rows(); ++i) {
        double row = 0.0;
        for (int j = 0; j < w.cols(); ++j) {
            row += w(i, j) * probe.v[j];
        }
        s += probe.u[i] * row;
    }
    return s;
}

ProjectedGradient project_site_gradient(const linalg::Matrix& g, const ProbePair& probe) {
    ProjectedGradient out;
    out.removed_coefficient = spurious_component(g, probe);
    out.g_projected = g;
    linalg::add_scaled_outer(out.g_projected, -out.removed_coefficient, probe.u, probe.v);
    return out;
}

std::vector<double> general_projector(const ProjectionPlan& plan,
                                      std::span<const double> v_flat) {
    if (v_flat.size() != plan.flat_size()) {
        throw DimensionError("general_projector: flat vector length " +
                             std::to_string(v_flat.size()) + " vs plan " +
                             std::to_string(plan.flat_size()));
    }

    const auto& probes = plan.probes();
    const int n_constraints = static_cast<int>(probes.size());

    // J v: constraint row l dotted with the site segment it lives in.
    std::vector<double> jv(static_cast<std::size_t>(n_constraints), 0.0);
    for (int l = 0; l < n_constraints; ++l) {
        const auto& p = probes[static_cast<std::size_t>(l)];
        const auto seg = v_flat.subspan(plan.site_offset(p.site_id),
                                        plan.site_extent(p.site_id));
        double s = 0.0;
        std::size_t k = 0;
        for (int i = 0; i < p.u.dim(); ++i) {
            for (int j = 0; j < p.v.dim(); ++j, ++k) {
                s += seg[k] * p.u[i] * p.v[j];
            }
        }
        jv[static_cast<std::size_t>(l)] = s;
    }

    const auto gram = verify_gram_identity(plan).gram;
    std::vector<double> lambda;
    try {
        lambda = linalg::solve_linear(gram, jv);
    } catch (const RankDeficiencyError&) {
        // Identify which two constraint rows are (anti)parallel and name them.
        for (int a = 0; a < n_constraints; ++a) {
            for (int b = a + 1; b < n_constraints; ++b) {
                const double gaa = gram(a, a);
                const double gbb = gram(b, b);
                const double gab = gram(a, b);
                if (gab * gab >= (1.0 - 1e-10) * gaa * gbb && gaa > 0.0 && gbb > 0.0) {
                    throw RankDeficiencyError(
                        "general_projector: constraints " + std::to_string(a) + " and " +
                            std::to_string(b) + " (sites " +
                            std::to_string(probes[static_cast<std::size_t>(a)].site_id) +
                            ", " +
                            std::to_string(probes[static_cast<std::size_t>(b)].site_id) +
                            ") are linearly dependent",
                        a, b);
                }
            }
        }
        throw;
    }

    // v - J^T lambda.
    std::vector<double> out(v_flat.begin(), v_flat.end());
    for (int l = 0; l < n_constraints; ++l) {
        const auto& p = probes[static_cast<std::size_t>(l)];
        const double c = lambda[static_cast<std::size_t>(l)];
        if (c == 0.0) continue;
        std::size_t k = plan.site_offset(p.site_id);
        for (int i = 0; i < p.u.dim(); ++i) {
            const double cu = c * p.u[i];
            for (int j = 0; j < p.v.dim(); ++j, ++k) {
                out[k] -= cu * p.v[j];
            }
        }
    }
    return out;
}

GramReport verify_gram_identity(const ProjectionPlan& plan) {
    const auto& probes = plan.probes();
    const int n = static_cast<int>(probes.size());
    GramReport report;
    report.gram = linalg::Matrix(n, n);

    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            const auto& pa = probes[static_cast<std::size_t>(a)];
            const auto& pb = probes[static_cast<std::size_t>(b)];
            double value = 0.0;
            // Rows at different sites occupy disjoint flat segments, so their
            // inner product is structurally zero; same-site rows reduce to
            // (u_a.u_b)(v_a.v_b) by the outer-product identity.
            if (pa.site_id == pb.site_id) {
                value = dot_raw(pa.u.data(), pb.u.data()) *
                        dot_raw(pa.v.data(), pb.v.data());
            }
            report.gram(a, b) = value;
            const double target = (a == b) ? 1.0 : 0.0;
            report.max_abs_deviation =
                std::max(report.max_abs_deviation, std::abs(value - target));
        }
    }
    return report;
}

}  // namespace grasp::project
