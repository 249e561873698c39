#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "grasp/identify.hpp"
#include "grasp/metrics.hpp"
#include "grasp/project.hpp"
#include "grasp/synthgrad.hpp"
#include "grasp/trainkit.hpp"
#include "oracle_helpers.hpp"

using namespace grasp;
using namespace grasp::linalg;
using namespace grasp::metrics;

namespace {

identify::ProbePair probe_from(const UnitVector& u, const UnitVector& v, int site = 0) {
    return identify::ProbePair{u, v, 1.0, site};
}

}  // namespace

TEST_CASE("rank1_alignment_ratio endpoints and oracle cross-check") {
    const auto u = UnitVector::normalized(testkit::random_values(9, 1));
    const auto v = UnitVector::normalized(testkit::random_values(7, 2));

    SUBCASE("own rank-1 plane gives exactly 1") {
        Matrix dw(9, 7);
        add_scaled_outer(dw, 4.2, u, v);
        CHECK(rank1_alignment_ratio(dw, probe_from(u, v)) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("orthogonal plane gives 0") {
        auto raw = testkit::random_values(9, 3);
        double proj = 0.0;
        for (int i = 0; i < 9; ++i) proj += raw[static_cast<std::size_t>(i)] * u[i];
        for (int i = 0; i < 9; ++i) raw[static_cast<std::size_t>(i)] -= proj * u[i];
        Matrix dw(9, 7);
        add_scaled_outer(dw, 2.0, UnitVector::normalized(raw), v);
        CHECK(rank1_alignment_ratio(dw, probe_from(u, v)) <= 1e-12);
    }
    SUBCASE("against its own top probe the ratio is sigma_1 over the Frobenius norm") {
        const auto m = testkit::random_matrix(10, 8, 4);
        const auto probe = identify::extract_probe(m, 0, 1e-14, 50000);
        const auto oracle = full_svd_oracle(m);
        const double expected = oracle[0].sigma / frobenius_norm(m);
        CHECK(rank1_alignment_ratio(m, probe) == doctest::Approx(expected).epsilon(1e-9));
    }
    SUBCASE("zero matrix is degenerate") {
        CHECK_THROWS_AS(rank1_alignment_ratio(Matrix(3, 3), probe_from(
                            UnitVector::basis(3, 0), UnitVector::basis(3, 0))),
                        DegenerateInputError);
    }
}

TEST_CASE("removal_fractions fixed regimes") {
    const int d = 12;
    const auto spurious = synthgrad::SpuriousSpec::random(d, d, 8.0, 0.0, 11);
    const auto mu = synthgrad::make_task_mean(d, d, 3, 1.0, 12, &spurious.u_s,
                                              &spurious.v_s);
    const synthgrad::TaskSpec task(mu, 3, 1.0, 0.0);
    const auto sample = synthgrad::sample_gradient(spurious, task, 13, 0);

    SUBCASE("ideal case: probe equals truth, orthogonal task") {
        const auto report =
            removal_fractions(sample, probe_from(spurious.u_s, spurious.v_s));
        CHECK(report.spurious_removed_fraction == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(report.task_removed_fraction <= 1e-12);
        // Exactly orthogonal task: nothing is removed from it, so the ratio
        // saturates instead of dividing by ~0.
        CHECK(report.saturated);
        CHECK(report.selectivity_ratio == 0.0);
    }
    SUBCASE("probe orthogonal to everything removes nothing") {
        // Orthogonalize a random direction against u_s and the task's left modes.
        auto raw = testkit::random_values(d, 14);
        auto remove = [&raw, d](const double* dir) {
            double proj = 0.0;
            for (int i = 0; i < d; ++i) proj += raw[static_cast<std::size_t>(i)] * dir[i];
            for (int i = 0; i < d; ++i) raw[static_cast<std::size_t>(i)] -= proj * dir[i];
        };
        remove(spurious.u_s.data().data());
        const auto triples = full_svd_oracle(mu);
        for (int k = 0; k < 3; ++k) {
            remove(triples[static_cast<std::size_t>(k)].u.data().data());
        }
        const auto u_perp = UnitVector::normalized(raw);
        const auto report = removal_fractions(sample, probe_from(u_perp, spurious.v_s));
        CHECK(report.spurious_removed_fraction <= 1e-10);
        CHECK(report.task_removed_fraction <= 1e-10);
        CHECK(report.saturated);  // nothing removed from the task part
    }
    SUBCASE("zero-norm task part saturates instead of dividing") {
        synthgrad::GradientSample degenerate = sample;
        degenerate.g_task = Matrix(d, d);
        degenerate.g = degenerate.g_spurious;
        const auto report =
            removal_fractions(degenerate, probe_from(spurious.u_s, spurious.v_s));
        CHECK(report.task_removed_fraction == 0.0);
        CHECK(report.saturated);
    }
    SUBCASE("shape mismatch is rejected") {
        CHECK_THROWS_AS(removal_fractions(sample, probe_from(UnitVector::basis(5, 0),
                                                             spurious.v_s)),
                        DimensionError);
    }
}

TEST_CASE("removal is linear: coefficients add exactly across the decomposition") {
    const auto spurious = synthgrad::SpuriousSpec::random(16, 16, 40.0, 0.3, 21);
    const auto mu = synthgrad::make_task_mean(16, 16, 4, 1.0, 22);
    const synthgrad::TaskSpec task(mu, 4, 1.0, 1.0);
    const auto probe = probe_from(UnitVector::normalized(testkit::random_values(16, 23)),
                                  UnitVector::normalized(testkit::random_values(16, 24)));
    for (int i = 0; i < 20; ++i) {
        const auto s = synthgrad::sample_gradient(spurious, task, 25, i);
        const double total = project::spurious_component(s.g, probe);
        const double parts = project::spurious_component(s.g_spurious, probe) +
                             project::spurious_component(s.g_task, probe);
        CHECK(std::abs(total - parts) <= 1e-12 * (1.0 + std::abs(total)));
    }
}

TEST_CASE("selective-removal Monte-Carlo: fractions against the pinned thresholds") {
    // Small-dimension replica of the acceptance criterion: mean spurious
    // removal >= 0.99, mean task removal <= 2/sqrt(r_t).
    const int d = 32;
    const int r_t = 16;
    const auto spurious = synthgrad::SpuriousSpec::random(d, d, 100.0, 0.0, 31);
    const auto mu = synthgrad::make_task_mean(d, d, r_t, 1.0, 32);
    const synthgrad::TaskSpec task(mu, r_t, 1.0, 1.0);
    const auto delta = synthgrad::accumulate_stream(spurious, task, 33, 400);
    const auto probe = identify::extract_probe(delta, 0);

    double mean_spurious = 0.0;
    double mean_task = 0.0;
    const int n = 400;
    for (int i = 0; i < n; ++i) {
        const auto s = synthgrad::sample_gradient(spurious, task, 33, i);
        const auto rep = removal_fractions(s, probe);
        mean_spurious += rep.spurious_removed_fraction / n;
        mean_task += rep.task_removed_fraction / n;
    }
    CHECK(mean_spurious >= 0.99);
    CHECK(mean_task <= 2.0 / std::sqrt(static_cast<double>(r_t)));
}

TEST_CASE("selectivity sweep rows, floors, and degenerate flag") {
    SelectivityGrid grid;
    grid.r_t_values = {1, 4, 16};
    grid.alpha_mean = 100.0;
    grid.mu_frob = 1.0;
    grid.tau = 1.0;
    grid.n = 200;
    grid.d_out = grid.d_in = 32;
    const std::vector<std::uint64_t> seeds = {1, 2, 3};

    const auto rows = selectivity_sweep(grid, seeds);
    REQUIRE(rows.size() == 3);

    CHECK(rows[0].degenerate);
    CHECK(!rows[1].degenerate);

    for (const auto& row : rows) {
        CHECK(row.samples == grid.n * static_cast<std::int64_t>(seeds.size()));
        // Quarter-constant safety margin on the ratio lower bound.
        CHECK(row.guaranteed_floor ==
              doctest::Approx(100.0 * std::sqrt(static_cast<double>(row.r_t)) / 4.0));
        CHECK(row.measured_ratio >= row.guaranteed_floor);
        CHECK(row.clears_floor);
    }
    // The certified floor grows with task complexity.
    CHECK(rows[0].guaranteed_floor < rows[1].guaranteed_floor);
    CHECK(rows[1].guaranteed_floor < rows[2].guaranteed_floor);

    SUBCASE("sweeps are deterministic across worker counts") {
        const auto serial = selectivity_sweep(grid, seeds, 1);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(rows[i].measured_ratio == serial[i].measured_ratio);
        }
    }
}

TEST_CASE("selectivity sweep rejects invalid grids") {
    SelectivityGrid grid;
    grid.r_t_values = {4};
    grid.alpha_mean = 5.0;  // violates the surprise condition
    grid.n = 100;
    const std::vector<std::uint64_t> seeds = {1};
    CHECK_THROWS_AS(selectivity_sweep(grid, seeds), CheckError);

    grid.alpha_mean = 100.0;
    grid.r_t_values.clear();
    CHECK_THROWS_AS(selectivity_sweep(grid, seeds), ParameterError);
}

TEST_CASE("leakage report aggregates and saturation") {
    const auto u = UnitVector::normalized(testkit::random_values(8, 41));
    const auto v = UnitVector::normalized(testkit::random_values(8, 42));
    const std::vector<identify::ProbePair> probes = {probe_from(u, v, 0),
                                                     probe_from(u, v, 1)};

    SUBCASE("identical checkpoints give unit reductions") {
        std::vector<Matrix> deltas;
        for (int l = 0; l < 2; ++l) {
            deltas.push_back(testkit::random_matrix(8, 8, 43 + static_cast<std::uint64_t>(l)));
        }
        const auto rep = leakage_report(deltas, deltas, probes);
        for (double r : rep.reduction) {
            CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
        }
        CHECK(rep.mean_reduction == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("numerically zero projected rho saturates the reduction") {
        Matrix aligned(8, 8);
        add_scaled_outer(aligned, 2.0, u, v);
        // Projected update exactly orthogonal to the probe plane.
        const auto raw = testkit::random_matrix(8, 8, 45);
        const auto orthogonal = project::project_site_gradient(raw, probes[0]).g_projected;
        const std::vector<Matrix> naive = {aligned, aligned};
        const std::vector<Matrix> projected = {orthogonal, orthogonal};
        const auto rep = leakage_report(naive, projected, probes);
        CHECK(rep.reduction_saturated[0]);
        CHECK(rep.reduction[0] >= 1e10);  // reported as a floor ratio, not a div by ~0
        CHECK(rep.naive_mean == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("mismatched site lists are rejected") {
        const std::vector<Matrix> one = {Matrix::identity(8)};
        const std::vector<Matrix> two = {Matrix::identity(8), Matrix::identity(8)};
        CHECK_THROWS_AS(leakage_report(one, two, probes), ParameterError);
    }
}

TEST_CASE("spurious drift per site") {
    using namespace grasp::trainkit;

    SUBCASE("zero adapters drift nowhere") {
        TrainConfig tc;
        tc.model.layer_dims = {8, 8, 8};
        tc.epochs = 0;
        tc.seed = 51;
        const auto result = train_naive(tc);
        const auto data = make_train_dataset(tc);
        const auto drift = spurious_drift(result.checkpoint, data.spurious_dirs);
        REQUIRE(drift.size() == 2);
        CHECK(drift[0] == 0.0);
        CHECK(drift[1] == 0.0);
    }
    SUBCASE("naive drift dwarfs projected drift against the planted directions") {
        TrainConfig tc;
        tc.model.layer_dims = {16, 16, 16};
        tc.n_train = 128;
        tc.n_eval = 64;
        tc.task_rank = 4;
        tc.beta = 0.3;
        tc.task_frob = 0.03;
        tc.hyper.lr = 0.1;
        tc.epochs = 150;
        tc.batch_size = 128;
        tc.seed = 55;
        const auto naive = train_naive(tc);
        const auto projected = train_projected(tc, extract_probes(naive.checkpoint));
        const auto data = make_train_dataset(tc);
        const auto naive_drift = spurious_drift(naive.checkpoint, data.spurious_dirs);
        const auto projected_drift =
            spurious_drift(projected.checkpoint, data.spurious_dirs);
        REQUIRE(naive_drift.size() == projected_drift.size());
        for (std::size_t l = 0; l < naive_drift.size(); ++l) {
            CHECK(std::abs(naive_drift[l]) >= 10.0 * std::abs(projected_drift[l]));
        }
    }
    SUBCASE("naive drift carries the sign of beta") {
        for (double beta : {5.0, -5.0}) {
            TrainConfig tc;
            tc.model.layer_dims = {12, 12};
            tc.n_train = 128;
            tc.n_eval = 32;
            tc.task_rank = 3;
            tc.beta = beta;
            tc.task_frob = 0.4;
            tc.hyper.lr = 0.05;
            tc.epochs = 6;
            tc.batch_size = 16;
            tc.seed = 52;
            const auto result = train_naive(tc);
            const auto data = make_train_dataset(tc);
            const auto drift = spurious_drift(result.checkpoint, data.spurious_dirs);
            REQUIRE(drift.size() == 1);
            CHECK(drift[0] * beta > 0.0);
        }
    }
    SUBCASE("dimension mismatch is rejected") {
        TrainConfig tc;
        tc.model.layer_dims = {8, 8};
        tc.epochs = 0;
        const auto result = train_naive(tc);
        const auto wrong = synthgrad::SpuriousSpec::random(6, 6, 1.0, 0.0, 53);
        CHECK_THROWS_AS(spurious_drift(result.checkpoint, wrong), DimensionError);
    }
}
