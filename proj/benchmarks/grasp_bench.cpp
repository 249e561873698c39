#include <benchmark/benchmark.h>

#include "grasp/identify.hpp"
#include "grasp/linalg.hpp"
#include "grasp/project.hpp"
#include "grasp/rng.hpp"
#include "grasp/synthgrad.hpp"
#include "grasp/trainkit.hpp"

namespace {

using namespace grasp;

linalg::Matrix bench_matrix(int rows, int cols, std::uint64_t seed) {
    auto gen = rng::substream(seed, "bench");
    std::vector<double> data(static_cast<std::size_t>(rows) * cols);
    for (double& x : data) {
        x = gen.gaussian();
    }
    return linalg::Matrix(rows, cols, std::move(data));
}

linalg::UnitVector bench_unit(int dim, std::uint64_t seed) {
    auto gen = rng::substream(seed, "bench-unit");
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (double& x : v) {
        x = gen.gaussian();
    }
    return linalg::UnitVector::normalized(std::move(v));
}

void BM_top1_svd(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const auto m = bench_matrix(d, d, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(linalg::top1_svd(m, 1e-12, 20000));
    }
}
BENCHMARK(BM_top1_svd)->Arg(16)->Arg(64)->Arg(128);

void BM_full_svd_oracle(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const auto m = bench_matrix(d, d, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(linalg::full_svd_oracle(m));
    }
}
BENCHMARK(BM_full_svd_oracle)->Arg(16)->Arg(32)->Arg(64);

void BM_project_fast_path(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const auto g = bench_matrix(d, d, 3);
    const project::ProbePair probe{bench_unit(d, 4), bench_unit(d, 5), 1.0, 0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(project::project_site_gradient(g, probe));
    }
}
BENCHMARK(BM_project_fast_path)->Arg(32)->Arg(128);

void BM_general_projector(benchmark::State& state) {
    const int sites = static_cast<int>(state.range(0));
    const int d = 32;
    std::vector<project::ProbePair> probes;
    std::vector<std::pair<int, int>> shapes;
    std::vector<double> flat;
    for (int l = 0; l < sites; ++l) {
        probes.push_back(project::ProbePair{bench_unit(d, 10 + l), bench_unit(d, 90 + l),
                                            1.0, l});
        shapes.push_back({d, d});
        const auto g = bench_matrix(d, d, 200 + l);
        flat.insert(flat.end(), g.data().begin(), g.data().end());
    }
    const project::ProjectionPlan plan(probes, shapes);
    for (auto _ : state) {
        benchmark::DoNotOptimize(project::general_projector(plan, flat));
    }
}
BENCHMARK(BM_general_projector)->Arg(1)->Arg(8)->Arg(64);

void BM_sample_gradient(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const auto spurious = synthgrad::SpuriousSpec::random(d, d, 100.0, 0.2, 6);
    const auto mu = synthgrad::make_task_mean(d, d, 16, 1.0, 7);
    const synthgrad::TaskSpec task(mu, 16, 1.0, 1.0);
    std::int64_t index = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(synthgrad::sample_gradient(spurious, task, 8, index++));
    }
}
BENCHMARK(BM_sample_gradient)->Arg(64);

void BM_train_step(benchmark::State& state) {
    trainkit::TrainConfig tc;
    tc.model.layer_dims = {32, 32, 32, 32, 32};
    tc.n_train = 512;
    tc.seed = 9;
    const auto data = trainkit::make_train_dataset(tc);
    auto model = trainkit::make_toy_model(tc.model, 10);
    auto opt = trainkit::make_optimizer(trainkit::OptimizerKind::sgd,
                                        trainkit::OptimizerHyper{0.01}, model);
    for (auto _ : state) {
        auto grads =
            trainkit::site_gradients(model, data.train_inputs, data.train_targets);
        trainkit::sgd_step(opt, model, grads.site_grads, nullptr);
        benchmark::DoNotOptimize(grads.loss);
    }
}
BENCHMARK(BM_train_step);

}  // namespace

BENCHMARK_MAIN();
