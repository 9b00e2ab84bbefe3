// Serial reference vs OpenMP kernels at the sizes the long-term protocol uses
// (7 channels, look-back 96, horizon 96).

#include <benchmark/benchmark.h>

#include "fraug/kernels.hpp"

namespace {

using namespace fraug;

std::vector<WindowSample> random_samples(std::size_t n, std::size_t c, std::size_t b, std::size_t h) {
    Rng rng(42);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<WindowSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        WindowSample s{Matrix(c, b), Matrix(c, h), i};
        for (double& v : s.lookback.values()) v = g(rng);
        for (double& v : s.horizon.values()) v = g(rng);
        out.push_back(std::move(s));
    }
    return out;
}

const auto& batch32() {
    static const auto s = random_samples(32, 7, 96, 96);
    return s;
}

const auto& eval_set() {
    static const auto s = random_samples(512, 7, 96, 96);
    return s;
}

const DLinearModel& model() {
    static const DLinearModel m = [] {
        Rng rng(1);
        return DLinearModel::initialized(96, 96, 25, rng);
    }();
    return m;
}

void BM_Gradients_Serial(benchmark::State& st) {
    Gradients g = Gradients::zeros_like(model());
    for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::loss_and_gradients(model(), batch32(), g));
}
void BM_Gradients_OpenMP(benchmark::State& st) {
    Gradients g = Gradients::zeros_like(model());
    for (auto _ : st) benchmark::DoNotOptimize(kernels::loss_and_gradients(model(), batch32(), g));
}
void BM_Evaluate_Serial(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::evaluate(model(), eval_set()));
}
void BM_Evaluate_OpenMP(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(kernels::evaluate(model(), eval_set()));
}

void BM_DtwPool_Serial(benchmark::State& st) {
    static const auto pool = random_samples(16, 1, 48, 24);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::dtw_to_pool(pool[0], pool));
}
void BM_DtwPool_OpenMP(benchmark::State& st) {
    static const auto pool = random_samples(16, 1, 48, 24);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::dtw_to_pool(pool[0], pool));
}

AugmentSpec mask_spec() {
    AugmentSpec spec;
    spec.kind = AugmentKind::FreqMask;
    spec.rate = 0.2;
    return spec;
}
void BM_Expand_Serial(benchmark::State& st) {
    for (auto _ : st) {
        Rng rng(3);
        benchmark::DoNotOptimize(kernels::serial::expand_dataset(batch32(), mask_spec(), 2, rng));
    }
}
void BM_Expand_OpenMP(benchmark::State& st) {
    for (auto _ : st) {
        Rng rng(3);
        benchmark::DoNotOptimize(kernels::expand_dataset(batch32(), mask_spec(), 2, rng));
    }
}

}  // namespace

BENCHMARK(BM_Gradients_Serial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Gradients_OpenMP)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Evaluate_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Evaluate_OpenMP)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DtwPool_Serial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DtwPool_OpenMP)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Expand_Serial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Expand_OpenMP)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
