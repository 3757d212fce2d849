#include "lutpim/cluster.hpp"
#include "lutpim/inference.hpp"
#include "lutpim/lut_core.hpp"
#include "lutpim/perf_model.hpp"
#include "lutpim/rng.hpp"
#include "lutpim/training.hpp"
#include "lutpim/zoo.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace lutpim;

namespace {

void BM_Lookup(benchmark::State& state) {
    LutCore core;
    core.program(build_function_table(OpTag::MUL4));
    unsigned a = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(core.lookup(a & 15U, (a >> 4) & 15U));
        ++a;
    }
}
BENCHMARK(BM_Lookup);

void BM_Mac8(benchmark::State& state) {
    Cluster cl;
    cl.program_for_mac();
    std::uint8_t a = 0;
    for (auto _ : state) {
        cl.reset_accumulator();
        benchmark::DoNotOptimize(cl.mac8(a, static_cast<std::uint8_t>(a ^ 0x5A)));
        ++a;
    }
}
BENCHMARK(BM_Mac8);

void BM_LutDot(benchmark::State& state) {
    const auto bits = static_cast<unsigned>(state.range(0));
    DeterministicRng rng(1);
    std::vector<std::uint32_t> a(576);
    std::vector<std::uint32_t> w(576);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<std::uint32_t>(rng.uniform(0, (1U << bits) - 1));
        w[i] = static_cast<std::uint32_t>(rng.uniform(0, (1U << bits) - 1));
    }
    LutDotUnit unit;
    for (auto _ : state) {
        benchmark::DoNotOptimize(unit.dot(a, w, bits));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(a.size()));
}
BENCHMARK(BM_LutDot)->Arg(4)->Arg(8)->Arg(16);

void BM_InferLut(benchmark::State& state) {
    const auto bits = static_cast<unsigned>(state.range(0));
    const NetworkSpec net = tinymalnet();
    const WeightSet w = random_weights(net, 0);
    DeterministicRng rng(2);
    std::vector<double> x(net.input.size());
    for (double& v : x) v = rng.uniform_real(0.0, 1.0);
    const std::vector<std::vector<double>> calib{x};
    const WeightSet wq = quantize_model(net, w, calib, bits);
    SystemConfig cfg;
    cfg.precision_bits = bits;
    for (auto _ : state) {
        benchmark::DoNotOptimize(infer_lut(net, wq, x, cfg));
    }
}
BENCHMARK(BM_InferLut)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Estimate(benchmark::State& state) {
    const NetworkSpec net = resnet50(kBenchmarkInput);
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate(net, SystemConfig{}, 8));
    }
}
BENCHMARK(BM_Estimate);

} // namespace

BENCHMARK_MAIN();
