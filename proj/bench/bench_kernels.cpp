// Serial vs OpenMP batch kernels on the d=4 recovery model (2048 samples).

#include "ctt/bench.hpp"
#include "ctt/kernels.hpp"

#include <benchmark/benchmark.h>

using namespace ctt;

namespace {

struct Fixture {
    CTTModel model;
    Dataset data;
    BatchForward fw;

    Fixture() {
        auto cfg = recovery_preset(4);
        model = make_recovery_model(cfg);
        data = gen_recovery_dataset(4, 2048, 1, 0).train;
        fw = forward_batch(model, data.x, true, Exec::serial);
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

Exec mode(const benchmark::State& st) { return st.range(0) ? Exec::parallel : Exec::serial; }

void BM_Forward(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) benchmark::DoNotOptimize(forward_batch(f.model, f.data.x, false, mode(st)));
}

void BM_ForwardWithJacobians(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) benchmark::DoNotOptimize(forward_batch(f.model, f.data.x, true, mode(st)));
}

void BM_ParameterJacobian(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) benchmark::DoNotOptimize(parameter_jacobian_batch(f.model, f.fw, 1, mode(st)));
}

void BM_Gram(benchmark::State& st) {
    const auto& f = fixture();
    const Matrix j = parameter_jacobian_batch(f.model, f.fw, 1, Exec::serial);
    for (auto _ : st) benchmark::DoNotOptimize(gram_from_jacobian(j, f.fw.batch(), mode(st)));
}

}  // namespace

BENCHMARK(BM_Forward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardWithJacobians)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ParameterJacobian)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Gram)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
