#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "fixq/act_quant.hpp"
#include "fixq/fxinfer.hpp"
#include "fixq/lloyd.hpp"
#include "fixq/random.hpp"
#include "fixq/weight_quant.hpp"

namespace {

fixq::Tensor weights(std::int64_t i, std::int64_t k, std::int64_t o, std::uint64_t seed = 1) {
    fixq::Rng rng(seed);
    std::vector<float> d(static_cast<std::size_t>(i * k * k * o));
    for (auto& v : d) v = static_cast<float>(rng.laplace(0.05));
    return fixq::Tensor::weight(i, k, k, o, std::move(d));
}

fixq::Tensor activations(std::int64_t h, std::int64_t w, std::int64_t c, std::uint64_t seed = 2) {
    fixq::Rng rng(seed);
    std::vector<float> d(static_cast<std::size_t>(h * w * c));
    for (auto& v : d) v = static_cast<float>(std::fabs(rng.normal(0.0, 0.5)));
    return fixq::Tensor::activation(h, w, c, std::move(d));
}

void BM_QuantizeWeights(benchmark::State& state) {
    const auto method = static_cast<fixq::QuantMethod>(state.range(0));
    const fixq::Tensor w = weights(128, 5, 128);
    for (auto _ : state) benchmark::DoNotOptimize(fixq::quantize_weights(w, fixq::GroupScheme::ChannelWise, method));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.size()));
}
BENCHMARK(BM_QuantizeWeights)->Arg(static_cast<int>(fixq::QuantMethod::LQ))->Arg(static_cast<int>(fixq::QuantMethod::NLQ));

void BM_QuantizeActivations(benchmark::State& state) {
    const std::vector<fixq::Tensor> x{activations(96, 64, 128)};
    fixq::CalibrationProfile p = fixq::calibrate(x, fixq::ActivationKind::ReLU);
    for (auto _ : state) benchmark::DoNotOptimize(fixq::quantize_activations(x[0], p));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x[0].size()));
}
BENCHMARK(BM_QuantizeActivations);

void BM_ForwardQuantized(benchmark::State& state) {
    const std::int64_t c = state.range(0);
    const std::vector<fixq::Tensor> x{activations(32, 32, c)};
    fixq::CalibrationProfile p = fixq::calibrate(x, fixq::ActivationKind::ReLU);
    const auto xq = fixq::quantize_activations(x[0], p);
    const auto wq = fixq::quantize_weights(weights(c, 5, c), fixq::GroupScheme::ChannelWise, fixq::QuantMethod::NLQ);
    fixq::LayerSpec spec;
    spec.stride = 2;
    spec.padding = 2;
    spec.activation = fixq::ActivationKind::ReLU;
    for (auto _ : state) benchmark::DoNotOptimize(fixq::forward_quantized(xq, wq, spec));
    state.SetItemsProcessed(state.iterations() * 16 * 16 * c * c * 25);
}
BENCHMARK(BM_ForwardQuantized)->Arg(16)->Arg(64);

void BM_Lloyd(benchmark::State& state) {
    fixq::Rng rng(3);
    std::vector<double> v(static_cast<std::size_t>(state.range(0)));
    for (auto& x : v) x = rng.laplace(0.05);
    for (auto _ : state) benchmark::DoNotOptimize(fixq::lloyd_quantize(v, 256));
}
BENCHMARK(BM_Lloyd)->Arg(10000)->Arg(100000);

}  // namespace
BENCHMARK_MAIN();
