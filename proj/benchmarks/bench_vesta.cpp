#include <benchmark/benchmark.h>

#include <random>

#include "vesta/dataflow.hpp"
#include "vesta/execute.hpp"
#include "vesta/golden.hpp"
#include "vesta/harness.hpp"
#include "vesta/pe_array.hpp"

using namespace vesta;

namespace {

SpikeTensor random_spikes(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SpikeTensor s(std::move(shape));
  for (std::size_t i = 0; i < s.size(); ++i) s.set(i, rng() & 1u);
  return s;
}

WeightMatrix random_weights(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WeightMatrix w(std::move(shape));
  for (auto& v : w.values()) v = static_cast<std::int8_t>(rng() >> 56);
  return w;
}

golden::LayerSpec linear(std::size_t n, std::size_t din, std::size_t dout) {
  golden::LayerSpec l;
  l.name = "fc";
  l.kind = golden::LayerKind::kSpikeLinear;
  l.geometry = golden::LinearGeometry{n, din, dout};
  return l;
}

}  // namespace

static void BM_ShiftSumWithinUnit(benchmark::State& state) {
  std::uint8_t px = 0;
  for (auto _ : state) {
    const auto lanes = pe::unit_cycle({-77, px++});
    benchmark::DoNotOptimize(pe::shift_sum_within_unit(lanes, pe::kIdentityBitplanes));
  }
}
BENCHMARK(BM_ShiftSumWithinUnit);

static void BM_RefSpikingLinear(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_spikes({4, n, 512}, 1);
  const auto w = random_weights({512, 512}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(golden::ref_spiking_linear(x, w));
  state.SetItemsProcessed(state.iterations() * 4 * n * 512 * 512);
}
BENCHMARK(BM_RefSpikingLinear)->Arg(4)->Arg(16);

static void BM_WsslExecute(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_spikes({4, n, 512}, 3);
  const auto w = random_weights({64, 512}, 4);
  const auto s = dataflow::schedule_wssl(linear(n, 512, 64), 4, dataflow::HardwareConfig{});
  for (auto _ : state) {
    auto mem = memory::configure_banks();
    benchmark::DoNotOptimize(dataflow::execute(s, mem, dataflow::WsslInputs{&x, &w}));
  }
  state.counters["cycles"] = static_cast<double>(s.predicted_cycles());
}
BENCHMARK(BM_WsslExecute)->Arg(4)->Arg(16);

static void BM_FullModelShapeOnly(benchmark::State& state) {
  const auto spec = harness::load_spec(VESTA_SPEC_DIR "/spikformer-v2-8-512.json");
  for (auto _ : state) benchmark::DoNotOptimize(harness::run(spec, harness::RunConfig{}));
}
BENCHMARK(BM_FullModelShapeOnly)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
