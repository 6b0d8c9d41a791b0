#include "vesta/simulator.hpp"

#include <cstdint>

#include "vesta/error.hpp"

namespace vesta::sim {

using dataflow::ExecInputs;
using dataflow::Phase;
using golden::LayerParams;
using golden::LayerResult;
using golden::LayerSpec;

namespace {

void add_layer(std::vector<LayerCycles>& layers, const dataflow::Schedule& s,
               const dataflow::PhaseCounters& c) {
  layers.push_back(LayerCycles{s.layer().name, s.phase(), c, s.buffer_comparison()});
}

// Reserves and returns each predicted hold so the bank high-water marks
// reflect the schedule without walking it.
void touch_predicted(memory::MemoryMap& mem, const dataflow::BufferPrediction& pred) {
  for (memory::BankId id : memory::kAllBanks) {
    const std::uint64_t bits = pred.bank(id);
    if (bits == 0) continue;
    mem.allocate(id, bits);
    mem.release(id, bits);
  }
}

}  // namespace

ScheduledBackend::ScheduledBackend(const dataflow::HardwareConfig& hw,
                                   std::size_t timesteps, bool verify)
    : hw_(hw),
      timesteps_(timesteps),
      verify_(verify),
      golden_(timesteps),
      memory_(memory::configure_banks(hw.banks, hw.sram_budget_bits)) {}

dataflow::ExecResult ScheduledBackend::run(const LayerSpec& layer, const ExecInputs& in,
                                           const LayerParams& params) {
  const dataflow::Schedule s = dataflow::schedule_layer(layer, timesteps_, hw_);
  dataflow::ExecOptions opts;
  opts.weight_load_latency = hw_.weight_load_latency;
  if (layer.has_tflif) {
    if (!params.tflif) throw ArgumentError("layer " + layer.name + " has no TFLIF parameters");
    opts.tflif = dataflow::TflifStage{layer.requant_shift, *params.tflif};
  }
  auto r = dataflow::execute(s, memory_, in, opts);
  add_layer(layers_, s, r.counters);
  return r;
}

void ScheduledBackend::check(const LayerSpec& layer, const LayerResult& got,
                             const LayerResult& want) {
  LayerVerdict v;
  v.name = layer.name;
  v.phase = layers_.back().phase;
  v.accum_match = got.accum.has_value() == want.accum.has_value() &&
                  (!got.accum || *got.accum == *want.accum);
  v.spikes_match = got.spikes == want.spikes;
  verdicts_.push_back(v);
}

LayerResult ScheduledBackend::input_conv(const LayerSpec& layer, const LayerParams& params,
                                         const ByteImage& image) {
  auto r = run(layer, dataflow::SsscInputs{&image, &params.weights}, params);
  LayerResult out{std::move(r.acc), std::move(*r.spikes)};
  if (verify_) check(layer, out, golden_.input_conv(layer, params, image));
  return out;
}

LayerResult ScheduledBackend::spike_conv(const LayerSpec& layer, const LayerParams& params,
                                         const SpikeTensor& in) {
  auto r = run(layer, dataflow::ZscInputs{&in, &params.weights}, params);
  LayerResult out{std::move(r.acc), std::move(*r.spikes)};
  if (verify_) check(layer, out, golden_.spike_conv(layer, params, in));
  return out;
}

LayerResult ScheduledBackend::linear(const LayerSpec& layer, const LayerParams& params,
                                     const SpikeTensor& in) {
  auto r = run(layer, dataflow::WsslInputs{&in, &params.weights}, params);
  LayerResult out{std::move(r.acc), std::move(*r.spikes)};
  if (verify_) check(layer, out, golden_.linear(layer, params, in));
  return out;
}

LayerResult ScheduledBackend::attention(const LayerSpec& layer, const LayerParams& params,
                                        const SpikeTensor& q, const SpikeTensor& k,
                                        const SpikeTensor& v) {
  auto r = run(layer, dataflow::StdpInputs{&q, &k, &v}, params);
  LayerResult out{std::move(r.acc), std::move(*r.spikes)};
  if (verify_) check(layer, out, golden_.attention(layer, params, q, k, v));
  return out;
}

AccumTensor ScheduledBackend::head(const LayerSpec& layer, const LayerParams& params,
                                   const SpikeTensor& in) {
  auto r = run(layer, dataflow::WsslInputs{&in, &params.weights}, params);
  const Shape& s = r.acc.shape();
  const std::size_t T = s[0], N = s[1], C = s[2];
  AccumTensor logits({T, C});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      std::int64_t sum = 0;
      for (std::size_t n = 0; n < N; ++n) sum += r.acc[(t * N + n) * C + c];
      if (sum > INT32_MAX || sum < INT32_MIN) throw WidthError("head: logit exceeds 32 bits");
      logits[t * C + c] = static_cast<std::int32_t>(sum);
    }
  }
  if (verify_) {
    const AccumTensor want = golden_.head(layer, params, in);
    LayerVerdict v;
    v.name = layer.name;
    v.phase = Phase::kWssl;
    v.accum_match = logits == want;
    v.spikes_match = true;
    verdicts_.push_back(v);
  }
  return logits;
}

PhaseTotals ScheduledBackend::phase_totals() const {
  PhaseTotals totals{};
  for (const auto& l : layers_) totals[static_cast<std::size_t>(l.phase)] += l.counters;
  return totals;
}

NetworkCounters count_network(const golden::NetworkSpec& spec,
                              const dataflow::HardwareConfig& hw, bool enumerate) {
  if (spec.layers.empty()) throw ArgumentError("count_network: spec has no expanded layers");
  NetworkCounters out{{}, {}, memory::configure_banks(hw.banks, hw.sram_budget_bits)};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    if (layer.kind == golden::LayerKind::kResidual) continue;
    try {
      const dataflow::Schedule s = dataflow::schedule_layer(layer, spec.timesteps, hw);
      dataflow::PhaseCounters c;
      if (enumerate) {
        dataflow::ExecOptions opts;
        opts.weight_load_latency = hw.weight_load_latency;
        c = dataflow::execute(s, out.memory, std::monostate{}, opts).counters;
      } else {
        c = s.predicted_counters(hw.weight_load_latency);
        touch_predicted(out.memory, s.predicted_buffers());
      }
      add_layer(out.layers, s, c);
      out.phases[static_cast<std::size_t>(s.phase())] += c;
    } catch (const Error& e) {
      throw LayerError(i, layer.name, e.what());
    }
  }
  return out;
}

}  // namespace vesta::sim
