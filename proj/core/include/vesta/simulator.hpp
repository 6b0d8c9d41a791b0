#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "vesta/dataflow.hpp"
#include "vesta/execute.hpp"
#include "vesta/memory.hpp"
#include "vesta/network.hpp"

namespace vesta::sim {

struct LayerCycles {
  std::string name;
  dataflow::Phase phase = dataflow::Phase::kWssl;
  dataflow::PhaseCounters counters;
  memory::BufferComparison buffer;
};

struct LayerVerdict {
  std::string name;
  dataflow::Phase phase = dataflow::Phase::kWssl;
  bool accum_match = false;
  bool spikes_match = false;

  bool pass() const { return accum_match && spikes_match; }
};

using PhaseTotals = std::array<dataflow::PhaseCounters, dataflow::kNumPhases>;

/// Evaluates every compute layer on the PE-module model through its
/// dataflow schedule. With verification on, each layer is also evaluated by
/// the golden model on the same inputs and the two compared bit for bit.
class ScheduledBackend final : public golden::LayerBackend {
 public:
  ScheduledBackend(const dataflow::HardwareConfig& hw, std::size_t timesteps, bool verify);

  golden::LayerResult input_conv(const golden::LayerSpec& layer,
                                 const golden::LayerParams& params,
                                 const ByteImage& image) override;
  golden::LayerResult spike_conv(const golden::LayerSpec& layer,
                                 const golden::LayerParams& params,
                                 const SpikeTensor& in) override;
  golden::LayerResult linear(const golden::LayerSpec& layer,
                             const golden::LayerParams& params,
                             const SpikeTensor& in) override;
  golden::LayerResult attention(const golden::LayerSpec& layer,
                                const golden::LayerParams& params, const SpikeTensor& q,
                                const SpikeTensor& k, const SpikeTensor& v) override;
  AccumTensor head(const golden::LayerSpec& layer, const golden::LayerParams& params,
                   const SpikeTensor& in) override;

  const std::vector<LayerCycles>& layers() const { return layers_; }
  const std::vector<LayerVerdict>& verdicts() const { return verdicts_; }
  const memory::MemoryMap& memory() const { return memory_; }
  PhaseTotals phase_totals() const;

 private:
  dataflow::ExecResult run(const golden::LayerSpec& layer, const dataflow::ExecInputs& in,
                           const golden::LayerParams& params);
  void check(const golden::LayerSpec& layer, const golden::LayerResult& got,
             const golden::LayerResult& want);

  dataflow::HardwareConfig hw_;
  std::size_t timesteps_;
  bool verify_;
  golden::GoldenBackend golden_;
  memory::MemoryMap memory_;
  std::vector<LayerCycles> layers_;
  std::vector<LayerVerdict> verdicts_;
};

struct NetworkCounters {
  std::vector<LayerCycles> layers;
  PhaseTotals phases{};
  memory::MemoryMap memory;
};

// Counters without tensor data. With `enumerate` every schedule is walked
// item by item (memory traffic included); otherwise the closed forms are
// used and bank high-water marks come from the schedules' predictions.
NetworkCounters count_network(const golden::NetworkSpec& spec,
                              const dataflow::HardwareConfig& hw, bool enumerate);

}  // namespace vesta::sim
