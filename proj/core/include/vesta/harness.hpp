#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vesta/dataflow.hpp"
#include "vesta/memory.hpp"
#include "vesta/network.hpp"
#include "vesta/simulator.hpp"

namespace vesta::harness {

// ------------------------------------------------------------ spec files --

struct SpecFile {
  golden::NetworkSpec network;  // layers already expanded
  dataflow::HardwareConfig hardware;
};

// Throws ParseError naming the JSON path of the offending key or value.
SpecFile parse_spec(const std::string& json_text);
SpecFile load_spec(const std::filesystem::path& path);

// --------------------------------------------------------------- running --

enum class Mode { kFunctional, kCycle, kShapeOnly };

std::string to_string(Mode mode);
std::optional<Mode> mode_from_string(const std::string& s);

struct RunConfig {
  Mode mode = Mode::kShapeOnly;
  std::uint64_t seed = 0;
  double clock_mhz = 500.0;
  std::optional<double> area_mm2;
  std::optional<double> power_mw;

  void validate() const;
};

// Exact num/den, kept reduced.
struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

Rational make_rational(std::uint64_t num, std::uint64_t den);

struct EfficiencyMetrics {
  double peak_gsops = 0.0;
  std::optional<double> tsops_per_mm2;
  std::optional<double> tsops_per_w;
};

// peak = pe_count * 2 * clock_mhz / 1000 GSOPS (two SOPs per PE-cycle).
// Throws ArgumentError on non-positive inputs.
EfficiencyMetrics efficiency_metrics(std::uint64_t pe_count, double clock_mhz,
                                     std::optional<double> area_mm2 = std::nullopt,
                                     std::optional<double> power_mw = std::nullopt);

struct CycleReport {
  std::string network;
  Mode mode = Mode::kShapeOnly;
  std::uint64_t seed = 0;
  double clock_mhz = 500.0;
  std::uint64_t total_pes = 0;

  std::vector<sim::LayerCycles> layers;
  sim::PhaseTotals phases{};
  std::uint64_t total_cycles = 0;  // compute only
  std::uint64_t stall_cycles = 0;
  Rational fps;                    // clock_hz / total_cycles
  EfficiencyMetrics efficiency;
  memory::FootprintReport footprint;

  std::vector<sim::LayerVerdict> verdicts;  // functional mode
  std::optional<std::size_t> predicted_class;

  double percent(dataflow::Phase phase) const;
  std::array<double, dataflow::kNumPhases> percentages() const;
  std::uint64_t total_sops() const;
  double utilization() const;
  double effective_gsops() const;
  bool all_layers_pass() const;

  // Stable key order; byte-identical for identical inputs.
  std::string to_json() const;
  std::string to_table() const;
};

// Functional and cycle-with-image runs need `image`; shape-only ignores it.
// Throws ArgumentError when a mode requirement is not met.
CycleReport run(const SpecFile& spec, const RunConfig& cfg,
                const ByteImage* image = nullptr);

// ----------------------------------------------------- distribution check --

using Distribution = std::array<double, dataflow::kNumPhases>;  // ZSC, SSSC, WSSL, STDP

// Reference cycle shares in percent.
inline constexpr Distribution kTable2Reference{0.19, 4.13, 80.79, 14.88};
inline constexpr double kTightTolerancepp = 5.0;
inline constexpr double kMinWsslShare = 60.0;

struct DistributionComparison {
  Distribution simulated{};
  Distribution reference{};
  Distribution delta{};
  bool pass_order = false;      // WSSL > STDP > SSSC > ZSC
  bool wssl_dominant = false;   // WSSL share above kMinWsslShare
  bool pass_tight = false;      // every |delta| <= kTightTolerancepp

  bool mandatory_pass() const { return pass_order && wssl_dominant; }
  std::string to_text() const;
};

DistributionComparison compare_distribution(const Distribution& simulated,
                                            const Distribution& reference = kTable2Reference);
DistributionComparison compare_distribution(const CycleReport& report,
                                            const Distribution& reference = kTable2Reference);

// Reads the per-phase percentages back out of a JSON report. Throws
// ReportError when a phase is missing.
Distribution distribution_from_report_json(const std::string& json_text);

}  // namespace vesta::harness
