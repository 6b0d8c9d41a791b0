#include "vesta/harness.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "vesta/error.hpp"

namespace vesta::harness {

using dataflow::kAllPhases;
using dataflow::Phase;
using nlohmann::ordered_json;

namespace {

std::size_t idx(Phase p) { return static_cast<std::size_t>(p); }

std::uint64_t clock_hz(double clock_mhz) {
  const double hz = clock_mhz * 1e6;
  const double rounded = std::round(hz);
  if (std::abs(hz - rounded) > 1e-6 * std::max(1.0, hz)) {
    throw ArgumentError("clock: " + std::to_string(clock_mhz) +
                        " MHz is not a whole number of Hz");
  }
  return static_cast<std::uint64_t>(rounded);
}

// One comparison per phase: the layer with the largest naive buffer.
std::vector<memory::BufferComparison> pick_buffers(const std::vector<sim::LayerCycles>& layers) {
  std::vector<memory::BufferComparison> out;
  for (Phase p : kAllPhases) {
    const memory::BufferComparison* best = nullptr;
    for (const auto& l : layers) {
      if (l.phase != p) continue;
      if (best == nullptr || l.buffer.naive_bits > best->naive_bits) best = &l.buffer;
    }
    if (best != nullptr) out.push_back(*best);
  }
  return out;
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kFunctional:
      return "functional";
    case Mode::kCycle:
      return "cycle";
    case Mode::kShapeOnly:
      return "shape-only";
  }
  return "?";
}

std::optional<Mode> mode_from_string(const std::string& s) {
  for (Mode m : {Mode::kFunctional, Mode::kCycle, Mode::kShapeOnly}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

void RunConfig::validate() const {
  if (!(clock_mhz > 0.0)) throw ArgumentError("clock_mhz must be positive");
  if (area_mm2 && !(*area_mm2 > 0.0)) throw ArgumentError("area_mm2 must be positive");
  if (power_mw && !(*power_mw > 0.0)) throw ArgumentError("power_mw must be positive");
  (void)clock_hz(clock_mhz);
}

Rational make_rational(std::uint64_t num, std::uint64_t den) {
  if (den == 0) throw ArgumentError("rational: zero denominator");
  const std::uint64_t g = std::gcd(num, den);
  return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
}

EfficiencyMetrics efficiency_metrics(std::uint64_t pe_count, double clock_mhz,
                                     std::optional<double> area_mm2,
                                     std::optional<double> power_mw) {
  if (pe_count == 0) throw ArgumentError("efficiency_metrics: pe_count must be positive");
  if (!(clock_mhz > 0.0)) throw ArgumentError("efficiency_metrics: clock must be positive");
  EfficiencyMetrics m;
  m.peak_gsops = static_cast<double>(pe_count) * 2.0 * clock_mhz / 1000.0;
  if (area_mm2) {
    if (!(*area_mm2 > 0.0)) throw ArgumentError("efficiency_metrics: area must be positive");
    m.tsops_per_mm2 = m.peak_gsops / 1000.0 / *area_mm2;
  }
  if (power_mw) {
    if (!(*power_mw > 0.0)) throw ArgumentError("efficiency_metrics: power must be positive");
    m.tsops_per_w = (m.peak_gsops / 1000.0) / (*power_mw / 1000.0);
  }
  return m;
}

// ------------------------------------------------------------------ run ---

CycleReport run(const SpecFile& spec, const RunConfig& cfg, const ByteImage* image) {
  cfg.validate();
  const golden::NetworkSpec& net = spec.network;
  if (net.layers.empty()) throw ArgumentError("run: spec has no expanded layers");

  CycleReport r;
  r.network = net.name;
  r.mode = cfg.mode;
  r.seed = cfg.seed;
  r.clock_mhz = cfg.clock_mhz;
  r.total_pes = spec.hardware.pe.total_pes();

  const bool with_data =
      cfg.mode == Mode::kFunctional || (cfg.mode == Mode::kCycle && image != nullptr);
  if (cfg.mode == Mode::kFunctional && image == nullptr) {
    throw ArgumentError("run: functional mode needs an input image");
  }

  memory::MemoryMap mem;
  if (with_data) {
    const golden::NetworkParams params = golden::synthesize_params(net, cfg.seed);
    sim::ScheduledBackend backend(spec.hardware, net.timesteps,
                                  cfg.mode == Mode::kFunctional);
    const golden::NetworkTrace trace = golden::run_network(net, params, *image, backend);
    r.layers = backend.layers();
    r.phases = backend.phase_totals();
    r.verdicts = backend.verdicts();
    r.predicted_class = trace.predicted_class;
    mem = backend.memory();
  } else {
    sim::NetworkCounters c =
        sim::count_network(net, spec.hardware, cfg.mode == Mode::kCycle);
    r.layers = std::move(c.layers);
    r.phases = c.phases;
    mem = std::move(c.memory);
  }

  for (const auto& p : r.phases) {
    r.total_cycles += p.cycles;
    r.stall_cycles += p.stall_cycles;
  }
  r.fps = r.total_cycles == 0 ? Rational{0, 1}
                              : make_rational(clock_hz(cfg.clock_mhz), r.total_cycles);
  r.efficiency = efficiency_metrics(r.total_pes, cfg.clock_mhz, cfg.area_mm2, cfg.power_mw);
  const auto buffers = pick_buffers(r.layers);
  r.footprint = memory::footprint_report(mem, buffers);
  return r;
}

double CycleReport::percent(Phase phase) const {
  if (total_cycles == 0) return 0.0;
  return 100.0 * static_cast<double>(phases[idx(phase)].cycles) /
         static_cast<double>(total_cycles);
}

std::array<double, dataflow::kNumPhases> CycleReport::percentages() const {
  std::array<double, dataflow::kNumPhases> out{};
  for (Phase p : kAllPhases) out[idx(p)] = percent(p);
  return out;
}

std::uint64_t CycleReport::total_sops() const {
  std::uint64_t s = 0;
  for (const auto& p : phases) s += p.sops();
  return s;
}

double CycleReport::utilization() const {
  std::uint64_t active = 0, slots = 0;
  for (const auto& p : phases) {
    active += p.active_lanes;
    slots += p.lane_slots;
  }
  return slots == 0 ? 0.0 : static_cast<double>(active) / static_cast<double>(slots);
}

double CycleReport::effective_gsops() const {
  if (total_cycles == 0) return 0.0;
  return static_cast<double>(total_sops()) * clock_mhz * 1e6 /
         static_cast<double>(total_cycles) / 1e9;
}

bool CycleReport::all_layers_pass() const {
  for (const auto& v : verdicts) {
    if (!v.pass()) return false;
  }
  return true;
}

std::string CycleReport::to_json() const {
  ordered_json j;
  j["network"] = network;
  j["mode"] = to_string(mode);
  j["seed"] = seed;
  j["clock_mhz"] = clock_mhz;
  j["total_pes"] = total_pes;

  ordered_json ph = ordered_json::object();
  for (Phase p : kAllPhases) {
    const auto& c = phases[idx(p)];
    ordered_json e;
    e["cycles"] = c.cycles;
    e["percent"] = percent(p);
    e["stall_cycles"] = c.stall_cycles;
    e["active_lanes"] = c.active_lanes;
    e["lane_slots"] = c.lane_slots;
    e["utilization"] = c.utilization();
    e["spike_lanes"] = c.spike_lanes;
    e["sops"] = c.sops();
    e["weight_loads"] = c.weight_loads;
    e["accumulator_buffer_high_water_bits"] = c.accumulator_buffer_high_water_bits;
    e["partial_sum_sram_bits"] = c.partial_sum_sram_bits;
    ph[dataflow::to_string(p)] = std::move(e);
  }
  j["phases"] = std::move(ph);
  j["total_cycles"] = total_cycles;
  j["stall_cycles"] = stall_cycles;
  j["fps"] = ordered_json{{"numerator", fps.num},
                          {"denominator", fps.den},
                          {"value", fps.value()},
                          {"basis", "pure-compute"}};

  ordered_json tp;
  tp["total_sops"] = total_sops();
  tp["utilization"] = utilization();
  tp["effective_gsops"] = effective_gsops();
  tp["peak_gsops"] = efficiency.peak_gsops;
  if (efficiency.tsops_per_mm2) tp["tsops_per_mm2"] = *efficiency.tsops_per_mm2;
  if (efficiency.tsops_per_w) tp["tsops_per_w"] = *efficiency.tsops_per_w;
  j["throughput"] = std::move(tp);

  ordered_json layers_j = ordered_json::array();
  for (const auto& l : layers) {
    layers_j.push_back(ordered_json{{"name", l.name},
                                    {"phase", dataflow::to_string(l.phase)},
                                    {"cycles", l.counters.cycles},
                                    {"active_lanes", l.counters.active_lanes},
                                    {"utilization", l.counters.utilization()}});
  }
  j["layers"] = std::move(layers_j);

  ordered_json mem_j;
  ordered_json banks_j = ordered_json::array();
  for (const auto& b : footprint.banks) {
    banks_j.push_back(ordered_json{{"bank", memory::to_string(b.id)},
                                   {"capacity_bits", b.capacity_bits},
                                   {"high_water_bits", b.high_water_bits},
                                   {"read_count", b.read_count},
                                   {"write_count", b.write_count},
                                   {"read_bits", b.read_bits},
                                   {"write_bits", b.write_bits},
                                   {"margin_bits", b.margin_bits}});
  }
  mem_j["banks"] = std::move(banks_j);
  mem_j["total_capacity_bits"] = footprint.total_capacity_bits;
  mem_j["budget_bits"] = footprint.budget_bits;
  mem_j["budget_margin_bits"] = footprint.budget_margin_bits;
  ordered_json buf_j = ordered_json::array();
  for (const auto& b : footprint.buffers) {
    buf_j.push_back(ordered_json{{"name", b.name},
                                 {"proposed_bits", b.proposed_bits},
                                 {"naive_bits", b.naive_bits},
                                 {"ratio", b.ratio()}});
  }
  mem_j["buffers"] = std::move(buf_j);
  j["memory"] = std::move(mem_j);

  ordered_json eq;
  eq["checked"] = !verdicts.empty();
  eq["all_pass"] = all_layers_pass();
  ordered_json eq_layers = ordered_json::array();
  for (const auto& v : verdicts) {
    eq_layers.push_back(ordered_json{{"name", v.name},
                                     {"phase", dataflow::to_string(v.phase)},
                                     {"accum", v.accum_match ? "PASS" : "FAIL"},
                                     {"spikes", v.spikes_match ? "PASS" : "FAIL"}});
  }
  eq["layers"] = std::move(eq_layers);
  j["equivalence"] = std::move(eq);
  j["predicted_class"] =
      predicted_class ? ordered_json(*predicted_class) : ordered_json(nullptr);
  return j.dump(2) + "\n";
}

std::string CycleReport::to_table() const {
  std::ostringstream os;
  os << network << " (" << to_string(mode) << ", seed " << seed << ", " << clock_mhz
     << " MHz)\n";
  os << std::left << std::setw(6) << "phase" << std::right << std::setw(14) << "cycles"
     << std::setw(10) << "share %" << std::setw(8) << "util %" << std::setw(18) << "SOPs"
     << '\n';
  for (Phase p : kAllPhases) {
    const auto& c = phases[idx(p)];
    os << std::left << std::setw(6) << dataflow::to_string(p) << std::right << std::setw(14)
       << c.cycles << std::setw(10) << std::fixed << std::setprecision(2) << percent(p)
       << std::setw(8) << 100.0 * c.utilization() << std::setw(18) << c.sops() << '\n';
  }
  os << std::left << std::setw(6) << "total" << std::right << std::setw(14) << total_cycles
     << '\n';
  os << "frames/s: " << fps.num << "/" << fps.den << " = " << std::setprecision(3)
     << fps.value() << " (pure compute, " << stall_cycles << " stall cycles excluded)\n";
  os << "peak " << std::setprecision(1) << efficiency.peak_gsops << " GSOPS, effective "
     << effective_gsops() << " GSOPS\n";
  os << std::defaultfloat;
  os << footprint.to_text();
  if (!verdicts.empty()) {
    std::size_t bad = 0;
    for (const auto& v : verdicts) bad += !v.pass();
    os << "equivalence: " << verdicts.size() - bad << "/" << verdicts.size()
       << " layers bit-exact\n";
    for (const auto& v : verdicts) {
      if (!v.pass()) os << "  MISMATCH " << v.name << '\n';
    }
  }
  if (predicted_class) os << "predicted class: " << *predicted_class << '\n';
  return os.str();
}

// -------------------------------------------------------- distribution ---

DistributionComparison compare_distribution(const Distribution& simulated,
                                            const Distribution& reference) {
  DistributionComparison c;
  c.simulated = simulated;
  c.reference = reference;
  c.pass_tight = true;
  for (std::size_t i = 0; i < dataflow::kNumPhases; ++i) {
    c.delta[i] = simulated[i] - reference[i];
    if (std::abs(c.delta[i]) > kTightTolerancepp) c.pass_tight = false;
  }
  const double zsc = simulated[idx(Phase::kZsc)];
  const double sssc = simulated[idx(Phase::kSssc)];
  const double wssl = simulated[idx(Phase::kWssl)];
  const double stdp = simulated[idx(Phase::kStdp)];
  c.pass_order = wssl > stdp && stdp > sssc && sssc > zsc;
  c.wssl_dominant = wssl > kMinWsslShare;
  return c;
}

DistributionComparison compare_distribution(const CycleReport& report,
                                            const Distribution& reference) {
  return compare_distribution(report.percentages(), reference);
}

std::string DistributionComparison::to_text() const {
  std::ostringstream os;
  os << std::left << std::setw(6) << "phase" << std::right << std::setw(12) << "simulated %"
     << std::setw(12) << "reference %" << std::setw(10) << "delta" << '\n';
  os << std::fixed << std::setprecision(2);
  for (Phase p : kAllPhases) {
    const std::size_t i = idx(p);
    os << std::left << std::setw(6) << dataflow::to_string(p) << std::right << std::setw(12)
       << simulated[i] << std::setw(12) << reference[i] << std::setw(10) << std::showpos
       << delta[i] << std::noshowpos << '\n';
  }
  os << (pass_order ? "PASS-ORDER" : "FAIL-ORDER") << " (WSSL > STDP > SSSC > ZSC)\n";
  os << (wssl_dominant ? "PASS" : "FAIL") << "-WSSL-SHARE (WSSL > "
     << std::setprecision(0) << kMinWsslShare << "%)\n";
  os << (pass_tight ? "PASS-TIGHT" : "FAIL-TIGHT") << " (all |delta| <= "
     << kTightTolerancepp << " pp)\n";
  return os.str();
}

Distribution distribution_from_report_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ReportError(std::string("report: malformed JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("phases") || !j["phases"].is_object()) {
    throw ReportError("report: missing \"phases\" section");
  }
  Distribution d{};
  for (Phase p : kAllPhases) {
    const std::string name = dataflow::to_string(p);
    const auto& ph = j["phases"];
    if (!ph.contains(name) || !ph[name].is_object() || !ph[name].contains("percent") ||
        !ph[name]["percent"].is_number()) {
      throw ReportError("report: missing phase " + name);
    }
    d[idx(p)] = ph[name]["percent"].get<double>();
  }
  return d;
}

}  // namespace vesta::harness
