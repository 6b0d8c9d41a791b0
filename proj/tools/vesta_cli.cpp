// vesta: run networks through the accelerator model, print efficiency
// arithmetic, and compare cycle distributions.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "vesta/dataflow.hpp"
#include "vesta/error.hpp"
#include "vesta/harness.hpp"
#include "vesta/network.hpp"
#include "vesta/tensor_io.hpp"

namespace {

using namespace vesta;

// VESTA_LOG=quiet suppresses the table, VESTA_LOG=debug adds per-layer lines.
enum class Verbosity { kQuiet, kNormal, kDebug };

Verbosity verbosity() {
  const char* v = std::getenv("VESTA_LOG");
  if (v == nullptr) return Verbosity::kNormal;
  const std::string s(v);
  if (s == "quiet") return Verbosity::kQuiet;
  if (s == "debug") return Verbosity::kDebug;
  return Verbosity::kNormal;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write " + path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& spec_path, const std::string& mode_name,
            const std::string& image_path, std::uint64_t seed, double clock_mhz,
            const std::string& report_path, std::optional<double> area,
            std::optional<double> power) {
  const harness::SpecFile spec = harness::load_spec(spec_path);
  harness::RunConfig cfg;
  cfg.mode = *harness::mode_from_string(mode_name);
  cfg.seed = seed;
  cfg.clock_mhz = clock_mhz;
  cfg.area_mm2 = area;
  cfg.power_mw = power;

  std::optional<ByteImage> image;
  if (!image_path.empty()) {
    auto t = load_tensor(image_path);
    if (!std::holds_alternative<ByteImage>(t)) {
      throw ArgumentError(image_path + ": expected an 8-bit image tensor");
    }
    image = std::get<ByteImage>(std::move(t));
  }

  const harness::CycleReport report = harness::run(spec, cfg, image ? &*image : nullptr);
  const Verbosity v = verbosity();
  if (v != Verbosity::kQuiet) std::cout << report.to_table();
  if (v == Verbosity::kDebug) {
    for (const auto& l : report.layers) {
      std::cerr << l.name << ' ' << dataflow::to_string(l.phase) << ' ' << l.counters.cycles
                << '\n';
    }
  }
  if (!report_path.empty()) write_file(report_path, report.to_json());
  return report.all_layers_pass() ? 0 : 1;
}

int cmd_metrics(std::uint64_t pes, double clock_mhz, std::optional<double> area,
                std::optional<double> power) {
  const auto m = harness::efficiency_metrics(pes, clock_mhz, area, power);
  std::cout << "peak throughput: " << m.peak_gsops << " GSOPS\n";
  if (m.tsops_per_mm2) std::cout << "area efficiency: " << *m.tsops_per_mm2 << " TSOPS/mm2\n";
  if (m.tsops_per_w) std::cout << "energy efficiency: " << *m.tsops_per_w << " TSOPS/W\n";
  return 0;
}

int cmd_compare(const std::string& report_path, const std::string& reference) {
  if (reference != "table2") throw ArgumentError("unknown reference " + reference);
  const auto sim = harness::distribution_from_report_json(read_file(report_path));
  const auto c = harness::compare_distribution(sim);
  std::cout << c.to_text();
  return c.mandatory_pass() ? 0 : 1;
}

int cmd_gen_image(const std::string& spec_path, std::uint64_t seed, const std::string& out) {
  const harness::SpecFile spec = harness::load_spec(spec_path);
  const auto& n = spec.network;
  save_tensor(out, golden::synthetic_image(n.image_channels, n.image_height, n.image_width, seed));
  return 0;
}

int cmd_schedule(const std::string& spec_path, const std::string& layer_name) {
  const harness::SpecFile spec = harness::load_spec(spec_path);
  for (const auto& l : spec.network.layers) {
    if (l.name != layer_name) continue;
    const auto s = dataflow::schedule_layer(l, spec.network.timesteps, spec.hardware);
    dataflow::dump_schedule(s, std::cout);
    return 0;
  }
  throw ArgumentError("no layer named " + layer_name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VESTA spiking-transformer accelerator model"};
  app.require_subcommand(1);

  std::string spec_path, mode = "shape-only", image_path, report_path;
  std::uint64_t seed = 0;
  double clock_mhz = 500.0;
  std::optional<double> area, power;

  auto* run = app.add_subcommand("run", "Run a network spec and report cycles");
  run->add_option("--spec", spec_path, "Network spec (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--mode", mode, "functional | cycle | shape-only")
      ->check(CLI::IsMember({"functional", "cycle", "shape-only"}));
  run->add_option("--image", image_path, "Input image tensor file")->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Seed for synthetic parameters");
  run->add_option("--clock-mhz", clock_mhz, "Clock frequency")->check(CLI::PositiveNumber);
  run->add_option("--report", report_path, "Write the JSON report here");
  run->add_option("--area-mm2", area, "Core area for efficiency figures");
  run->add_option("--power-mw", power, "Power for efficiency figures");

  std::uint64_t pes = 4096;
  auto* metrics = app.add_subcommand("metrics", "Peak throughput and efficiency arithmetic");
  metrics->add_option("--pes", pes, "Processing elements")->check(CLI::PositiveNumber);
  metrics->add_option("--clock-mhz", clock_mhz, "Clock frequency")->check(CLI::PositiveNumber);
  metrics->add_option("--area-mm2", area, "Core area");
  metrics->add_option("--power-mw", power, "Power");

  std::string reference = "table2";
  auto* compare = app.add_subcommand("compare", "Compare a report's cycle shares to a reference");
  compare->add_option("--report", report_path, "JSON report")->required()->check(CLI::ExistingFile);
  compare->add_option("--reference", reference, "Reference distribution")
      ->check(CLI::IsMember({"table2"}));

  std::string out_path;
  auto* gen = app.add_subcommand("gen-image", "Write a seeded synthetic input image");
  gen->add_option("--spec", spec_path, "Network spec for the image size")
      ->required()
      ->check(CLI::ExistingFile);
  gen->add_option("--seed", seed, "Image seed");
  gen->add_option("--out", out_path, "Output tensor file")->required();

  std::string layer_name;
  auto* sched = app.add_subcommand("schedule", "Dump one layer's schedule, one line per cycle");
  sched->add_option("--spec", spec_path, "Network spec")->required()->check(CLI::ExistingFile);
  sched->add_option("--layer", layer_name, "Layer name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      return cmd_run(spec_path, mode, image_path, seed, clock_mhz, report_path, area, power);
    }
    if (*metrics) return cmd_metrics(pes, clock_mhz, area, power);
    if (*compare) return cmd_compare(report_path, reference);
    if (*gen) return cmd_gen_image(spec_path, seed, out_path);
    if (*sched) return cmd_schedule(spec_path, layer_name);
  } catch (const vesta::Error& e) {
    std::cerr << "vesta: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
