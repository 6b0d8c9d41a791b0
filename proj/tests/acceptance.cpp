// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any selected criterion fails.
//
//   vesta_acceptance                 all criteria
//   vesta_acceptance --criterion 4   just one

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vesta/dataflow.hpp"
#include "vesta/error.hpp"
#include "vesta/execute.hpp"
#include "vesta/golden.hpp"
#include "vesta/harness.hpp"
#include "vesta/pe_array.hpp"
#include "vesta/tensor.hpp"

using namespace vesta;
using dataflow::HardwareConfig;
using golden::LayerKind;
using golden::LayerSpec;

namespace {

const std::string kSpecDir = VESTA_SPEC_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::int8_t random_i8(std::mt19937_64& rng) {
  return static_cast<std::int8_t>(static_cast<std::uint8_t>(rng() >> 56));
}

WeightMatrix random_weights(Shape shape, std::mt19937_64& rng) {
  WeightMatrix w(std::move(shape));
  for (auto& v : w.values()) v = random_i8(rng);
  return w;
}

SpikeTensor random_spikes(Shape shape, double p, std::mt19937_64& rng) {
  SpikeTensor s(std::move(shape));
  std::bernoulli_distribution d(p);
  for (std::size_t i = 0; i < s.size(); ++i) s.set(i, d(rng));
  return s;
}

ByteImage random_image(Shape shape, std::mt19937_64& rng) {
  ByteImage img(std::move(shape));
  for (auto& v : img.values()) v = static_cast<std::uint8_t>(rng() >> 56);
  return img;
}

golden::TFLIFParams random_tflif(std::size_t channels, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> g(0.5, 1.5), b(-0.5, 0.5), m(-1, 1), v(0.5, 1.5);
  golden::BatchNormStats bn;
  for (std::size_t c = 0; c < channels; ++c) {
    bn.gamma.push_back(g(rng));
    bn.beta.push_back(b(rng));
    bn.mean.push_back(m(rng));
    bn.var.push_back(v(rng));
  }
  return golden::fold_bn_into_lif(bn, 1.0);
}

int pick(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// ------------------------------------------------------------------- 1 ----

Outcome exhaustive_shift_sum() {
  const auto t0 = Clock::now();
  std::size_t bad = 0;
  for (int w = -128; w <= 127; ++w) {
    for (int x = 0; x <= 255; ++x) {
      const auto lanes =
          pe::unit_cycle({static_cast<std::int8_t>(w), static_cast<std::uint8_t>(x)});
      if (pe::shift_sum_within_unit(lanes, pe::kIdentityBitplanes) != w * x) ++bad;
    }
  }
  const double s = seconds_since(t0);
  return {bad == 0 && s < 1.0,
          "65536 pairs, " + std::to_string(bad) + " mismatches, " + fmt("%.3f s", s)};
}

// ------------------------------------------------------------------- 2 ----

Outcome bitplane_identity() {
  const auto t0 = Clock::now();
  std::size_t bad = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const ByteImage img = random_image({3, 8, 8}, rng);
    const WeightMatrix w = random_weights({8, 3, 2, 2}, rng);
    const AccumTensor direct = golden::ref_conv2d_u8(img, w, 2, 1);
    std::vector<std::int64_t> sum(direct.size(), 0);
    for (int b = 0; b < 8; ++b) {
      const AccumTensor plane =
          golden::ref_spiking_conv2d(extract_bitplane(img, b), w, 2);
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += std::int64_t{plane[i]} << b;
    }
    for (std::size_t i = 0; i < sum.size(); ++i) bad += sum[i] != direct[i];
  }
  const double s = seconds_since(t0);
  return {bad == 0 && s < 5.0,
          "100 images, " + std::to_string(bad) + " mismatches, " + fmt("%.3f s", s)};
}

// ------------------------------------------------------------------- 3 ----

struct EquivalenceTally {
  int cases = 0;
  int failures = 0;
  std::string first_failure;

  void record(bool ok, const std::string& what) {
    ++cases;
    if (!ok && failures++ == 0) first_failure = what;
  }
};

void zsc_case(std::uint64_t seed, EquivalenceTally& tally) {
  std::mt19937_64 rng(seed);
  const std::size_t cin = pick(rng, 1, 300), cout = pick(rng, 1, 8);
  const std::size_t h = 2 * pick(rng, 1, 6), w = 2 * pick(rng, 1, 6);
  LayerSpec l;
  l.name = "zsc";
  l.kind = LayerKind::kSpikeConv;
  l.geometry = golden::ConvGeometry{cin, cout, h, w, 2, 2};
  const int shift = pick(rng, 0, 6);
  const SpikeTensor x = random_spikes({4, cin, h, w}, 0.4, rng);
  const WeightMatrix wt = random_weights({cout, cin, 2, 2}, rng);
  const auto lif = random_tflif(cout, rng);

  auto mem = memory::configure_banks();
  dataflow::ExecOptions opt;
  opt.tflif = dataflow::TflifStage{shift, lif};
  const auto r = dataflow::execute(dataflow::schedule_zsc(l, 4, HardwareConfig{}), mem,
                                   dataflow::ZscInputs{&x, &wt}, opt);
  const AccumTensor want = golden::ref_spiking_conv2d(x, wt, 2);
  const bool ok = r.acc == want &&
                  *r.spikes == golden::fire(want, shift, lif, golden::ChannelAxis::kFirst);
  tally.record(ok, "ZSC seed " + std::to_string(seed));
}

void sssc_case(std::uint64_t seed, EquivalenceTally& tally) {
  std::mt19937_64 rng(seed);
  const std::size_t cin = pick(rng, 1, 3), cout = pick(rng, 1, 8);
  const std::size_t k = pick(rng, 2, 3), stride = pick(rng, 1, static_cast<int>(k));
  const std::size_t h = k + stride * pick(rng, 0, 6), w = k + stride * pick(rng, 0, 6);
  LayerSpec l;
  l.name = "sssc";
  l.kind = LayerKind::kConv8bitInput;
  l.geometry = golden::ConvGeometry{cin, cout, h, w, k, stride};
  const int shift = pick(rng, 4, 10);
  const ByteImage img = random_image({cin, h, w}, rng);
  const WeightMatrix wt = random_weights({cout, cin, k, k}, rng);
  const auto lif = random_tflif(cout, rng);

  auto mem = memory::configure_banks();
  dataflow::ExecOptions opt;
  opt.tflif = dataflow::TflifStage{shift, lif};
  const auto r = dataflow::execute(dataflow::schedule_sssc(l, 4, HardwareConfig{}), mem,
                                   dataflow::SsscInputs{&img, &wt}, opt);
  const AccumTensor want = golden::ref_conv2d_u8(img, wt, stride, 4);
  const bool ok = r.acc == want &&
                  *r.spikes == golden::fire(want, shift, lif, golden::ChannelAxis::kFirst);
  tally.record(ok, "SSSC seed " + std::to_string(seed));
}

void wssl_case(std::uint64_t seed, EquivalenceTally& tally) {
  std::mt19937_64 rng(seed);
  const std::size_t n = pick(rng, 1, 12);
  // The first case always exercises the four-section split of MLP2.
  const std::size_t din = seed % 50 == 0 ? 2048 : pick(rng, 1, 1200);
  const std::size_t dout = pick(rng, 1, 12);
  LayerSpec l;
  l.name = "wssl";
  l.kind = LayerKind::kSpikeLinear;
  l.geometry = golden::LinearGeometry{n, din, dout};
  const int shift = pick(rng, 2, 8);
  const SpikeTensor x = random_spikes({4, n, din}, 0.5, rng);
  const WeightMatrix wt = random_weights({dout, din}, rng);
  const auto lif = random_tflif(dout, rng);

  auto mem = memory::configure_banks();
  dataflow::ExecOptions opt;
  opt.tflif = dataflow::TflifStage{shift, lif};
  const auto r = dataflow::execute(dataflow::schedule_wssl(l, 4, HardwareConfig{}), mem,
                                   dataflow::WsslInputs{&x, &wt}, opt);
  const AccumTensor want = golden::ref_spiking_linear(x, wt);
  const bool ok = r.acc == want &&
                  *r.spikes == golden::fire(want, shift, lif, golden::ChannelAxis::kLast);
  tally.record(ok, "WSSL seed " + std::to_string(seed) + " D_in " + std::to_string(din));
}

void stdp_case(std::uint64_t seed, EquivalenceTally& tally) {
  std::mt19937_64 rng(seed);
  const std::size_t heads = pick(rng, 1, 3), dh = pick(rng, 1, 64), n = pick(rng, 1, 30);
  LayerSpec l;
  l.name = "stdp";
  l.kind = LayerKind::kSpikeAttention;
  l.geometry = golden::AttentionGeometry{heads, dh, n};
  l.score_shift = pick(rng, 0, 2);
  l.requant_shift = pick(rng, 0, 3);
  const Shape shape{4, heads, n, dh};
  const SpikeTensor q = random_spikes(shape, 0.5, rng);
  const SpikeTensor k = random_spikes(shape, 0.5, rng);
  const SpikeTensor v = random_spikes(shape, 0.5, rng);
  const auto lif = random_tflif(heads * dh, rng);

  auto mem = memory::configure_banks();
  dataflow::ExecOptions opt;
  opt.tflif = dataflow::TflifStage{l.requant_shift, lif};
  const auto r = dataflow::execute(dataflow::schedule_stdp(l, 4, HardwareConfig{}), mem,
                                   dataflow::StdpInputs{&q, &k, &v}, opt);
  const auto want =
      golden::ref_ssa(q, k, v, golden::AttentionQuant{l.score_shift, l.requant_shift}, lif);
  const bool ok = r.acc == want.raw && *r.scores == want.scores && *r.spikes == want.out;
  tally.record(ok, "STDP seed " + std::to_string(seed));
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  EquivalenceTally tally;
  const std::vector<std::function<void(std::uint64_t, EquivalenceTally&)>> flows{
      zsc_case, sssc_case, wssl_case, stdp_case};
  for (std::size_t f = 0; f < flows.size(); ++f) {
    for (std::uint64_t i = 0; i < 50; ++i) {
      const std::uint64_t seed = 1000 * (f + 1) + i;
      try {
        flows[f](seed, tally);
      } catch (const std::exception& e) {
        tally.record(false, "seed " + std::to_string(seed) + ": " + e.what());
      }
    }
  }
  const double s = seconds_since(t0);
  std::string detail = std::to_string(tally.cases) + " geometries, " +
                       std::to_string(tally.failures) + " mismatches, " + fmt("%.2f s", s);
  if (tally.failures > 0) detail += "; first: " + tally.first_failure;
  return {tally.failures == 0 && tally.cases == 200 && s < 60.0, detail};
}

// ------------------------------------------------------------------- 4 ----

LayerSpec linear(std::size_t n, std::size_t din, std::size_t dout) {
  LayerSpec l;
  l.name = "fc";
  l.kind = LayerKind::kSpikeLinear;
  l.geometry = golden::LinearGeometry{n, din, dout};
  return l;
}

Outcome cycle_formulas() {
  std::ostringstream detail;
  bool ok = true;

  // Every layer of the desk network: executed counters vs closed forms.
  const auto desk = harness::load_spec(kSpecDir + "/desk.json");
  std::size_t layers = 0;
  for (const auto& l : desk.network.layers) {
    if (l.kind == LayerKind::kResidual) continue;
    const auto s = dataflow::schedule_layer(l, desk.network.timesteps, desk.hardware);
    auto mem = memory::configure_banks();
    const auto r = dataflow::execute(s, mem, std::monostate{});
    ok &= r.counters == s.predicted_counters();
    ++layers;
  }
  detail << layers << " desk layers match";

  const auto qkv = dataflow::schedule_wssl(linear(196, 512, 512), 4, HardwareConfig{});
  auto mem = memory::configure_banks();
  const auto rq = dataflow::execute(qkv, mem, std::monostate{});
  ok &= rq.counters.cycles == 50176 && qkv.predicted_cycles() == 50176;
  detail << "; 512x512 N=196: " << rq.counters.cycles << " cycles";

  const auto mlp2 = dataflow::schedule_wssl(linear(196, 2048, 512), 4, HardwareConfig{});
  mem.reset();
  const auto rm = dataflow::execute(mlp2, mem, std::monostate{});
  ok &= rm.counters.cycles == 200704 && mlp2.predicted_cycles() == 200704;
  ok &= rm.counters.accumulator_buffer_high_water_bits == 192;
  detail << "; 2048x512 N=196: " << rm.counters.cycles << " cycles, buffer "
         << rm.counters.accumulator_buffer_high_water_bits << " bits";
  return {ok, detail.str()};
}

// ------------------------------------------------------------------- 5 ----

Outcome efficiency() {
  const auto m = harness::efficiency_metrics(4096, 500, 0.844, 416.1);
  const double area = *m.tsops_per_mm2, energy = *m.tsops_per_w;
  const bool ok = m.peak_gsops == 4096.0 && std::abs(area - 4.855) <= 0.001 * 4.855 &&
                  std::abs(energy - 9.844) <= 0.01;
  return {ok, fmt("peak %.0f GSOPS", m.peak_gsops) + fmt(", %.4f TSOPS/mm2", area) +
                  fmt(", %.4f TSOPS/W", energy)};
}

// ------------------------------------------------------------------- 6 ----

harness::CycleReport full_model_shape_only() {
  const auto spec = harness::load_spec(kSpecDir + "/spikformer-v2-8-512.json");
  return harness::run(spec, harness::RunConfig{});
}

Outcome distribution() {
  const auto t0 = Clock::now();
  const auto report = full_model_shape_only();
  const auto cmp = harness::compare_distribution(report);
  const double s = seconds_since(t0);
  std::ostringstream d;
  d << "ZSC " << fmt("%.2f", cmp.simulated[0]) << " SSSC " << fmt("%.2f", cmp.simulated[1])
    << " WSSL " << fmt("%.2f", cmp.simulated[2]) << " STDP " << fmt("%.2f", cmp.simulated[3])
    << " %; order " << (cmp.pass_order ? "PASS" : "FAIL") << ", WSSL>60 "
    << (cmp.wssl_dominant ? "PASS" : "FAIL") << ", stretch +-5pp "
    << (cmp.pass_tight ? "PASS" : "FAIL") << ", " << fmt("%.2f s", s);
  return {cmp.mandatory_pass() && s < 10.0, d.str()};
}

// ------------------------------------------------------------------- 7 ----

Outcome frame_rate() {
  const auto t0 = Clock::now();
  const auto report = full_model_shape_only();
  const double s = seconds_since(t0);
  // 30 fps at 500 MHz: total * 30 <= 500e6.
  const bool ok = report.total_cycles * 30 <= 500'000'000ull && s < 10.0;
  return {ok, std::to_string(report.total_cycles) + " cycles, " +
                  fmt("%.2f fps", report.fps.value()) + " (" +
                  std::to_string(report.fps.num) + "/" + std::to_string(report.fps.den) +
                  "), " + fmt("%.2f s", s)};
}

// ------------------------------------------------------------------- 8 ----

Outcome buffer_properties() {
  const auto full = harness::load_spec(kSpecDir + "/spikformer-v2-8-512.json");
  const auto& net = full.network;
  std::ostringstream d;
  bool ok = true;

  // STDP: one V tile resident instead of the whole V matrix.
  const LayerSpec* attn = nullptr;
  const LayerSpec* zsc = nullptr;
  for (const auto& l : net.layers) {
    if (!attn && l.kind == LayerKind::kSpikeAttention) attn = &l;
    if (l.kind == LayerKind::kSpikeConv) zsc = &l;  // last stem conv: split channels
  }
  {
    const auto s = dataflow::schedule_stdp(*attn, net.timesteps, full.hardware);
    auto mem = memory::configure_banks();
    dataflow::execute(s, mem, std::monostate{});
    const auto& g = attn->attention();
    const std::uint64_t hw = mem.bank(memory::BankId::kSI).high_water_bits;
    const std::uint64_t full_v = std::uint64_t{g.tokens} * g.head_dim;
    ok &= hw < full_v;
    d << "STDP V " << hw << " < " << full_v << " bits";
  }
  // ZSC: partial sums never leave the accumulator buffer, on a split layer
  // (full model) and on real data (desk).
  {
    const auto s = dataflow::schedule_zsc(*zsc, net.timesteps, full.hardware);
    auto mem = memory::configure_banks();
    const auto r = dataflow::execute(s, mem, std::monostate{});
    const auto& g = zsc->conv();
    const std::uint64_t out_bits = std::uint64_t{g.c_out} * g.h_out() * g.w_out() *
                                   net.timesteps;
    ok &= r.counters.partial_sum_sram_bits == 0;
    ok &= mem.bank(memory::BankId::kOut).write_bits == out_bits;
    std::uint64_t bank_writes = 0;
    for (const auto& b : mem.banks()) bank_writes += b.write_bits;
    ok &= bank_writes == out_bits;

    const auto desk = harness::load_spec(kSpecDir + "/desk.json");
    std::mt19937_64 rng(8);
    const auto& dl = desk.network.layers[1];
    const auto& dg = dl.conv();
    const SpikeTensor x = random_spikes({4, dg.c_in, dg.height, dg.width}, 0.5, rng);
    const WeightMatrix wt = random_weights({dg.c_out, dg.c_in, 2, 2}, rng);
    auto dmem = memory::configure_banks();
    const auto dr = dataflow::execute(dataflow::schedule_zsc(dl, 4, desk.hardware), dmem,
                                      dataflow::ZscInputs{&x, &wt});
    ok &= dr.counters.partial_sum_sram_bits == 0;
    d << "; ZSC partial-sum SRAM writes " << r.counters.partial_sum_sram_bits << " + "
      << dr.counters.partial_sum_sram_bits << " bits";
  }
  // WSSL: the 2048-input split keeps exactly 2 tokens x T x 24 bits.
  {
    const auto s = dataflow::schedule_wssl(linear(net.tokens(), net.mlp_hidden, net.embed_dim),
                                           net.timesteps, full.hardware);
    auto mem = memory::configure_banks();
    const auto r = dataflow::execute(s, mem, std::monostate{});
    ok &= r.counters.accumulator_buffer_high_water_bits == 192;
    d << "; WSSL split buffer " << r.counters.accumulator_buffer_high_water_bits << " bits";
  }
  return {ok, d.str()};
}

// ------------------------------------------------------------------- 9 ----

Outcome determinism() {
  const auto desk = harness::load_spec(kSpecDir + "/desk.json");
  const auto img = golden::synthetic_image(3, 8, 8, 5);
  harness::RunConfig cfg;
  cfg.mode = harness::Mode::kFunctional;
  cfg.seed = 5;
  const std::string a = harness::run(desk, cfg, &img).to_json();
  const std::string b = harness::run(desk, cfg, &img).to_json();
  const std::string c = full_model_shape_only().to_json();
  const std::string e = full_model_shape_only().to_json();
  return {a == b && c == e, "functional desk " + std::to_string(a.size()) +
                                " bytes, shape-only full " + std::to_string(c.size()) +
                                " bytes, identical: " + (a == b && c == e ? "yes" : "no")};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*check)();
};

const Criterion kCriteria[] = {
    {1, "exhaustive SSSC arithmetic", exhaustive_shift_sum},
    {2, "bitplane conv identity", bitplane_identity},
    {3, "oracle equivalence", oracle_equivalence},
    {4, "cycle formulas", cycle_formulas},
    {5, "efficiency arithmetic", efficiency},
    {6, "cycle distribution", distribution},
    {7, "frame rate", frame_rate},
    {8, "buffer reduction", buffer_properties},
    {9, "determinism", determinism},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vesta acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  bool all = true;
  for (const auto& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("%s criterion %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str());
    all &= o.pass;
  }
  return all ? 0 : 1;
}
