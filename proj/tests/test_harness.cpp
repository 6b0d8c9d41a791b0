#include <gtest/gtest.h>

#include <numeric>

#include "vesta/error.hpp"
#include "vesta/harness.hpp"

using namespace vesta;
using namespace vesta::harness;

namespace {

const std::string kSpecDir = VESTA_SPEC_DIR;

SpecFile desk() { return load_spec(kSpecDir + "/desk.json"); }

std::string parse_error_of(const std::string& text) {
  try {
    parse_spec(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Spec, LoadsBundledSpecs) {
  const auto d = desk();
  EXPECT_EQ(d.network.num_blocks, 2u);
  EXPECT_EQ(d.network.tokens(), 4u);
  EXPECT_EQ(d.hardware.pe.total_pes(), 4096u);

  const auto f = load_spec(kSpecDir + "/spikformer-v2-8-512.json");
  EXPECT_EQ(f.network.num_blocks, 8u);
  EXPECT_EQ(f.network.embed_dim, 512u);
  EXPECT_EQ(f.network.mlp_hidden, 2048u);
  EXPECT_EQ(f.network.tokens(), 196u);
  // 4 stem convs + 8 x 9 block layers + head.
  EXPECT_EQ(f.network.layers.size(), 4u + 72u + 1u);
}

TEST(Spec, ErrorsNameTheJsonPath) {
  EXPECT_NE(parse_error_of(R"({"timesteps": 4, "bogus": 1})").find("$.bogus"),
            std::string::npos);
  EXPECT_NE(parse_error_of(R"({"lif": {"decay": [1]}})").find("$.lif.decay"),
            std::string::npos);
  EXPECT_NE(parse_error_of(R"({"hardware": {"sram_bits": {"LW": 1000000}}})").find("SRAM"),
            std::string::npos);
  EXPECT_NE(parse_error_of(R"({"num_heads": 7})").find("num_heads"), std::string::npos);
  EXPECT_NE(parse_error_of("{").find("malformed"), std::string::npos);
  EXPECT_THROW(load_spec(kSpecDir + "/does-not-exist.json"), ParseError);
}

TEST(Metrics, PeakAndEfficiency) {
  const auto m = efficiency_metrics(4096, 500, 0.844, 416.1);
  EXPECT_DOUBLE_EQ(m.peak_gsops, 4096.0);
  ASSERT_TRUE(m.tsops_per_mm2 && m.tsops_per_w);
  EXPECT_NEAR(*m.tsops_per_mm2, 4.855, 4.855 * 0.001);
  EXPECT_NEAR(*m.tsops_per_w, 9.844, 0.01);
  EXPECT_FALSE(efficiency_metrics(4096, 500).tsops_per_w.has_value());
  EXPECT_THROW(efficiency_metrics(0, 500), ArgumentError);
  EXPECT_THROW(efficiency_metrics(4096, 500, -1.0), ArgumentError);
}

TEST(Rational, Reduces) {
  EXPECT_EQ(make_rational(500000000, 5696144), (Rational{31250000, 356009}));
  EXPECT_THROW(make_rational(1, 0), ArgumentError);
}

TEST(Compare, ReferenceAgainstItself) {
  const auto c = compare_distribution(kTable2Reference);
  for (double d : c.delta) EXPECT_EQ(d, 0.0);
  EXPECT_TRUE(c.pass_order);
  EXPECT_TRUE(c.pass_tight);
  EXPECT_TRUE(c.mandatory_pass());
  EXPECT_FALSE(c.to_text().empty());
}

TEST(Compare, OrderingAndShareAreIndependent) {
  const auto c = compare_distribution(Distribution{5, 1, 80, 14});
  EXPECT_FALSE(c.pass_order);
  EXPECT_TRUE(c.wssl_dominant);
  const auto d = compare_distribution(Distribution{1, 9, 50, 40});
  EXPECT_TRUE(d.pass_order);
  EXPECT_FALSE(d.wssl_dominant);
  EXPECT_FALSE(d.mandatory_pass());
}

TEST(Compare, ReportJsonRoundTripAndMissingPhase) {
  const auto r = run(desk(), RunConfig{});
  const auto dist = distribution_from_report_json(r.to_json());
  const auto pct = r.percentages();
  for (std::size_t i = 0; i < dist.size(); ++i) EXPECT_NEAR(dist[i], pct[i], 1e-9);
  EXPECT_THROW(distribution_from_report_json(R"({"phases": {"ZSC": {"percent": 1}}})"),
               ReportError);
  EXPECT_THROW(distribution_from_report_json("[]"), ReportError);
  EXPECT_THROW(distribution_from_report_json("not json"), ReportError);
}

TEST(Run, DeskFunctionalIsBitExact) {
  const auto spec = desk();
  const auto img = golden::synthetic_image(3, 8, 8, 1);
  RunConfig cfg;
  cfg.mode = Mode::kFunctional;
  cfg.seed = 1;
  const auto r = run(spec, cfg, &img);
  EXPECT_TRUE(r.all_layers_pass());
  // Every layer with a PE dataflow gets a verdict; residuals do not.
  EXPECT_EQ(r.verdicts.size(), 3u + 2u * 7u);
  ASSERT_TRUE(r.predicted_class.has_value());

  const auto reference =
      golden::run_network_reference(spec.network, golden::synthesize_params(spec.network, 1), img);
  EXPECT_EQ(*r.predicted_class, reference.predicted_class);
}

TEST(Run, FunctionalNeedsImage) {
  RunConfig cfg;
  cfg.mode = Mode::kFunctional;
  EXPECT_THROW(run(desk(), cfg), ArgumentError);
}

TEST(Run, ShapeOnlyMatchesCycleMode) {
  // Enumerating every item must land on the same counters as the closed forms.
  const auto spec = desk();
  RunConfig shape;
  RunConfig cycle;
  cycle.mode = Mode::kCycle;
  const auto a = run(spec, shape);
  const auto b = run(spec, cycle);
  EXPECT_EQ(a.total_cycles, b.total_cycles);
  for (auto p : dataflow::kAllPhases) {
    EXPECT_EQ(a.phases[static_cast<std::size_t>(p)].active_lanes,
              b.phases[static_cast<std::size_t>(p)].active_lanes);
  }
}

TEST(Run, ReportInvariants) {
  const auto r = run(desk(), RunConfig{});
  const auto pct = r.percentages();
  EXPECT_NEAR(std::accumulate(pct.begin(), pct.end(), 0.0), 100.0, 0.01);
  // fps * total_cycles == clock, exactly.
  const std::uint64_t clock_hz = 500'000'000;
  EXPECT_EQ(r.fps.num * r.total_cycles, clock_hz * r.fps.den);
  EXPECT_EQ(r.to_json(), run(desk(), RunConfig{}).to_json());
  EXPECT_NE(r.to_json().find("\"basis\": \"pure-compute\""), std::string::npos);
  EXPECT_FALSE(r.to_table().empty());
}
