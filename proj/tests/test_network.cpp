#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vesta/error.hpp"
#include "vesta/network.hpp"

using namespace vesta;
using namespace vesta::golden;

namespace {

NetworkSpec small_spec() {
  NetworkSpec s;
  s.name = "small";
  s.image_height = 8;
  s.image_width = 8;
  s.scs_channels = {3, 16, 32};
  s.embed_dim = 32;
  s.num_blocks = 1;
  s.num_heads = 2;
  s.mlp_hidden = 64;
  s.num_classes = 5;
  expand_layers(s);
  return s;
}

std::uint64_t fnv(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xFF;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint64_t trace_hash(const NetworkTrace& t) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (const auto& l : t.layers) {
    for (auto w : l.result.spikes.words()) h = fnv(h, w);
  }
  for (auto v : t.logits.values()) h = fnv(h, static_cast<std::uint32_t>(v));
  return h;
}

}  // namespace

TEST(Network, ExpandsStemBlocksAndHead) {
  const auto s = small_spec();
  std::vector<std::string> names;
  for (const auto& l : s.layers) names.push_back(l.name);
  const std::vector<std::string> want{
      "scs0",        "scs1",        "block0.q",    "block0.k",    "block0.v",
      "block0.attn", "block0.proj", "block0.res1", "block0.mlp1", "block0.mlp2",
      "block0.res2", "head"};
  EXPECT_EQ(names, want);
  EXPECT_EQ(s.layers[0].kind, LayerKind::kConv8bitInput);
  EXPECT_EQ(s.layers[1].kind, LayerKind::kSpikeConv);
  EXPECT_EQ(s.tokens(), 4u);
  EXPECT_EQ(s.layers[2].inputs, (std::vector<std::string>{kTokensTensor}));
  EXPECT_EQ(s.layers[5].attention().head_dim, 16u);
  EXPECT_EQ(s.layers[9].linear().d_in, 64u);
  EXPECT_EQ(s.layers.back().linear().d_out, 5u);
}

TEST(Network, ShapeTraceFollowsGeometry) {
  const auto s = small_spec();
  const auto shapes = shape_trace(s);
  EXPECT_EQ(shapes[0].second, (Shape{4, 16, 4, 4}));
  EXPECT_EQ(shapes[1].second, (Shape{4, 32, 2, 2}));
  EXPECT_EQ(shapes[8].second, (Shape{4, 4, 64}));
  EXPECT_EQ(shapes.back().second, (Shape{4, 5}));
}

TEST(Network, ValidateNamesOffendingField) {
  auto bad = [](auto mutate, const std::string& field) {
    NetworkSpec s;
    mutate(s);
    try {
      validate(s);
      ADD_FAILURE() << "no error for " << field;
    } catch (const ArgumentError& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  bad([](NetworkSpec& s) { s.num_heads = 3; }, "num_heads");
  bad([](NetworkSpec& s) { s.scs_channels = {4, 512}; }, "scs_channels");
  bad([](NetworkSpec& s) { s.image_height = 100; }, "image");
  bad([](NetworkSpec& s) { s.requant.mlp2 = 40; }, "requant_shift.mlp2");
  bad([](NetworkSpec& s) { s.lif.decay_num = 5; }, "lif.decay");
  bad([](NetworkSpec& s) { s.timesteps = 0; }, "timesteps");
}

TEST(Network, MatchesHandWiredReference) {
  // Re-derive every layer from the previous layer's spikes with the oracle
  // ops and check the walker's wiring.
  const auto s = small_spec();
  const auto params = synthesize_params(s, 4);
  const auto img = synthetic_image(3, 8, 8, 4);
  const auto trace = run_network_reference(s, params, img);
  ASSERT_EQ(trace.layers.size(), s.layers.size());

  const int T = 4;
  const auto stem = oracle::bits_of(trace.layers[1].result.spikes);  // [T][32][2][2]
  std::vector<int> tokens(stem.size());
  for (int t = 0; t < T; ++t)
    for (int c = 0; c < 32; ++c)
      for (int p = 0; p < 4; ++p) tokens[(t * 4 + p) * 32 + c] = stem[(t * 32 + c) * 4 + p];
  const auto q_acc = oracle::linear(tokens, oracle::ints_of(params.layers[2].weights), T, 4,
                                    32, 32);
  EXPECT_TRUE(oracle::equal(*trace.layers[2].result.accum, q_acc));

  const auto proj = oracle::bits_of(trace.layers[6].result.spikes);
  const auto res1 = oracle::bits_of(trace.layers[7].result.spikes);
  for (std::size_t i = 0; i < res1.size(); ++i) {
    EXPECT_EQ(res1[i], (!proj[i] && tokens[i]) ? 1 : 0);
  }

  const auto res2 = oracle::bits_of(trace.layers[10].result.spikes);
  const auto logits = oracle::linear(res2, oracle::ints_of(params.layers[11].weights), T, 4,
                                     32, 5);
  std::vector<long long> summed(T * 5, 0);
  for (int t = 0; t < T; ++t)
    for (int n = 0; n < 4; ++n)
      for (int c = 0; c < 5; ++c) summed[t * 5 + c] += logits[(t * 4 + n) * 5 + c];
  EXPECT_TRUE(oracle::equal(trace.logits, summed));
}

TEST(Network, DeterministicAndPinned) {
  const auto s = small_spec();
  const auto a = run_network_reference(s, synthesize_params(s, 9), synthetic_image(3, 8, 8, 9));
  const auto b = run_network_reference(s, synthesize_params(s, 9), synthetic_image(3, 8, 8, 9));
  EXPECT_EQ(trace_hash(a), trace_hash(b));
  const auto c = run_network_reference(s, synthesize_params(s, 10), synthetic_image(3, 8, 8, 9));
  EXPECT_NE(trace_hash(a), trace_hash(c));
  // Regression pin: catches accidental changes to parameter synthesis or
  // any golden op.
  EXPECT_EQ(trace_hash(a), 0x3de143c49d455505ull) << std::hex << trace_hash(a);
}

TEST(Network, ClassifyTakesFirstMaximumOfTimeSums) {
  EXPECT_EQ(classify(AccumTensor({2, 3}, {1, 5, 5, 4, 0, 0})), 0u);
  EXPECT_EQ(classify(AccumTensor({2, 3}, {1, 5, 5, 0, 1, 0})), 1u);
  EXPECT_THROW(classify(AccumTensor({3}, {1, 2, 3})), ShapeError);
}

TEST(Network, LayerErrorCarriesIndexAndName) {
  const auto s = small_spec();
  auto params = synthesize_params(s, 1);
  params.layers[6].weights = WeightMatrix({32, 31});
  try {
    run_network_reference(s, params, synthetic_image(3, 8, 8, 1));
    FAIL() << "expected LayerError";
  } catch (const LayerError& e) {
    EXPECT_EQ(e.layer_index(), 6u);
    EXPECT_EQ(e.layer_name(), "block0.proj");
  }
  EXPECT_THROW(run_network_reference(s, params, synthetic_image(3, 4, 4, 1)), ShapeError);
}
