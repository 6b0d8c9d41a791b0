#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

#include "vesta/error.hpp"
#include "vesta/harness.hpp"

namespace vesta::harness {

using nlohmann::json;

namespace {

// A JSON node together with its path, for error messages.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("spec: " + path_ + ": " + what);
  }

  void expect_object(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) fail("expected an object");
    for (const auto& [key, _] : j_.items()) {
      bool ok = false;
      for (const char* a : allowed) ok |= key == a;
      if (!ok) throw ParseError("spec: " + path_ + "." + key + ": unknown key");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  Node at(const char* key) const { return Node(j_.at(key), path_ + "." + key); }

  std::uint64_t uint(std::uint64_t max = UINT32_MAX) const {
    if (!j_.is_number_integer() || (j_.is_number_integer() && j_.get<std::int64_t>() < 0)) {
      fail("expected a non-negative integer");
    }
    const auto v = j_.get<std::uint64_t>();
    if (v > max) fail("value " + std::to_string(v) + " too large");
    return v;
  }
  int integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    const auto v = j_.get<std::int64_t>();
    if (v < INT32_MIN || v > INT32_MAX) fail("integer out of range");
    return static_cast<int>(v);
  }
  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }
  bool boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
  }
  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }
  std::vector<Node> array() const {
    if (!j_.is_array()) fail("expected an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < j_.size(); ++i) {
      out.emplace_back(j_[i], path_ + "[" + std::to_string(i) + "]");
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

template <class T, class F>
void opt(const Node& n, const char* key, T& out, F&& get) {
  if (n.has(key)) out = get(n.at(key));
}

std::size_t as_size(const Node& n) { return static_cast<std::size_t>(n.uint()); }

void read_network(const Node& root, golden::NetworkSpec& s) {
  opt(root, "name", s.name, [](const Node& n) { return n.string(); });
  opt(root, "timesteps", s.timesteps, as_size);
  if (root.has("image")) {
    const Node img = root.at("image");
    img.expect_object({"channels", "height", "width"});
    opt(img, "channels", s.image_channels, as_size);
    opt(img, "height", s.image_height, as_size);
    opt(img, "width", s.image_width, as_size);
  }
  if (root.has("scs_channels")) {
    s.scs_channels.clear();
    for (const Node& c : root.at("scs_channels").array()) s.scs_channels.push_back(as_size(c));
  }
  opt(root, "embed_dim", s.embed_dim, as_size);
  opt(root, "num_blocks", s.num_blocks, as_size);
  opt(root, "num_heads", s.num_heads, as_size);
  opt(root, "mlp_hidden", s.mlp_hidden, as_size);
  opt(root, "num_classes", s.num_classes, as_size);
  opt(root, "attention_score_shift", s.attention_score_shift,
      [](const Node& n) { return n.integer(); });
  if (root.has("residual")) {
    const Node r = root.at("residual");
    const std::string v = r.string();
    if (v == "iand") {
      s.residual_op = golden::ResidualOp::kIand;
    } else if (v == "or") {
      s.residual_op = golden::ResidualOp::kOr;
    } else {
      r.fail("expected \"iand\" or \"or\"");
    }
  }
  if (root.has("requant_shift")) {
    const Node r = root.at("requant_shift");
    r.expect_object({"input_conv", "spike_conv", "qkv", "attention", "proj", "mlp1", "mlp2"});
    auto get = [](const Node& n) { return n.integer(); };
    opt(r, "input_conv", s.requant.input_conv, get);
    opt(r, "spike_conv", s.requant.spike_conv, get);
    opt(r, "qkv", s.requant.qkv, get);
    opt(r, "attention", s.requant.attention, get);
    opt(r, "proj", s.requant.proj, get);
    opt(r, "mlp1", s.requant.mlp1, get);
    opt(r, "mlp2", s.requant.mlp2, get);
  }
  if (root.has("lif")) {
    const Node l = root.at("lif");
    l.expect_object({"threshold", "decay", "reset", "carry_membrane", "mantissa_bits"});
    opt(l, "threshold", s.lif.threshold, [](const Node& n) { return n.number(); });
    if (l.has("decay")) {
      const auto d = l.at("decay").array();
      if (d.size() != 2) l.at("decay").fail("expected [numerator, denominator]");
      s.lif.decay_num = d[0].integer();
      s.lif.decay_den = d[1].integer();
    }
    if (l.has("reset")) {
      const Node r = l.at("reset");
      const std::string v = r.string();
      if (v == "hard") {
        s.lif.reset = golden::ResetMode::kHard;
      } else if (v == "subtract") {
        s.lif.reset = golden::ResetMode::kSubtract;
      } else {
        r.fail("expected \"hard\" or \"subtract\"");
      }
    }
    opt(l, "carry_membrane", s.lif.carry_membrane, [](const Node& n) { return n.boolean(); });
    opt(l, "mantissa_bits", s.lif.mantissa_bits, [](const Node& n) { return n.integer(); });
  }
}

void read_hardware(const Node& hw, dataflow::HardwareConfig& h) {
  hw.expect_object({"num_units", "pes_per_unit", "accumulator_width", "requant_width",
                    "policy", "sram_bits", "sram_budget_bits", "weight_load_latency"});
  opt(hw, "num_units", h.pe.num_units, as_size);
  opt(hw, "pes_per_unit", h.pe.pes_per_unit, as_size);
  opt(hw, "accumulator_width", h.pe.accumulator_width,
      [](const Node& n) { return n.integer(); });
  opt(hw, "requant_width", h.pe.requant_width, [](const Node& n) { return n.integer(); });
  if (hw.has("policy")) {
    const Node p = hw.at("policy");
    p.expect_object({"tokens_per_unit", "zsc_group", "v_tile"});
    opt(p, "tokens_per_unit", h.policy.tokens_per_unit, as_size);
    opt(p, "zsc_group", h.policy.zsc_group, as_size);
    opt(p, "v_tile", h.policy.v_tile, as_size);
  }
  if (hw.has("sram_bits")) {
    const Node b = hw.at("sram_bits");
    b.expect_object({"LW", "SW", "LI", "SI", "OUT"});
    for (memory::BankId id : memory::kAllBanks) {
      const std::string key = memory::to_string(id);
      if (b.has(key.c_str())) h.banks.set(id, b.at(key.c_str()).uint(UINT64_MAX));
    }
  }
  opt(hw, "sram_budget_bits", h.sram_budget_bits,
      [](const Node& n) { return n.uint(UINT64_MAX); });
  opt(hw, "weight_load_latency", h.weight_load_latency,
      [](const Node& n) { return static_cast<std::uint32_t>(n.uint()); });
}

}  // namespace

SpecFile parse_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("spec: malformed JSON: ") + e.what());
  }
  const Node root(j, "$");
  root.expect_object({"name", "timesteps", "image", "scs_channels", "embed_dim", "num_blocks",
                      "num_heads", "mlp_hidden", "num_classes", "attention_score_shift",
                      "residual", "requant_shift", "lif", "hardware"});
  SpecFile out;
  read_network(root, out.network);
  if (root.has("hardware")) read_hardware(root.at("hardware"), out.hardware);
  try {
    golden::expand_layers(out.network);
    out.hardware.policy.validate(out.hardware.pe);
    (void)memory::configure_banks(out.hardware.banks, out.hardware.sram_budget_bits);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("spec: ") + e.what());
  }
  return out;
}

SpecFile load_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("spec: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

}  // namespace vesta::harness
