#include "cfsim/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cfsim/word_arith.hpp"

namespace cfsim {

using nlohmann::json;

std::size_t ForestModel::input_features() const
{
  if (num_features != 0) {
    return num_features;
  }
  std::size_t n = 0;
  for (const DecisionTree& t : trees) {
    for (const TreeNode& node : t.nodes) {
      if (!node.is_leaf()) {
        n = std::max(n, static_cast<std::size_t>(node.feature) + 1);
      }
    }
  }
  return n;
}

void validate(const MlpModel& m)
{
  if (m.layer_sizes.size() < 2) {
    throw std::invalid_argument("mlp: need at least input and output layer sizes");
  }
  if (m.layer_sizes.back() != kNumClasses) {
    throw std::invalid_argument("mlp: output layer must have 10 units");
  }
  const std::size_t layers = m.layer_sizes.size() - 1;
  if (m.weights.size() != layers || m.biases.size() != layers) {
    throw std::invalid_argument("mlp: weights/biases do not match layer_sizes");
  }
  for (std::size_t k = 0; k < layers; ++k) {
    if (m.weights[k].size() != m.layer_sizes[k + 1] || m.biases[k].size() != m.layer_sizes[k + 1]) {
      throw std::invalid_argument("mlp: layer " + std::to_string(k) + " has the wrong row count");
    }
    for (const auto& row : m.weights[k]) {
      if (row.size() != m.layer_sizes[k]) {
        throw std::invalid_argument("mlp: layer " + std::to_string(k) +
                                    " has a row of the wrong width");
      }
    }
  }
}

void validate(const QuantizedMlp& q)
{
  if (q.layer_sizes.size() < 2 || q.layer_sizes.back() != kNumClasses) {
    throw std::invalid_argument("quantized mlp: bad layer sizes");
  }
  const std::size_t layers = q.layer_sizes.size() - 1;
  if (q.weights.size() != layers || q.biases.size() != layers) {
    throw std::invalid_argument("quantized mlp: weights/biases do not match layer_sizes");
  }
  for (std::size_t k = 0; k < layers; ++k) {
    if (q.weights[k].size() != q.layer_sizes[k + 1] || q.biases[k].size() != q.layer_sizes[k + 1]) {
      throw std::invalid_argument("quantized mlp: wrong row count");
    }
    for (const auto& row : q.weights[k]) {
      if (row.size() != q.layer_sizes[k]) {
        throw std::invalid_argument("quantized mlp: wrong row width");
      }
      for (std::int32_t w : row) {
        if (w < kWeightFormat.min_code() || w > kWeightFormat.max_code()) {
          throw std::out_of_range("quantized mlp: weight code out of range");
        }
      }
    }
    for (std::int32_t b : q.biases[k]) {
      if (b < kAccumulatorFormat.min_code() || b > kAccumulatorFormat.max_code()) {
        throw std::out_of_range("quantized mlp: bias code out of range");
      }
    }
  }
}

void validate(const ForestModel& f)
{
  for (std::size_t t = 0; t < f.trees.size(); ++t) {
    const auto& nodes = f.trees[t].nodes;
    if (nodes.empty()) {
      throw std::invalid_argument("forest: tree " + std::to_string(t) + " is empty");
    }
    for (const TreeNode& n : nodes) {
      if (n.is_leaf()) {
        for (std::uint32_t c : n.counts) {
          if (c > 65535) {
            throw std::out_of_range("forest: class count " + std::to_string(c) +
                                    " exceeds 65535");
          }
        }
        continue;
      }
      if (n.feature < 0 || n.threshold < 0 || n.threshold > 255 || n.right < 0 ||
          static_cast<std::size_t>(n.left) >= nodes.size() ||
          static_cast<std::size_t>(n.right) >= nodes.size()) {
        throw std::invalid_argument("forest: malformed internal node in tree " +
                                    std::to_string(t));
      }
      if (f.num_features != 0 && static_cast<std::size_t>(n.feature) >= f.num_features) {
        throw std::out_of_range("forest: feature index beyond num_features");
      }
    }
  }
}

void validate(const LutModel& l)
{
  for (const LutEntry& e : l.entries) {
    if (e.label >= kNumClasses) {
      throw std::out_of_range("lut: label out of range");
    }
    if (e.x.size() != l.entries.front().x.size()) {
      throw std::invalid_argument("lut: entries have different widths");
    }
  }
}

std::int32_t quantize_weight(double w)
{
  if (std::isnan(w)) {
    throw std::invalid_argument("quantize: NaN weight");
  }
  const double clamped = std::clamp(w, -2.0, 127.0 / 64.0);
  return static_cast<std::int32_t>(std::nearbyint(clamped * 64.0));
}

std::int32_t quantize_bias(double b)
{
  if (std::isnan(b)) {
    throw std::invalid_argument("quantize: NaN bias");
  }
  const double hi = static_cast<double>((std::int64_t{1} << 23) - 1) / 4096.0;
  const double clamped = std::clamp(b, -2048.0, hi);
  return static_cast<std::int32_t>(std::nearbyint(clamped * 4096.0));
}

QuantizedMlp quantize_mlp(const MlpModel& m)
{
  validate(m);
  QuantizedMlp q;
  q.layer_sizes = m.layer_sizes;
  for (std::size_t k = 0; k < m.weights.size(); ++k) {
    auto& rows = q.weights.emplace_back();
    for (const auto& row : m.weights[k]) {
      auto& out = rows.emplace_back();
      out.reserve(row.size());
      for (double w : row) {
        out.push_back(quantize_weight(w));
      }
    }
    auto& bias = q.biases.emplace_back();
    for (double b : m.biases[k]) {
      bias.push_back(quantize_bias(b));
    }
  }
  return q;
}

std::int32_t pixel_to_activation(std::uint8_t p)
{
  // round(64p/255); 64p/255 is never exactly halfway between integers.
  return static_cast<std::int32_t>((128 * static_cast<std::int32_t>(p) + 255) / 510);
}

std::array<std::int64_t, kNumClasses> reference_eval_quantized_mlp(
    const QuantizedMlp& q, std::span<const std::uint8_t> pixels, Multiplier mult)
{
  if (pixels.size() != q.layer_sizes.front()) {
    throw std::invalid_argument("reference_eval_quantized_mlp: wrong input width");
  }
  std::vector<std::int64_t> act(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    act[i] = pixel_to_activation(pixels[i]);
  }
  const std::size_t layers = q.weights.size();
  for (std::size_t k = 0; k < layers; ++k) {
    std::vector<std::int64_t> next(q.layer_sizes[k + 1]);
    for (std::size_t j = 0; j < next.size(); ++j) {
      std::int64_t acc = 0;
      bool first = true;
      const auto& row = q.weights[k][j];
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] == 0) {
          continue;
        }
        const std::int64_t p = mult == Multiplier::Csd ? fixed::mul_const_csd(act[i], row[i])
                                                       : fixed::mul_const_array(act[i], row[i]);
        acc = first ? p : fixed::add_saturating(acc, p, kAccumulatorFormat);
        first = false;
      }
      const std::int64_t bias = q.biases[k][j];
      acc = first ? bias : fixed::add_saturating(acc, bias, kAccumulatorFormat);
      std::int64_t a = fixed::rescale_24_to_16(acc);
      if (k + 1 < layers) {
        a = std::max<std::int64_t>(a, 0);
      }
      next[j] = a;
    }
    act = std::move(next);
  }
  std::array<std::int64_t, kNumClasses> out{};
  std::copy(act.begin(), act.end(), out.begin());
  return out;
}

std::array<std::int64_t, kNumClasses> reference_eval_forest(const ForestModel& f,
                                                            std::span<const std::uint8_t> pixels)
{
  std::array<std::int64_t, kNumClasses> total{};
  bool first = true;
  for (const DecisionTree& t : f.trees) {
    std::size_t i = 0;
    while (!t.nodes[i].is_leaf()) {
      const TreeNode& n = t.nodes[i];
      i = pixels[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const std::int64_t v = t.nodes[i].counts[c];
      total[c] = first ? v : std::min<std::int64_t>(total[c] + v, 65535);
    }
    first = false;
  }
  return total;
}

std::array<std::int64_t, kNumClasses> reference_eval_lut(const LutModel& l,
                                                         std::span<const std::uint8_t> pixels)
{
  std::array<std::int64_t, kNumClasses> out{};
  std::size_t cls = 0;
  for (const LutEntry& e : l.entries) {
    if (std::equal(e.x.begin(), e.x.end(), pixels.begin(), pixels.end())) {
      cls = e.label;
      break;
    }
  }
  out[cls] = 1;
  return out;
}

std::vector<double> float_eval_mlp(const MlpModel& m, std::span<const std::uint8_t> pixels)
{
  std::vector<double> act(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    act[i] = pixels[i] / 255.0;
  }
  for (std::size_t k = 0; k < m.weights.size(); ++k) {
    std::vector<double> next(m.weights[k].size());
    for (std::size_t j = 0; j < next.size(); ++j) {
      double s = m.biases[k][j];
      const auto& row = m.weights[k][j];
      for (std::size_t i = 0; i < row.size(); ++i) {
        s += row[i] * act[i];
      }
      next[j] = (k + 1 < m.weights.size()) ? std::max(s, 0.0) : s;
    }
    act = std::move(next);
  }
  return act;
}

std::size_t argmax(std::span<const std::int64_t> scores)
{
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

std::size_t argmax(std::span<const double> scores)
{
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

std::size_t node_count(const ForestModel& f)
{
  std::size_t n = 0;
  for (const DecisionTree& t : f.trees) {
    n += t.nodes.size();
  }
  return n;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json tree_to_json(const DecisionTree& t, std::size_t i)
{
  const TreeNode& n = t.nodes[i];
  if (n.is_leaf()) {
    return json{{"counts", n.counts}};
  }
  return json{{"feature", n.feature},
              {"threshold", n.threshold},
              {"left", tree_to_json(t, static_cast<std::size_t>(n.left))},
              {"right", tree_to_json(t, static_cast<std::size_t>(n.right))}};
}

std::int32_t tree_from_json(const json& j, DecisionTree& t)
{
  const auto index = static_cast<std::int32_t>(t.nodes.size());
  t.nodes.emplace_back();
  if (j.contains("counts")) {
    const auto counts = j.at("counts").get<std::vector<std::int64_t>>();
    if (counts.size() != kNumClasses) {
      throw std::invalid_argument("forest json: leaf needs 10 counts");
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (counts[c] < 0 || counts[c] > 65535) {
        throw std::out_of_range("forest json: class count out of range");
      }
      t.nodes[index].counts[c] = static_cast<std::uint32_t>(counts[c]);
    }
    return index;
  }
  const std::int32_t feature = j.at("feature").get<std::int32_t>();
  const std::int32_t threshold = j.at("threshold").get<std::int32_t>();
  const std::int32_t left = tree_from_json(j.at("left"), t);
  const std::int32_t right = tree_from_json(j.at("right"), t);
  TreeNode& n = t.nodes[index];
  n.feature = feature;
  n.threshold = threshold;
  n.left = left;
  n.right = right;
  return index;
}

struct ToJson {
  json operator()(const MlpModel& m) const
  {
    return json{{"kind", "mlp"},
                {"layer_sizes", m.layer_sizes},
                {"weights", m.weights},
                {"biases", m.biases}};
  }
  json operator()(const ForestModel& f) const
  {
    json trees = json::array();
    for (const DecisionTree& t : f.trees) {
      trees.push_back(tree_to_json(t, 0));
    }
    json j{{"kind", "forest"}, {"trees", std::move(trees)}};
    if (f.num_features != 0) {
      j["num_features"] = f.num_features;
    }
    return j;
  }
  json operator()(const LutModel& l) const
  {
    json entries = json::array();
    json labels = json::array();
    for (const LutEntry& e : l.entries) {
      entries.push_back(e.x);
      labels.push_back(e.label);
    }
    return json{{"kind", "lut"}, {"entries", std::move(entries)}, {"labels", std::move(labels)}};
  }
};

}  // namespace

std::string to_json(const AnyModel& m)
{
  return std::visit(ToJson{}, m).dump() + "\n";
}

AnyModel model_from_json(const std::string& text)
{
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("model json: ") + e.what());
  }
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "mlp") {
      MlpModel m;
      m.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
      m.weights = j.at("weights").get<std::vector<std::vector<std::vector<double>>>>();
      m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
      validate(m);
      return m;
    }
    if (kind == "forest") {
      ForestModel f;
      for (const json& t : j.at("trees")) {
        DecisionTree tree;
        tree_from_json(t, tree);
        f.trees.push_back(std::move(tree));
      }
      f.num_features = j.value("num_features", std::size_t{0});
      validate(f);
      return f;
    }
    if (kind == "lut") {
      LutModel l;
      const auto xs = j.at("entries").get<std::vector<std::vector<std::uint8_t>>>();
      const auto ys = j.at("labels").get<std::vector<int>>();
      if (xs.size() != ys.size()) {
        throw std::invalid_argument("lut json: entries and labels differ in length");
      }
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (ys[i] < 0 || ys[i] >= static_cast<int>(kNumClasses)) {
          throw std::out_of_range("lut json: label out of range");
        }
        l.entries.push_back(LutEntry{xs[i], static_cast<std::uint8_t>(ys[i])});
      }
      validate(l);
      return l;
    }
    throw std::invalid_argument("model json: unknown kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("model json: ") + e.what());
  }
}

void save_model(const AnyModel& m, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out << to_json(m);
}

AnyModel load_model(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace cfsim
