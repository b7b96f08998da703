#include "cfsim/compile.hpp"

#include <array>
#include <stdexcept>
#include <string>

#include "cfsim/word_arith.hpp"

namespace cfsim {

namespace {

std::vector<BitWord> add_byte_inputs(CircuitBuilder& b, std::size_t features)
{
  std::vector<BitWord> bytes(features);
  for (std::size_t f = 0; f < features; ++f) {
    bytes[f].format = kByteFormat;
    for (int bit = 0; bit < 8; ++bit) {
      bytes[f].bits.push_back(b.add_input());
    }
  }
  return bytes;
}

void add_class_buses(CircuitBuilder& b, const std::vector<BitWord>& words)
{
  for (std::size_t c = 0; c < words.size(); ++c) {
    b.add_bus("class" + std::to_string(c), words[c].bits);
  }
}

Circuit finish(CircuitBuilder&& b, const CompileOptions& options)
{
  Circuit c = std::move(b).freeze();
  if (options.gates == GateSet::AndOnly) {
    return decompose_xors(c, options.build);
  }
  return c;
}

BitWord neuron(CircuitBuilder& b, const std::vector<BitWord>& inputs,
               const std::vector<std::int32_t>& weights, std::int32_t bias, Multiplier mult)
{
  BitWord acc;
  bool first = true;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0) {
      continue;
    }
    BitWord p = mult == Multiplier::Csd ? mul_const_csd(b, inputs[i], weights[i])
                                        : mul_const_array(b, inputs[i], weights[i]);
    acc = first ? std::move(p) : add_saturating(b, acc, p);
    first = false;
  }
  const BitWord bias_word = const_word(b, bias, kAccumulatorFormat);
  return first ? bias_word : add_saturating(b, acc, bias_word);
}

using ClassWords = std::vector<BitWord>;

ClassWords compile_subtree(CircuitBuilder& b, const DecisionTree& t, std::size_t i,
                           const std::vector<BitWord>& features)
{
  const TreeNode& n = t.nodes[i];
  if (n.is_leaf()) {
    ClassWords leaf;
    for (std::uint32_t count : n.counts) {
      leaf.push_back(const_word(b, count, kCountFormat));
    }
    return leaf;
  }
  const Literal go_left =
      compare_leq_const(b, features[static_cast<std::size_t>(n.feature)], n.threshold);
  const ClassWords left = compile_subtree(b, t, static_cast<std::size_t>(n.left), features);
  const ClassWords right = compile_subtree(b, t, static_cast<std::size_t>(n.right), features);
  ClassWords out;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    out.push_back(mux_word(b, go_left, left[c], right[c]));
  }
  return out;
}

Literal and_tree(CircuitBuilder& b, std::vector<Literal> terms)
{
  if (terms.empty()) {
    return kTrue;
  }
  while (terms.size() > 1) {
    std::vector<Literal> next;
    next.reserve((terms.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < terms.size(); i += 2) {
      next.push_back(b.add_and(terms[i], terms[i + 1]));
    }
    if (terms.size() % 2 == 1) {
      next.push_back(terms.back());
    }
    terms = std::move(next);
  }
  return terms.front();
}

}  // namespace

Circuit compile_mlp(const QuantizedMlp& q, const CompileOptions& options)
{
  validate(q);
  CircuitBuilder b{options.build};
  const std::vector<BitWord> bytes = add_byte_inputs(b, q.layer_sizes.front());

  std::array<std::int64_t, 256> table{};
  for (int p = 0; p < 256; ++p) {
    table[static_cast<std::size_t>(p)] = pixel_to_activation(static_cast<std::uint8_t>(p));
  }
  std::vector<BitWord> act;
  act.reserve(bytes.size());
  for (const BitWord& byte : bytes) {
    act.push_back(byte_lookup(b, byte.bits, table, kActivationFormat));
  }

  const std::size_t layers = q.weights.size();
  for (std::size_t k = 0; k < layers; ++k) {
    std::vector<BitWord> next;
    next.reserve(q.layer_sizes[k + 1]);
    for (std::size_t j = 0; j < q.layer_sizes[k + 1]; ++j) {
      BitWord a = rescale_24_to_16(b, neuron(b, act, q.weights[k][j], q.biases[k][j], options.mult));
      if (k + 1 < layers) {
        a = relu(b, a);
      }
      next.push_back(std::move(a));
    }
    act = std::move(next);
  }
  add_class_buses(b, act);
  return finish(std::move(b), options);
}

Circuit compile_forest(const ForestModel& f, const CompileOptions& options)
{
  validate(f);
  CircuitBuilder b{options.build};
  const std::vector<BitWord> features = add_byte_inputs(b, f.input_features());
  ClassWords total;
  for (const DecisionTree& t : f.trees) {
    ClassWords out = compile_subtree(b, t, 0, features);
    if (total.empty()) {
      total = std::move(out);
      continue;
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      total[c] = add_saturating_unsigned(b, total[c], out[c]);
    }
  }
  if (total.empty()) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      total.push_back(const_word(b, 0, kCountFormat));
    }
  }
  add_class_buses(b, total);
  return finish(std::move(b), options);
}

Circuit compile_lut(const LutModel& l, const CompileOptions& options)
{
  validate(l);
  CircuitBuilder b{options.build};
  const std::size_t width = l.entries.empty() ? 0 : l.entries.front().x.size();
  const std::vector<BitWord> bytes = add_byte_inputs(b, width);

  std::vector<Literal> match;
  match.reserve(l.entries.size());
  for (const LutEntry& e : l.entries) {
    std::vector<Literal> terms;
    terms.reserve(width * 8);
    for (std::size_t f = 0; f < width; ++f) {
      for (int bit = 0; bit < 8; ++bit) {
        // XNOR against a constant bit folds to the input literal or its complement.
        const bool stored = ((e.x[f] >> bit) & 1) != 0;
        terms.push_back(!b.add_xor(bytes[f].bits[bit], Literal::constant(stored)));
      }
    }
    match.push_back(and_tree(b, std::move(terms)));
  }

  // Priority chain built from the last entry back so the first match wins.
  std::vector<Literal> out(kNumClasses, kFalse);
  out[0] = kTrue;
  for (std::size_t i = l.entries.size(); i-- > 0;) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      out[c] = mux(b, match[i], Literal::constant(l.entries[i].label == c), out[c]);
    }
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    b.add_bus("class" + std::to_string(c), {out[c]});
  }
  return finish(std::move(b), options);
}

Circuit compile_model(const AnyModel& m, const CompileOptions& options)
{
  if (const auto* mlp = std::get_if<MlpModel>(&m)) {
    return compile_mlp(quantize_mlp(*mlp), options);
  }
  if (const auto* forest = std::get_if<ForestModel>(&m)) {
    return compile_forest(*forest, options);
  }
  return compile_lut(std::get<LutModel>(m), options);
}

}  // namespace cfsim
