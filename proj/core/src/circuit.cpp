#include "cfsim/circuit.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace cfsim {

Circuit::Circuit()
{
  nodes_.push_back(Node{});
}

CircuitBuilder::CircuitBuilder(BuildOptions options) : options_{options} {}

void CircuitBuilder::check_literal(Literal l) const
{
  if (l.node() >= circuit_.nodes_.size()) {
    throw std::out_of_range("literal references node " + std::to_string(l.node()) +
                            " which does not exist yet");
  }
}

Literal CircuitBuilder::add_input()
{
  if (circuit_.nodes_.size() != circuit_.num_inputs_ + 1) {
    throw std::logic_error("inputs must be added before any gate");
  }
  Node n;
  n.kind = NodeKind::Input;
  n.input_index = static_cast<std::uint32_t>(circuit_.num_inputs_++);
  circuit_.nodes_.push_back(n);
  return Literal{static_cast<NodeId>(circuit_.nodes_.size() - 1), false};
}

Literal CircuitBuilder::append(NodeKind kind, Literal a, Literal b)
{
  Node n;
  n.kind = kind;
  n.fanin0 = a;
  n.fanin1 = b;
  circuit_.nodes_.push_back(n);
  return Literal{static_cast<NodeId>(circuit_.nodes_.size() - 1), false};
}

Literal CircuitBuilder::add_and(Literal a, Literal b)
{
  check_literal(a);
  check_literal(b);
  if (a == kFalse || b == kFalse) {
    return kFalse;
  }
  if (a == kTrue) {
    return b;
  }
  if (b == kTrue) {
    return a;
  }
  if (options_.simplify_same_operand && a.node() == b.node()) {
    return a == b ? a : kFalse;
  }
  return append(NodeKind::And, a, b);
}

Literal CircuitBuilder::add_xor(Literal a, Literal b)
{
  check_literal(a);
  check_literal(b);
  if (a.is_constant()) {
    return b ^ a.complemented();
  }
  if (b.is_constant()) {
    return a ^ b.complemented();
  }
  const bool flip = a.complemented() != b.complemented();
  if (options_.simplify_same_operand && a.node() == b.node()) {
    return Literal::constant(flip);
  }
  // Complements on Xor fanins are pushed to the output edge.
  return append(NodeKind::Xor, a.regular(), b.regular()) ^ flip;
}

Literal CircuitBuilder::add_gate_raw(NodeKind kind, Literal a, Literal b)
{
  if (kind != NodeKind::And && kind != NodeKind::Xor) {
    throw std::invalid_argument("add_gate_raw needs an And or Xor kind");
  }
  check_literal(a);
  check_literal(b);
  if (a.is_constant() || b.is_constant()) {
    throw std::invalid_argument("gates may not have a constant fanin");
  }
  return append(kind, a, b);
}

void CircuitBuilder::add_bus(std::string name, std::vector<Literal> bits)
{
  for (Literal l : bits) {
    check_literal(l);
  }
  circuit_.buses_.push_back(OutputBus{std::move(name), std::move(bits)});
}

Circuit CircuitBuilder::freeze() &&
{
  Circuit c = std::move(circuit_);
  circuit_ = Circuit{};
  const std::size_t n = c.nodes_.size();
  c.fanout_.assign(n, 0);
  c.level_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Node& node = c.nodes_[i];
    if (!node.is_gate()) {
      continue;
    }
    const NodeId a = node.fanin0.node();
    const NodeId b = node.fanin1.node();
    ++c.fanout_[a];
    ++c.fanout_[b];
    c.level_[i] = 1 + std::max(c.level_[a], c.level_[b]);
  }
  for (const OutputBus& bus : c.buses_) {
    for (Literal l : bus.bits) {
      ++c.fanout_[l.node()];
    }
  }
  return c;
}

CircuitStats stats(const Circuit& circuit)
{
  CircuitStats s;
  s.node_count = circuit.size();
  s.input_count = circuit.num_inputs();
  for (const Node& n : circuit.nodes()) {
    if (n.kind == NodeKind::And) {
      ++s.and_count;
    } else if (n.kind == NodeKind::Xor) {
      ++s.xor_count;
    }
  }
  for (const OutputBus& bus : circuit.buses()) {
    s.output_bus_widths.push_back(bus.bits.size());
    for (Literal l : bus.bits) {
      s.level_count = std::max<std::size_t>(s.level_count, circuit.level(l.node()));
    }
  }
  return s;
}

Circuit decompose_xors(const Circuit& circuit, BuildOptions options)
{
  CircuitBuilder b{options};
  std::vector<Literal> map(circuit.size());
  map[0] = kFalse;
  auto translate = [&](Literal l) { return map[l.node()] ^ l.complemented(); };
  for (NodeId i = 1; i < circuit.size(); ++i) {
    const Node& n = circuit.node(i);
    switch (n.kind) {
      case NodeKind::Input:
        map[i] = b.add_input();
        break;
      case NodeKind::And:
        map[i] = b.add_and(translate(n.fanin0), translate(n.fanin1));
        break;
      case NodeKind::Xor: {
        const Literal x = translate(n.fanin0);
        const Literal y = translate(n.fanin1);
        // x^y = !( !(x & !y) & !(!x & y) )
        const Literal p = b.add_and(x, !y);
        const Literal q = b.add_and(!x, y);
        map[i] = !b.add_and(!p, !q);
        break;
      }
      case NodeKind::Const0:
        break;
    }
  }
  for (const OutputBus& bus : circuit.buses()) {
    std::vector<Literal> bits;
    bits.reserve(bus.bits.size());
    for (Literal l : bus.bits) {
      bits.push_back(translate(l));
    }
    b.add_bus(bus.name, std::move(bits));
  }
  return std::move(b).freeze();
}

}  // namespace cfsim
