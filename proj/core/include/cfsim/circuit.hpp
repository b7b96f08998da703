#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cfsim {

/// Dense node index. Node 0 is the constant-0 node; inputs follow, then gates,
/// so every gate's fanins have smaller indices.
using NodeId = std::uint32_t;

/// Edge into a node, optionally complemented.
class Literal {
 public:
  constexpr Literal() = default;
  constexpr Literal(NodeId node, bool complemented)
      : data_{(node << 1) | (complemented ? 1u : 0u)}
  {
  }

  static constexpr Literal constant(bool value) { return Literal{0, value}; }
  static constexpr Literal from_raw(std::uint32_t raw)
  {
    Literal l;
    l.data_ = raw;
    return l;
  }

  constexpr NodeId node() const { return data_ >> 1; }
  constexpr bool complemented() const { return (data_ & 1u) != 0; }
  constexpr bool is_constant() const { return node() == 0; }
  constexpr std::uint32_t raw() const { return data_; }

  /// Same node with the complement flag cleared.
  constexpr Literal regular() const { return from_raw(data_ & ~1u); }

  constexpr Literal operator!() const { return from_raw(data_ ^ 1u); }
  constexpr Literal operator^(bool flip) const { return from_raw(data_ ^ (flip ? 1u : 0u)); }

  friend constexpr bool operator==(Literal, Literal) = default;
  friend constexpr auto operator<=>(Literal, Literal) = default;

 private:
  std::uint32_t data_ = 0;
};

inline constexpr Literal kFalse = Literal::constant(false);
inline constexpr Literal kTrue = Literal::constant(true);

enum class NodeKind : std::uint8_t { Const0, Input, And, Xor };

struct Node {
  NodeKind kind = NodeKind::Const0;
  Literal fanin0;
  Literal fanin1;
  std::uint32_t input_index = 0;

  bool is_gate() const { return kind == NodeKind::And || kind == NodeKind::Xor; }
  friend bool operator==(const Node&, const Node&) = default;
};

/// One multi-bit output, least-significant bit first.
struct OutputBus {
  std::string name;
  std::vector<Literal> bits;

  friend bool operator==(const OutputBus&, const OutputBus&) = default;
};

/// Frozen And/Xor-inverter graph. Immutable; safe to share between threads.
class Circuit {
 public:
  Circuit();

  std::size_t size() const { return nodes_.size(); }
  std::size_t num_inputs() const { return num_inputs_; }
  std::size_t num_gates() const { return nodes_.size() - 1 - num_inputs_; }

  std::span<const Node> nodes() const { return nodes_; }
  const Node& node(NodeId id) const { return nodes_[id]; }
  NodeId input_node(std::size_t k) const { return static_cast<NodeId>(k + 1); }
  Literal input(std::size_t k) const { return Literal{input_node(k), false}; }

  std::span<const OutputBus> buses() const { return buses_; }

  /// Gate fanin references plus output-bus references.
  std::uint32_t fanout_count(NodeId id) const { return fanout_[id]; }
  /// Gates on the longest path from a constant or input; those sit at level 0.
  std::uint32_t level(NodeId id) const { return level_[id]; }

  /// Structural equality: same nodes, same buses in the same order.
  friend bool operator==(const Circuit& a, const Circuit& b)
  {
    return a.num_inputs_ == b.num_inputs_ && a.nodes_ == b.nodes_ && a.buses_ == b.buses_;
  }

 private:
  friend class CircuitBuilder;

  std::vector<Node> nodes_;
  std::size_t num_inputs_ = 0;
  std::vector<OutputBus> buses_;
  std::vector<std::uint32_t> fanout_;
  std::vector<std::uint32_t> level_;
};

struct BuildOptions {
  /// Apply and(x,x)=x, and(x,!x)=0, xor(x,x)=0, xor(x,!x)=1 on top of
  /// constant propagation. There is never any structural hashing.
  bool simplify_same_operand = true;
};

/// Append-only construction of a Circuit. All inputs must be created before
/// the first gate.
class CircuitBuilder {
 public:
  explicit CircuitBuilder(BuildOptions options = {});

  Literal add_input();
  Literal add_and(Literal a, Literal b);
  Literal add_xor(Literal a, Literal b);
  Literal add_or(Literal a, Literal b) { return !add_and(!a, !b); }

  /// Appends a gate exactly as given, with no simplification. Fanins must
  /// reference existing non-constant nodes. Used by file readers.
  Literal add_gate_raw(NodeKind kind, Literal a, Literal b);

  void add_bus(std::string name, std::vector<Literal> bits);

  std::size_t size() const { return circuit_.nodes_.size(); }
  std::size_t num_inputs() const { return circuit_.num_inputs_; }
  const BuildOptions& options() const { return options_; }

  /// Computes fanout counts and levels and hands over the finished circuit.
  Circuit freeze() &&;

 private:
  void check_literal(Literal l) const;
  Literal append(NodeKind kind, Literal a, Literal b);

  BuildOptions options_;
  Circuit circuit_;
};

struct CircuitStats {
  std::size_t node_count = 0;
  std::size_t and_count = 0;
  std::size_t xor_count = 0;
  std::size_t level_count = 0;
  std::size_t input_count = 0;
  std::vector<std::size_t> output_bus_widths;
};

CircuitStats stats(const Circuit& circuit);

/// Rebuilds the circuit with every Xor2 replaced by three And2 gates and
/// inverters. Output functions are unchanged.
Circuit decompose_xors(const Circuit& circuit, BuildOptions options = {});

}  // namespace cfsim
