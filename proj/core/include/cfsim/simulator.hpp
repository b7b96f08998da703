#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfsim/bits.hpp"
#include "cfsim/circuit.hpp"

namespace cfsim {

/// One bit column per primary input, all num_examples long.
struct Stimulus {
  std::size_t num_examples = 0;
  std::vector<BitColumn> inputs;

  std::size_t num_words() const { return words_for(num_examples); }
};

/// Row-major bytes (num_examples x features) to 8 inputs per feature,
/// LSB first, feature-major.
Stimulus byte_stimulus(std::span<const std::uint8_t> rows, std::size_t num_examples,
                       std::size_t features);

/// Pass-1 occurrence counts of the value 1 at every node output.
struct CountTable {
  std::size_t num_examples = 0;
  std::vector<std::uint32_t> ones;

  std::uint32_t count(NodeId id, bool value) const
  {
    return value ? ones[id] : static_cast<std::uint32_t>(num_examples) - ones[id];
  }
};

/// Per-gate counts of the fanin patterns 00, 01, 10, 11 (fanin0 is the high
/// digit), as seen by the gate after edge complementation. Non-gates are zero.
struct PairCountTable {
  std::vector<std::array<std::uint32_t, 4>> counts;
};

struct BusValues {
  std::string name;
  std::vector<BitColumn> bits;

  friend bool operator==(const BusValues&, const BusValues&) = default;
};
using OutputColumns = std::vector<BusValues>;

struct SimOptions {
  /// 0 picks the hardware concurrency; CFSIM_THREADS caps either choice.
  unsigned threads = 0;
  /// Free a node's column as soon as its last fanout has read it.
  bool recycle = true;
  /// Example block size in words; results never depend on it.
  std::size_t block_words = 64;
};

struct SimStats {
  std::size_t peak_live_columns = 0;
};

struct CountResult {
  CountTable counts;
  std::optional<PairCountTable> pairs;
  OutputColumns outputs;
  SimStats stats;
};

/// Unperturbed simulation that also counts patterns.
CountResult simulate_and_count(const Circuit& circuit, const Stimulus& stimulus,
                               bool want_pairs = false, const SimOptions& options = {});

enum class PerturbMode { None, Simple, Composite, Randomized, Noise };

/// What the second pass does to each node. Built from pass-1 counts (CFS
/// modes) or from parameters alone (noise).
class PerturbPlan {
 public:
  static PerturbPlan none(const Circuit& circuit);
  /// Flip every value whose pass-1 count is <= l.
  static PerturbPlan simple(const Circuit& circuit, const CountTable& counts, std::uint64_t l,
                            bool include_inputs = true);
  /// Like simple, but a triggered bit becomes a fair random bit.
  static PerturbPlan randomized(const Circuit& circuit, const CountTable& counts,
                                std::uint64_t l, std::uint64_t seed, bool include_inputs = true);
  /// Flip a gate's output when its fanin pattern occurred <= l times.
  static PerturbPlan composite(const Circuit& circuit, const PairCountTable& pairs,
                               std::uint64_t l);
  /// Flip each gate output bit independently with probability p.
  static PerturbPlan noise(const Circuit& circuit, double p, std::uint64_t seed,
                           bool include_inputs = false);

  PerturbMode mode() const { return mode_; }
  std::uint64_t threshold() const { return threshold_; }
  double probability() const { return probability_; }
  std::uint64_t seed() const { return seed_; }
  bool include_inputs() const { return include_inputs_; }
  std::size_t num_nodes() const { return num_nodes_; }

  /// Simple/randomized: bit 0 = value 1 is rare, bit 1 = value 0 is rare.
  /// Composite: bit k = fanin pattern k is rare.
  std::uint8_t flags(NodeId id) const { return flags_.empty() ? 0 : flags_[id]; }

  /// Nodes that the plan actually perturbs on the unperturbed training
  /// data (a rare value or pattern with a nonzero count). Zero for noise.
  std::size_t perturbed_node_count() const { return perturbed_nodes_; }
  std::vector<NodeId> perturbed_nodes() const;

 private:
  PerturbMode mode_ = PerturbMode::None;
  std::uint64_t threshold_ = 0;
  double probability_ = 0.0;
  std::uint64_t seed_ = 0;
  bool include_inputs_ = false;
  std::size_t num_nodes_ = 0;
  std::vector<std::uint8_t> flags_;
  std::vector<std::uint8_t> triggered_;
  std::size_t perturbed_nodes_ = 0;
};

OutputColumns simulate_perturbed(const Circuit& circuit, const Stimulus& stimulus,
                                 const PerturbPlan& plan, const SimOptions& options = {},
                                 SimStats* stats = nullptr);

/// Every node's column (no recycling); mainly for tests and debugging.
std::vector<BitColumn> simulate_node_values(const Circuit& circuit, const Stimulus& stimulus,
                                            const PerturbPlan& plan);

enum class BusDecoding {
  /// Width-1 buses read as unsigned bits, wider buses as two's complement.
  Auto,
  Signed,
  Unsigned,
};

/// Per example, the index of the largest bus value (ties to the lowest index).
std::vector<std::uint8_t> classify(const OutputColumns& outputs,
                                   BusDecoding decoding = BusDecoding::Auto);
double accuracy_of(const OutputColumns& outputs, std::span<const std::uint8_t> labels,
                   BusDecoding decoding = BusDecoding::Auto);

/// Number of examples with no l-rare value at any node, for each l in
/// `thresholds` (one simulation pass for the whole list).
std::vector<std::size_t> unaffected_counts(const Circuit& circuit, const Stimulus& stimulus,
                                           const CountTable& counts,
                                           std::span<const std::uint64_t> thresholds,
                                           bool include_inputs = true,
                                           const SimOptions& options = {});
std::size_t unaffected_count(const Circuit& circuit, const Stimulus& stimulus,
                             const CountTable& counts, std::uint64_t l,
                             bool include_inputs = true, const SimOptions& options = {});

struct NaiveResult {
  std::vector<std::uint8_t> node_values;
  std::vector<std::vector<std::uint8_t>> bus_bits;
};

/// One example at a time, one node at a time. Reference only.
NaiveResult simulate_naive(const Circuit& circuit, std::span<const std::uint8_t> input_bits);

}  // namespace cfsim
