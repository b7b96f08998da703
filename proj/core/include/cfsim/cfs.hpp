#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cfsim/circuit.hpp"
#include "cfsim/simulator.hpp"

namespace cfsim {

enum class CfsMode { Simple, Composite, Randomized };

struct CfsOptions {
  /// Simple and randomized modes only; composite perturbs gates.
  bool include_inputs = true;
  /// Randomized mode only.
  std::uint64_t seed = 0;
  BusDecoding decoding = BusDecoding::Auto;
  SimOptions sim;
};

struct CfsRow {
  std::uint64_t l = 0;
  double accuracy = 0.0;
  /// Examples with no simple-rare value anywhere (also for composite rows).
  std::size_t unaffected = 0;
  std::size_t perturbed_nodes = 0;
};

struct CfsCurve {
  double baseline = 0.0;
  std::vector<CfsRow> rows;
};

/// Two passes for one threshold.
CfsRow cfs_accuracy(const Circuit& circuit, const Stimulus& stimulus,
                    std::span<const std::uint8_t> labels, std::uint64_t l, CfsMode mode,
                    const CfsOptions& options = {});

/// One counting pass shared by every threshold, then one perturbed pass per
/// threshold. The schedule must be nonempty and strictly ascending.
CfsCurve cfs_curve(const Circuit& circuit, const Stimulus& stimulus,
                   std::span<const std::uint8_t> labels, std::span<const std::uint64_t> schedule,
                   CfsMode mode, const CfsOptions& options = {});

struct NoiseOptions {
  bool include_inputs = false;
  BusDecoding decoding = BusDecoding::Auto;
  SimOptions sim;
};

struct NoiseRow {
  double p = 0.0;
  double mean_accuracy = 0.0;
  /// Sample standard deviation over trials; 0 for a single trial.
  double stddev = 0.0;
  std::size_t trials = 0;
};

/// Trial t at probability p draws from a seed derived from (seed, p, t).
std::vector<NoiseRow> noise_curve(const Circuit& circuit, const Stimulus& stimulus,
                                  std::span<const std::uint8_t> labels,
                                  std::span<const double> p_schedule, std::size_t trials,
                                  std::uint64_t seed, const NoiseOptions& options = {});

struct RareStatsRow {
  std::uint64_t l = 0;
  /// Nodes holding a value seen between 1 and l times.
  std::size_t rare_node_count = 0;
  std::size_t unaffected = 0;
};

std::vector<RareStatsRow> rare_stats(const Circuit& circuit, const Stimulus& stimulus,
                                     const CountTable& counts,
                                     std::span<const std::uint64_t> schedule,
                                     bool include_inputs = true, const SimOptions& options = {});

/// Library version string.
const char* version();

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// `provenance` becomes a leading `# ` comment line when nonempty.
void write_cfs_csv(std::ostream& out, const CfsCurve& curve, const std::string& provenance = {});
void write_noise_csv(std::ostream& out, std::span<const NoiseRow> rows,
                     const std::string& provenance = {});

}  // namespace cfsim
