#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace cfsim {

inline constexpr std::size_t kNumClasses = 10;

/// Dense ReLU network with float parameters. weights[k] is
/// layer_sizes[k+1] rows of layer_sizes[k] inputs; the last layer is linear.
struct MlpModel {
  std::vector<std::size_t> layer_sizes;
  std::vector<std::vector<std::vector<double>>> weights;
  std::vector<std::vector<double>> biases;
};

/// Weights as W8F6 codes, biases as ACC24F12 codes.
struct QuantizedMlp {
  std::vector<std::size_t> layer_sizes;
  std::vector<std::vector<std::vector<std::int32_t>>> weights;
  std::vector<std::vector<std::int32_t>> biases;
};

struct TreeNode {
  // Internal node when left >= 0: go left iff feature <= threshold.
  std::int32_t feature = -1;
  std::int32_t threshold = 0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::array<std::uint32_t, kNumClasses> counts{};

  bool is_leaf() const { return left < 0; }
};

/// Node 0 is the root.
struct DecisionTree {
  std::vector<TreeNode> nodes;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  /// Byte features per example; 0 means one past the largest feature used.
  std::size_t num_features = 0;

  std::size_t input_features() const;
};

struct LutEntry {
  std::vector<std::uint8_t> x;
  std::uint8_t label = 0;
};

/// Memorizing table; first matching entry wins, class 0 when nothing matches.
struct LutModel {
  std::vector<LutEntry> entries;
};

using AnyModel = std::variant<MlpModel, ForestModel, LutModel>;

void validate(const MlpModel& m);
void validate(const QuantizedMlp& q);
void validate(const ForestModel& f);
void validate(const LutModel& l);

/// Clamp to [-2, 127/64] and round half-to-even onto the W8F6 grid; biases
/// clamp and round onto the ACC24F12 grid. Throws on NaN.
QuantizedMlp quantize_mlp(const MlpModel& m);
std::int32_t quantize_weight(double w);
std::int32_t quantize_bias(double b);

/// Activation code round(64 * p / 255) of an input byte.
std::int32_t pixel_to_activation(std::uint8_t p);

enum class Multiplier { Csd, Array };

/// Scalar evaluation with exactly the compiled circuit's arithmetic.
std::array<std::int64_t, kNumClasses> reference_eval_quantized_mlp(
    const QuantizedMlp& q, std::span<const std::uint8_t> pixels, Multiplier mult = Multiplier::Csd);
std::array<std::int64_t, kNumClasses> reference_eval_forest(const ForestModel& f,
                                                            std::span<const std::uint8_t> pixels);
std::array<std::int64_t, kNumClasses> reference_eval_lut(const LutModel& l,
                                                         std::span<const std::uint8_t> pixels);

/// Float forward pass on inputs p/255.
std::vector<double> float_eval_mlp(const MlpModel& m, std::span<const std::uint8_t> pixels);

/// Index of the largest score, ties toward the lowest index.
std::size_t argmax(std::span<const std::int64_t> scores);
std::size_t argmax(std::span<const double> scores);

std::size_t node_count(const ForestModel& f);

std::string to_json(const AnyModel& m);
AnyModel model_from_json(const std::string& text);
void save_model(const AnyModel& m, const std::filesystem::path& path);
AnyModel load_model(const std::filesystem::path& path);

}  // namespace cfsim
