#pragma once

#include <cstdint>
#include <vector>

#include "cfsim/dataset.hpp"
#include "cfsim/models.hpp"

namespace cfsim {

struct MlpTrainConfig {
  std::vector<std::size_t> hidden = {32, 32};
  std::size_t epochs = 50;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  /// Weights are projected onto [-clip, clip - 1/64] after every step so the
  /// W8F6 quantizer never has to clamp them; 0 disables.
  double weight_clip = 2.0;
};

struct MlpTrainResult {
  MlpModel model;
  double train_accuracy = 0.0;
  double final_loss = 0.0;
};

/// Minibatch SGD on softmax cross-entropy, inputs scaled to p/255, He
/// initialization. Throws std::runtime_error if the loss stops being finite.
MlpTrainResult train_mlp(const Dataset& data, const MlpTrainConfig& config);

double float_accuracy(const MlpModel& m, const Dataset& data);

struct ForestTrainConfig {
  std::size_t trees = 10;
  /// 0 = unlimited.
  std::size_t max_depth = 0;
  std::size_t min_leaf = 1;
  /// Features tried per split; 0 = floor(sqrt(F)).
  std::size_t max_features = 0;
  std::uint64_t seed = 1;
};

/// CART with Gini impurity on integer thresholds, without bootstrapping.
ForestModel train_forest(const Dataset& data, const ForestTrainConfig& config);

double forest_accuracy(const ForestModel& f, const Dataset& data);

}  // namespace cfsim
