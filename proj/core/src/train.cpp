#include "cfsim/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cfsim/rng.hpp"

namespace cfsim {

namespace {

struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;  // out x in
  std::vector<double> b;
  std::vector<double> gw;
  std::vector<double> gb;
};

}  // namespace

MlpTrainResult train_mlp(const Dataset& data, const MlpTrainConfig& config)
{
  validate(data);
  if (config.batch_size == 0 || !(config.learning_rate > 0.0)) {
    throw std::invalid_argument("train_mlp: batch size and learning rate must be positive");
  }
  for (std::size_t h : config.hidden) {
    if (h == 0) throw std::invalid_argument("train_mlp: empty hidden layer");
  }
  std::vector<std::size_t> sizes{data.num_features};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(kNumClasses);

  Rng rng{config.seed};
  std::vector<Layer> layers(sizes.size() - 1);
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Layer& L = layers[k];
    L.in = sizes[k];
    L.out = sizes[k + 1];
    L.w.resize(L.in * L.out);
    const double scale = std::sqrt(2.0 / static_cast<double>(L.in));
    for (double& w : L.w) w = scale * rng.normal();
    L.b.assign(L.out, 0.0);
    L.gw.assign(L.w.size(), 0.0);
    L.gb.assign(L.out, 0.0);
  }

  // acts[k] is the input to layer k; acts.back() holds the logits.
  std::vector<std::vector<double>> acts(sizes.size());
  std::vector<std::vector<double>> deltas(sizes.size());
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    acts[k].resize(sizes[k]);
    deltas[k].resize(sizes[k]);
  }

  auto forward = [&](std::size_t e) {
    const auto x = data.row(e);
    for (std::size_t i = 0; i < x.size(); ++i) acts[0][i] = x[i] / 255.0;
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const Layer& L = layers[k];
      const bool hidden = k + 1 < layers.size();
      for (std::size_t j = 0; j < L.out; ++j) {
        double s = L.b[j];
        const double* w = &L.w[j * L.in];
        for (std::size_t i = 0; i < L.in; ++i) s += w[i] * acts[k][i];
        acts[k + 1][j] = hidden ? std::max(0.0, s) : s;
      }
    }
  };

  std::vector<std::size_t> order(data.num_examples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  double loss = 0.0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      for (Layer& L : layers) {
        std::fill(L.gw.begin(), L.gw.end(), 0.0);
        std::fill(L.gb.begin(), L.gb.end(), 0.0);
      }
      for (std::size_t n = start; n < stop; ++n) {
        const std::size_t e = order[n];
        forward(e);
        auto& z = acts.back();
        const double m = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - m);
        const std::size_t y = data.labels[e];
        loss += std::log(sum) - (z[y] - m);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
          deltas.back()[c] = std::exp(z[c] - m) / sum - (c == y ? 1.0 : 0.0);
        }
        for (std::size_t k = layers.size(); k-- > 0;) {
          Layer& L = layers[k];
          const auto& d = deltas[k + 1];
          const auto& a = acts[k];
          for (std::size_t j = 0; j < L.out; ++j) {
            L.gb[j] += d[j];
            double* g = &L.gw[j * L.in];
            for (std::size_t i = 0; i < L.in; ++i) g[i] += d[j] * a[i];
          }
          if (k == 0) break;
          auto& dp = deltas[k];
          std::fill(dp.begin(), dp.end(), 0.0);
          for (std::size_t j = 0; j < L.out; ++j) {
            const double* w = &L.w[j * L.in];
            for (std::size_t i = 0; i < L.in; ++i) dp[i] += w[i] * d[j];
          }
          for (std::size_t i = 0; i < L.in; ++i) {
            if (acts[k][i] <= 0.0) dp[i] = 0.0;
          }
        }
      }
      const double step = config.learning_rate / static_cast<double>(stop - start);
      for (Layer& L : layers) {
        for (std::size_t i = 0; i < L.w.size(); ++i) L.w[i] -= step * L.gw[i];
        if (config.weight_clip > 0.0) {
          for (double& w : L.w) w = std::clamp(w, -config.weight_clip, config.weight_clip - 1.0 / 64);
        }
        for (std::size_t j = 0; j < L.out; ++j) L.b[j] -= step * L.gb[j];
      }
    }
    loss /= static_cast<double>(data.num_examples);
    if (!std::isfinite(loss)) {
      throw std::runtime_error("train_mlp: loss diverged at epoch " + std::to_string(epoch + 1));
    }
  }

  MlpTrainResult r;
  r.model.layer_sizes = sizes;
  for (const Layer& L : layers) {
    std::vector<std::vector<double>> rows(L.out);
    for (std::size_t j = 0; j < L.out; ++j) {
      rows[j].assign(L.w.begin() + static_cast<std::ptrdiff_t>(j * L.in),
                     L.w.begin() + static_cast<std::ptrdiff_t>((j + 1) * L.in));
    }
    r.model.weights.push_back(std::move(rows));
    r.model.biases.push_back(L.b);
  }
  r.final_loss = loss;
  r.train_accuracy = float_accuracy(r.model, data);
  return r;
}

double float_accuracy(const MlpModel& m, const Dataset& data)
{
  std::size_t correct = 0;
  for (std::size_t e = 0; e < data.num_examples; ++e) {
    const auto z = float_eval_mlp(m, data.row(e));
    correct += argmax(std::span<const double>(z)) == data.labels[e] ? 1 : 0;
  }
  return data.num_examples == 0 ? 0.0
                                : static_cast<double>(correct) /
                                      static_cast<double>(data.num_examples);
}

// ---------------------------------------------------------------------------
// CART

namespace {

using ClassCounts = std::array<std::uint32_t, kNumClasses>;

double impurity_sum(const ClassCounts& c, std::uint64_t n)
{
  // n * gini = n - sum(c^2) / n
  if (n == 0) return 0.0;
  double sq = 0.0;
  for (std::uint32_t v : c) sq += static_cast<double>(v) * v;
  return static_cast<double>(n) - sq / static_cast<double>(n);
}

class TreeGrower {
 public:
  TreeGrower(const Dataset& data, const ForestTrainConfig& config, Rng& rng)
      : data_{data}, config_{config}, rng_{rng}
  {
    mtry_ = config.max_features != 0
                ? std::min(config.max_features, data.num_features)
                : std::max<std::size_t>(
                      1, static_cast<std::size_t>(std::sqrt(static_cast<double>(data.num_features))));
    features_.resize(data.num_features);
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  DecisionTree grow()
  {
    std::vector<std::size_t> all(data_.num_examples);
    std::iota(all.begin(), all.end(), std::size_t{0});
    tree_.nodes.clear();
    build(all, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    bool found = false;
    double score = 0.0;
    std::size_t feature = 0;
    int threshold = 0;
  };

  std::int32_t build(const std::vector<std::size_t>& idx, std::size_t depth)
  {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    ClassCounts counts{};
    for (std::size_t e : idx) ++counts[data_.labels[e]];
    const bool pure =
        std::count_if(counts.begin(), counts.end(), [](std::uint32_t c) { return c > 0; }) <= 1;
    const bool depth_limit = config_.max_depth != 0 && depth >= config_.max_depth;
    Split s;
    if (!pure && !depth_limit && idx.size() >= 2 * config_.min_leaf) {
      s = best_split(idx);
    }
    if (!s.found) {
      for (std::uint32_t c : counts) {
        if (c > 65535) throw std::runtime_error("train_forest: leaf count exceeds 16 bits");
      }
      tree_.nodes[static_cast<std::size_t>(id)].counts = counts;
      return id;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t e : idx) {
      (data_.row(e)[s.feature] <= s.threshold ? left : right).push_back(e);
    }
    const std::int32_t l = build(left, depth + 1);
    const std::int32_t r = build(right, depth + 1);
    TreeNode& n = tree_.nodes[static_cast<std::size_t>(id)];
    n.feature = static_cast<std::int32_t>(s.feature);
    n.threshold = s.threshold;
    n.left = l;
    n.right = r;
    return id;
  }

  Split best_split(const std::vector<std::size_t>& idx)
  {
    // Partial Fisher-Yates: draw features until mtry were examined and at
    // least one gave a valid split, or all features are exhausted.
    Split best;
    const std::size_t F = features_.size();
    for (std::size_t k = 0; k < F; ++k) {
      const std::size_t j = k + rng_.below(F - k);
      std::swap(features_[k], features_[j]);
      if (k >= mtry_ && best.found) break;
      consider(idx, features_[k], best);
    }
    return best;
  }

  void consider(const std::vector<std::size_t>& idx, std::size_t f, Split& best)
  {
    hist_.assign(256, ClassCounts{});
    std::array<std::uint32_t, 256> totals{};
    ClassCounts all{};
    for (std::size_t e : idx) {
      const std::uint8_t v = data_.row(e)[f];
      ++hist_[v][data_.labels[e]];
      ++totals[v];
      ++all[data_.labels[e]];
    }
    ClassCounts left{};
    std::uint64_t nl = 0;
    const std::uint64_t n = idx.size();
    int prev = -1;
    for (int v = 0; v < 256; ++v) {
      if (totals[v] == 0) continue;
      if (prev >= 0 && nl >= config_.min_leaf && n - nl >= config_.min_leaf) {
        ClassCounts right{};
        for (std::size_t c = 0; c < kNumClasses; ++c) right[c] = all[c] - left[c];
        const double score = impurity_sum(left, nl) + impurity_sum(right, n - nl);
        if (!best.found || score < best.score - 1e-12) {
          best = {true, score, f, (prev + v) / 2};
        }
      }
      for (std::size_t c = 0; c < kNumClasses; ++c) left[c] += hist_[v][c];
      nl += totals[v];
      prev = v;
    }
  }

  const Dataset& data_;
  const ForestTrainConfig& config_;
  Rng& rng_;
  std::size_t mtry_ = 1;
  std::vector<std::size_t> features_;
  std::vector<ClassCounts> hist_;
  DecisionTree tree_;
};

}  // namespace

ForestModel train_forest(const Dataset& data, const ForestTrainConfig& config)
{
  validate(data);
  if (config.trees == 0 || config.min_leaf == 0) {
    throw std::invalid_argument("train_forest: tree count and min leaf size must be positive");
  }
  Rng rng{config.seed};
  ForestModel f;
  f.num_features = data.num_features;
  for (std::size_t t = 0; t < config.trees; ++t) {
    TreeGrower g{data, config, rng};
    f.trees.push_back(g.grow());
  }
  return f;
}

double forest_accuracy(const ForestModel& f, const Dataset& data)
{
  std::size_t correct = 0;
  for (std::size_t e = 0; e < data.num_examples; ++e) {
    const auto s = reference_eval_forest(f, data.row(e));
    correct += argmax(std::span<const std::int64_t>(s)) == data.labels[e] ? 1 : 0;
  }
  return data.num_examples == 0 ? 0.0
                                : static_cast<double>(correct) /
                                      static_cast<double>(data.num_examples);
}

}  // namespace cfsim
