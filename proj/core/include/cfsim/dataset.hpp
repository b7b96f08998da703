#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfsim/simulator.hpp"

namespace cfsim {

struct Dataset {
  std::size_t num_examples = 0;
  std::size_t num_features = 0;
  /// Image dimensions as stored in IDX (e.g. {8, 8}); {num_features} otherwise.
  std::vector<std::uint32_t> shape;
  /// Row-major, num_examples x num_features.
  std::vector<std::uint8_t> features;
  std::vector<std::uint8_t> labels;
  /// Source, then any corruption applied (with its seed).
  std::string provenance;

  std::span<const std::uint8_t> row(std::size_t e) const
  {
    return {features.data() + e * num_features, num_features};
  }
};

/// Checks shape consistency and label range; throws std::invalid_argument.
void validate(const Dataset& d);

struct IdxError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Images: magic 0x00000803, big-endian count and dims, then bytes.
/// Labels: magic 0x00000801, big-endian count, then bytes.
Dataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
void write_idx(const Dataset& d, const std::filesystem::path& images,
               const std::filesystem::path& labels);

/// One example per line: label, then the byte features, comma-separated.
/// Blank lines and lines starting with '#' are skipped.
Dataset read_csv(const std::filesystem::path& path);

/// First n examples.
Dataset head(const Dataset& d, std::size_t n);

enum class Corruption { Shuffle, Resample };

/// Shuffle permutes the whole label column. Resample(f) picks round(f*N)
/// distinct examples and redraws their labels uniformly from 0..9.
Dataset corrupt_labels(const Dataset& d, Corruption mode, double fraction, std::uint64_t seed);

/// Isotropic Gaussian blobs around random byte-valued centers.
Dataset synthetic_blobs(std::size_t num_examples, std::size_t num_features,
                        std::size_t num_classes, double spread, std::uint64_t seed);

Stimulus to_stimulus(const Dataset& d);

/// 8x8 digits shipped in data/ as digits8x8-{images,labels}.idx.
Dataset load_bundled_digits(const std::filesystem::path& data_dir);

}  // namespace cfsim
