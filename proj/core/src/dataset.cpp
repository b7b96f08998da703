#include "cfsim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cfsim/rng.hpp"

namespace cfsim {

void validate(const Dataset& d)
{
  if (d.num_examples == 0) {
    throw std::invalid_argument("dataset is empty");
  }
  if (d.features.size() != d.num_examples * d.num_features ||
      d.labels.size() != d.num_examples) {
    throw std::invalid_argument("dataset arrays do not match its shape");
  }
  for (std::uint8_t y : d.labels) {
    if (y > 9) {
      throw std::invalid_argument("label " + std::to_string(y) + " out of range 0..9");
    }
  }
}

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IdxError("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at)
{
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

void put_be32(std::ostream& out, std::uint32_t v)
{
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

IdxArray parse_idx(const std::filesystem::path& path, std::uint32_t magic)
{
  const auto bytes = slurp(path);
  const std::string name = path.string();
  if (bytes.size() < 4) {
    throw IdxError(name + ": empty or truncated header");
  }
  if (be32(bytes, 0) != magic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, ": bad magic 0x%08x (expected 0x%08x)", be32(bytes, 0), magic);
    throw IdxError(name + buf);
  }
  const std::size_t ndims = magic & 0xff;
  if (bytes.size() < 4 + 4 * ndims) {
    throw IdxError(name + ": truncated header");
  }
  IdxArray a;
  std::size_t total = 1;
  for (std::size_t i = 0; i < ndims; ++i) {
    a.dims.push_back(be32(bytes, 4 + 4 * i));
    total *= a.dims.back();
  }
  const std::size_t offset = 4 + 4 * ndims;
  if (bytes.size() - offset < total) {
    throw IdxError(name + ": truncated data (" + std::to_string(bytes.size() - offset) + " of " +
                   std::to_string(total) + " bytes)");
  }
  if (bytes.size() - offset > total) {
    throw IdxError(name + ": trailing bytes after data");
  }
  a.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return a;
}

}  // namespace

Dataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels)
{
  IdxArray img = parse_idx(images, 0x803);
  IdxArray lab = parse_idx(labels, 0x801);
  if (img.dims[0] != lab.dims[0]) {
    throw IdxError("image count " + std::to_string(img.dims[0]) + " does not match label count " +
                   std::to_string(lab.dims[0]));
  }
  Dataset d;
  d.num_examples = img.dims[0];
  d.shape.assign(img.dims.begin() + 1, img.dims.end());
  d.num_features = std::size_t{d.shape[0]} * d.shape[1];
  d.features = std::move(img.data);
  d.labels = std::move(lab.data);
  d.provenance = "idx:" + images.filename().string();
  if (d.num_examples == 0) {
    throw IdxError(images.string() + ": no examples");
  }
  for (std::uint8_t y : d.labels) {
    if (y > 9) {
      throw IdxError(labels.string() + ": label " + std::to_string(y) + " out of range");
    }
  }
  return d;
}

void write_idx(const Dataset& d, const std::filesystem::path& images,
               const std::filesystem::path& labels)
{
  validate(d);
  std::vector<std::uint32_t> shape = d.shape;
  if (shape.size() != 2) {
    shape = {1, static_cast<std::uint32_t>(d.num_features)};
  }
  {
    std::ofstream out(images, std::ios::binary);
    put_be32(out, 0x803);
    put_be32(out, static_cast<std::uint32_t>(d.num_examples));
    put_be32(out, shape[0]);
    put_be32(out, shape[1]);
    out.write(reinterpret_cast<const char*>(d.features.data()),
              static_cast<std::streamsize>(d.features.size()));
    if (!out) throw IdxError("cannot write " + images.string());
  }
  std::ofstream out(labels, std::ios::binary);
  put_be32(out, 0x801);
  put_be32(out, static_cast<std::uint32_t>(d.num_examples));
  out.write(reinterpret_cast<const char*>(d.labels.data()),
            static_cast<std::streamsize>(d.labels.size()));
  if (!out) throw IdxError("cannot write " + labels.string());
}

Dataset read_csv(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  Dataset d;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') {
      continue;
    }
    std::vector<long> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      long v = 0;
      try {
        v = std::stol(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || v < 0 || v > 255) {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                 ": bad value '" + cell + "'");
      }
      vals.push_back(v);
    }
    if (vals.size() < 2) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": need a label and at least one feature");
    }
    if (d.num_examples == 0) {
      d.num_features = vals.size() - 1;
    } else if (vals.size() - 1 != d.num_features) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": inconsistent feature count");
    }
    d.labels.push_back(static_cast<std::uint8_t>(vals[0]));
    for (std::size_t i = 1; i < vals.size(); ++i) {
      d.features.push_back(static_cast<std::uint8_t>(vals[i]));
    }
    ++d.num_examples;
  }
  d.shape = {static_cast<std::uint32_t>(d.num_features)};
  d.provenance = "csv:" + path.filename().string();
  validate(d);
  return d;
}

Dataset head(const Dataset& d, std::size_t n)
{
  n = std::min(n, d.num_examples);
  Dataset r = d;
  r.num_examples = n;
  r.features.resize(n * d.num_features);
  r.labels.resize(n);
  r.provenance += ";head=" + std::to_string(n);
  return r;
}

Dataset corrupt_labels(const Dataset& d, Corruption mode, double fraction, std::uint64_t seed)
{
  Dataset r = d;
  Rng rng{seed};
  if (mode == Corruption::Shuffle) {
    rng.shuffle(r.labels.begin(), r.labels.end());
    r.provenance += ";shuffle seed=" + std::to_string(seed);
    return r;
  }
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("resample fraction must lie in [0, 1]");
  }
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(d.num_examples)));
  std::vector<std::size_t> order(d.num_examples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());
  for (std::size_t i = 0; i < k; ++i) {
    r.labels[order[i]] = static_cast<std::uint8_t>(rng.below(10));
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, ";resample fraction=%g seed=", fraction);
  r.provenance += buf + std::to_string(seed);
  return r;
}

Dataset synthetic_blobs(std::size_t num_examples, std::size_t num_features,
                        std::size_t num_classes, double spread, std::uint64_t seed)
{
  if (num_classes == 0 || num_classes > 10 || num_features == 0) {
    throw std::invalid_argument("synthetic_blobs: bad shape");
  }
  Rng rng{seed};
  std::vector<double> centers(num_classes * num_features);
  for (double& c : centers) {
    c = 32.0 + static_cast<double>(rng.below(192));
  }
  Dataset d;
  d.num_examples = num_examples;
  d.num_features = num_features;
  d.shape = {static_cast<std::uint32_t>(num_features)};
  for (std::size_t e = 0; e < num_examples; ++e) {
    const std::size_t y = e % num_classes;
    d.labels.push_back(static_cast<std::uint8_t>(y));
    for (std::size_t f = 0; f < num_features; ++f) {
      const double v = std::round(centers[y * num_features + f] + spread * rng.normal());
      d.features.push_back(static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0)));
    }
  }
  d.provenance = "blobs seed=" + std::to_string(seed);
  return d;
}

Stimulus to_stimulus(const Dataset& d)
{
  return byte_stimulus(d.features, d.num_examples, d.num_features);
}

Dataset load_bundled_digits(const std::filesystem::path& data_dir)
{
  Dataset d = read_idx(data_dir / "digits8x8-images.idx", data_dir / "digits8x8-labels.idx");
  d.provenance = "digits8x8";
  return d;
}

}  // namespace cfsim
