// cfsim: compile models to circuits and run counterfactual simulation.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "cfsim/cfs.hpp"
#include "cfsim/compile.hpp"
#include "cfsim/dataset.hpp"
#include "cfsim/train.hpp"
#include "cfsim/xaig.hpp"

using namespace cfsim;

namespace {

struct DataArgs {
  std::string images;
  std::string labels;
  std::string csv;
  std::size_t limit = 0;

  void add(CLI::App* app, bool required = true)
  {
    auto* img = app->add_option("--images", images, "IDX image file");
    auto* lab = app->add_option("--labels", labels, "IDX label file");
    auto* c = app->add_option("--csv", csv, "CSV dataset (label first)");
    img->needs(lab);
    lab->needs(img);
    c->excludes(img);
    c->excludes(lab);
    if (required) {
      app->callback([this] {
        if (csv.empty() && images.empty()) {
          throw CLI::RequiredError("--images/--labels or --csv");
        }
      });
    }
    app->add_option("--limit", limit, "use only the first N examples")->check(CLI::PositiveNumber);
  }

  bool given() const { return !csv.empty() || !images.empty(); }

  Dataset load() const
  {
    Dataset d = csv.empty() ? read_idx(images, labels) : read_csv(csv);
    return limit != 0 ? head(d, limit) : d;
  }

  std::string digest() const
  {
    if (!csv.empty()) return "csv=" + file_digest(csv);
    return "images=" + file_digest(images) + " labels=" + file_digest(labels);
  }

  static std::string file_digest(const std::string& path)
  {
    std::ifstream in(path, std::ios::binary);
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                          std::istreambuf_iterator<char>()};
    return hex64(fnv1a64(bytes));
  }
};

std::vector<std::string> split_list(const std::string& s)
{
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::uint64_t> parse_thresholds(const std::string& s)
{
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(s)) {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad threshold '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty threshold list");
  return out;
}

// Accepts decimals and powers of two written as 2^-k.
double parse_probability(const std::string& item)
{
  double v = 0.0;
  std::size_t used = 0;
  if (item.rfind("2^", 0) == 0) {
    v = std::ldexp(1.0, std::stoi(item.substr(2), &used));
    used += 2;
  } else {
    v = std::stod(item, &used);
  }
  if (used != item.size() || !(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument("bad probability '" + item + "'");
  }
  return v;
}

BusDecoding parse_decoding(const std::string& s)
{
  if (s == "signed") return BusDecoding::Signed;
  if (s == "unsigned") return BusDecoding::Unsigned;
  return BusDecoding::Auto;
}

std::vector<std::size_t> parse_sizes(const std::string& s)
{
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) out.push_back(std::stoul(item));
  return out;
}

template <class Fn>
void with_output(const std::string& path, Fn&& fn)
{
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  fn(out);
  if (!out) throw std::runtime_error("error writing " + path);
}

const std::vector<std::string> kDecodings{"auto", "signed", "unsigned"};

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Compile classifiers to logic circuits and measure overfit by counterfactual simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version()));
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = hardware; CFSIM_THREADS caps it)");
  SimOptions sim;

  // train -------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "train a model on a dataset");
  train->require_subcommand(1);
  struct CorruptArgs {
    std::string mode;
    double fraction = 0.0;
    std::uint64_t seed = 0;
  };

  DataArgs mlp_data;
  CorruptArgs mlp_corrupt;
  MlpTrainConfig mlp_cfg;
  std::string mlp_hidden = "32,32";
  std::string mlp_out;
  auto* train_mlp_cmd = train->add_subcommand("mlp", "minibatch SGD dense ReLU network");
  mlp_data.add(train_mlp_cmd);
  train_mlp_cmd->add_option("--hidden", mlp_hidden, "hidden layer sizes")->capture_default_str();
  train_mlp_cmd->add_option("--epochs", mlp_cfg.epochs)->capture_default_str();
  train_mlp_cmd->add_option("--lr", mlp_cfg.learning_rate)->capture_default_str();
  train_mlp_cmd->add_option("--batch", mlp_cfg.batch_size)->capture_default_str();
  train_mlp_cmd->add_option("--seed", mlp_cfg.seed)->capture_default_str();
  train_mlp_cmd->add_option("--weight-clip", mlp_cfg.weight_clip)->capture_default_str();
  train_mlp_cmd->add_option("--corrupt", mlp_corrupt.mode)->check(CLI::IsMember({"shuffle", "resample"}));
  train_mlp_cmd->add_option("--fraction", mlp_corrupt.fraction)->check(CLI::Range(0.0, 1.0));
  train_mlp_cmd->add_option("--corrupt-seed", mlp_corrupt.seed);
  train_mlp_cmd->add_option("--out", mlp_out, "model JSON")->required();

  DataArgs forest_data;
  CorruptArgs forest_corrupt;
  ForestTrainConfig forest_cfg;
  std::string forest_out;
  auto* train_forest_cmd = train->add_subcommand("forest", "CART forest without bootstrapping");
  forest_data.add(train_forest_cmd);
  train_forest_cmd->add_option("--trees", forest_cfg.trees)->capture_default_str();
  train_forest_cmd->add_option("--max-depth", forest_cfg.max_depth, "0 = unlimited")->capture_default_str();
  train_forest_cmd->add_option("--min-leaf", forest_cfg.min_leaf)->capture_default_str();
  train_forest_cmd->add_option("--max-features", forest_cfg.max_features, "0 = sqrt(F)")->capture_default_str();
  train_forest_cmd->add_option("--seed", forest_cfg.seed)->capture_default_str();
  train_forest_cmd->add_option("--corrupt", forest_corrupt.mode)->check(CLI::IsMember({"shuffle", "resample"}));
  train_forest_cmd->add_option("--fraction", forest_corrupt.fraction)->check(CLI::Range(0.0, 1.0));
  train_forest_cmd->add_option("--corrupt-seed", forest_corrupt.seed);
  train_forest_cmd->add_option("--out", forest_out, "model JSON")->required();

  // compile -----------------------------------------------------------------
  std::string model_path, circuit_out, mult = "csd", gates = "and-xor";
  bool no_same_operand = false;
  auto* compile = app.add_subcommand("compile", "compile a model JSON to an XAIG circuit");
  compile->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  compile->add_option("--mult", mult)->check(CLI::IsMember({"csd", "array"}))->capture_default_str();
  compile->add_option("--gates", gates)->check(CLI::IsMember({"and-xor", "and-only"}))->capture_default_str();
  compile->add_flag("--no-same-operand", no_same_operand, "disable x&x / x^x simplification");
  compile->add_option("--out", circuit_out, "XAIG file")->required();

  // eval / cfs / noise share these
  std::string circuit_path, decode = "auto", csv_out;
  DataArgs eval_data, cfs_data, noise_data, stats_data;

  auto* eval = app.add_subcommand("eval", "baseline accuracy of a circuit");
  eval->add_option("--circuit", circuit_path)->required()->check(CLI::ExistingFile);
  eval_data.add(eval);
  eval->add_option("--decode", decode)->check(CLI::IsMember(kDecodings))->capture_default_str();

  std::string l_list, cfs_mode = "simple";
  bool exclude_inputs = false;
  std::uint64_t cfs_seed = 0;
  auto* cfs = app.add_subcommand("cfs", "counterfactual simulation curve");
  cfs->add_option("--circuit", circuit_path)->required()->check(CLI::ExistingFile);
  cfs_data.add(cfs);
  cfs->add_option("--l", l_list, "ascending thresholds, comma-separated")->required();
  cfs->add_option("--mode", cfs_mode)
      ->check(CLI::IsMember({"simple", "composite", "randomized"}))
      ->capture_default_str();
  cfs->add_flag("--exclude-inputs", exclude_inputs, "never perturb primary inputs");
  cfs->add_option("--seed", cfs_seed, "randomized mode seed")->capture_default_str();
  cfs->add_option("--decode", decode)->check(CLI::IsMember(kDecodings))->capture_default_str();
  cfs->add_option("--out", csv_out, "CSV file (default stdout)");

  std::string p_list;
  std::size_t trials = 5;
  std::uint64_t noise_seed = 1;
  bool noise_inputs = false;
  auto* noise = app.add_subcommand("noise", "blanket bit-flip noise curve");
  noise->add_option("--circuit", circuit_path)->required()->check(CLI::ExistingFile);
  noise_data.add(noise);
  noise->add_option("--p", p_list, "probabilities, e.g. 2^-20,2^-5,0.01")->required();
  noise->add_option("--trials", trials)->check(CLI::PositiveNumber)->capture_default_str();
  noise->add_option("--seed", noise_seed)->capture_default_str();
  noise->add_flag("--noise-inputs", noise_inputs, "also flip primary inputs");
  noise->add_option("--decode", decode)->check(CLI::IsMember(kDecodings))->capture_default_str();
  noise->add_option("--out", csv_out, "CSV file (default stdout)");

  std::string stats_l;
  auto* stats_cmd = app.add_subcommand("stats", "gate/level counts and rare-pattern tabulation");
  stats_cmd->add_option("--circuit", circuit_path)->required()->check(CLI::ExistingFile);
  stats_cmd->add_option("--l", stats_l, "thresholds for the rare-pattern table (needs data)");
  stats_data.add(stats_cmd, false);
  stats_cmd->add_flag("--exclude-inputs", exclude_inputs);

  // dataset -----------------------------------------------------------------
  auto* dataset = app.add_subcommand("dataset", "dataset utilities");
  dataset->require_subcommand(1);
  DataArgs corrupt_data;
  CorruptArgs corrupt_args;
  std::string out_images, out_labels;
  auto* corrupt = dataset->add_subcommand("corrupt", "randomize labels");
  corrupt_data.add(corrupt);
  corrupt->add_option("--mode", corrupt_args.mode)->required()->check(CLI::IsMember({"shuffle", "resample"}));
  corrupt->add_option("--fraction", corrupt_args.fraction, "resample fraction")->check(CLI::Range(0.0, 1.0));
  corrupt->add_option("--seed", corrupt_args.seed)->required();
  corrupt->add_option("--out-images", out_images)->required();
  corrupt->add_option("--out-labels", out_labels)->required();

  CLI11_PARSE(app, argc, argv);
  sim.threads = threads;

  auto corrupted = [](Dataset d, const CorruptArgs& c) {
    if (c.mode.empty()) return d;
    return corrupt_labels(d, c.mode == "shuffle" ? Corruption::Shuffle : Corruption::Resample,
                          c.fraction, c.seed);
  };

  try {
    if (train_mlp_cmd->parsed()) {
      const Dataset d = corrupted(mlp_data.load(), mlp_corrupt);
      mlp_cfg.hidden = parse_sizes(mlp_hidden);
      const MlpTrainResult r = train_mlp(d, mlp_cfg);
      save_model(r.model, mlp_out);
      std::printf("train_accuracy %.6f\nfinal_loss %.6f\n", r.train_accuracy, r.final_loss);
    } else if (train_forest_cmd->parsed()) {
      const Dataset d = corrupted(forest_data.load(), forest_corrupt);
      const ForestModel f = train_forest(d, forest_cfg);
      save_model(f, forest_out);
      std::printf("train_accuracy %.6f\nnodes %zu\n", forest_accuracy(f, d), node_count(f));
    } else if (compile->parsed()) {
      CompileOptions opts;
      opts.mult = mult == "array" ? Multiplier::Array : Multiplier::Csd;
      opts.gates = gates == "and-only" ? GateSet::AndOnly : GateSet::AndXor;
      opts.build.simplify_same_operand = !no_same_operand;
      const Circuit c = compile_model(load_model(model_path), opts);
      save_xaig(c, circuit_out);
      const CircuitStats s = stats(c);
      std::printf("nodes %zu\nand %zu\nxor %zu\nlevels %zu\n", s.node_count, s.and_count,
                  s.xor_count, s.level_count);
    } else if (eval->parsed()) {
      const Circuit c = load_xaig(circuit_path);
      const Dataset d = eval_data.load();
      const CountResult r = simulate_and_count(c, to_stimulus(d), false, sim);
      std::printf("accuracy %.6f\n", accuracy_of(r.outputs, d.labels, parse_decoding(decode)));
    } else if (cfs->parsed()) {
      const Circuit c = load_xaig(circuit_path);
      const Dataset d = cfs_data.load();
      const auto ls = parse_thresholds(l_list);
      CfsOptions opts;
      opts.include_inputs = !exclude_inputs;
      opts.seed = cfs_seed;
      opts.decoding = parse_decoding(decode);
      opts.sim = sim;
      const CfsMode mode = cfs_mode == "composite"    ? CfsMode::Composite
                           : cfs_mode == "randomized" ? CfsMode::Randomized
                                                      : CfsMode::Simple;
      const CfsCurve curve = cfs_curve(c, to_stimulus(d), d.labels, ls, mode, opts);
      const std::string prov = std::string("cfsim ") + version() + " cfs mode=" + cfs_mode +
                               " seed=" + std::to_string(cfs_seed) +
                               " inputs=" + (exclude_inputs ? "excluded" : "included") +
                               " circuit=" + DataArgs::file_digest(circuit_path) + " " +
                               cfs_data.digest() + " data=" + d.provenance;
      with_output(csv_out, [&](std::ostream& o) { write_cfs_csv(o, curve, prov); });
    } else if (noise->parsed()) {
      const Circuit c = load_xaig(circuit_path);
      const Dataset d = noise_data.load();
      std::vector<double> ps;
      for (const auto& item : split_list(p_list)) ps.push_back(parse_probability(item));
      NoiseOptions opts;
      opts.include_inputs = noise_inputs;
      opts.decoding = parse_decoding(decode);
      opts.sim = sim;
      const auto rows = noise_curve(c, to_stimulus(d), d.labels, ps, trials, noise_seed, opts);
      const std::string prov = std::string("cfsim ") + version() +
                               " noise seed=" + std::to_string(noise_seed) +
                               " inputs=" + (noise_inputs ? "included" : "excluded") +
                               " circuit=" + DataArgs::file_digest(circuit_path) + " " +
                               noise_data.digest() + " data=" + d.provenance;
      with_output(csv_out, [&](std::ostream& o) { write_noise_csv(o, rows, prov); });
    } else if (stats_cmd->parsed()) {
      const Circuit c = load_xaig(circuit_path);
      const CircuitStats s = stats(c);
      std::printf("nodes %zu\ninputs %zu\nand %zu\nxor %zu\nlevels %zu\nbuses %zu\n",
                  s.node_count, s.input_count, s.and_count, s.xor_count, s.level_count,
                  s.output_bus_widths.size());
      if (!stats_l.empty()) {
        if (!stats_data.given()) throw std::invalid_argument("--l needs --images/--labels or --csv");
        const Dataset d = stats_data.load();
        const Stimulus stim = to_stimulus(d);
        const CountResult r = simulate_and_count(c, stim, false, sim);
        const auto ls = parse_thresholds(stats_l);
        std::printf("l,rare_nodes,unaffected\n");
        for (const auto& row : rare_stats(c, stim, r.counts, ls, !exclude_inputs, sim)) {
          std::printf("%llu,%zu,%zu\n", static_cast<unsigned long long>(row.l),
                      row.rare_node_count, row.unaffected);
        }
      }
    } else if (corrupt->parsed()) {
      const Dataset d = corrupted(corrupt_data.load(), corrupt_args);
      write_idx(d, out_images, out_labels);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cfsim: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
