#include "cfsim/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

#include "cfsim/rng.hpp"

namespace cfsim {

Stimulus byte_stimulus(std::span<const std::uint8_t> rows, std::size_t num_examples,
                       std::size_t features)
{
  if (rows.size() != num_examples * features) {
    throw std::invalid_argument("byte_stimulus: row data does not match the shape");
  }
  Stimulus s;
  s.num_examples = num_examples;
  s.inputs.assign(features * 8, BitColumn(num_examples));
  for (std::size_t e = 0; e < num_examples; ++e) {
    const std::size_t word = e / kWordBits;
    const Word bit = Word{1} << (e % kWordBits);
    for (std::size_t f = 0; f < features; ++f) {
      const std::uint8_t v = rows[e * features + f];
      for (int b = 0; b < 8; ++b) {
        if ((v >> b) & 1) {
          s.inputs[f * 8 + b].words()[word] |= bit;
        }
      }
    }
  }
  return s;
}

namespace {

constexpr std::uint32_t kNoSlot = ~std::uint32_t{0};

unsigned resolve_threads(const SimOptions& options, std::size_t blocks)
{
  unsigned n = options.threads != 0 ? options.threads : std::thread::hardware_concurrency();
  if (const char* env = std::getenv("CFSIM_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) {
      n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
  }
  n = std::max(1u, n);
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(blocks, 1)));
}

/// Runs fn(worker, first_word, end_word) over fixed-size word blocks. Block
/// boundaries depend only on the stimulus and block size.
template <class Fn>
void for_each_block(std::size_t total_words, const SimOptions& options, unsigned workers, Fn&& fn)
{
  const std::size_t bw = std::max<std::size_t>(options.block_words, 1);
  const std::size_t blocks = (total_words + bw - 1) / bw;
  if (workers <= 1 || blocks <= 1) {
    for (std::size_t k = 0; k < blocks; ++k) {
      fn(0u, k * bw, std::min(total_words, (k + 1) * bw));
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t k = next++; k < blocks; k = next++) {
        fn(w, k * bw, std::min(total_words, (k + 1) * bw));
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
}

/// Topological sweep over a word range with reference-counted column
/// storage. The hook sees every input and gate value right after it is
/// computed and may rewrite it before any fanout reads it.
class Sweep {
 public:
  Sweep(const Circuit& circuit, const Stimulus& stimulus, std::size_t w0, std::size_t w1,
        bool recycle)
      : c_{circuit},
        s_{stimulus},
        w0_{w0},
        bw_{w1 - w0},
        recycle_{recycle},
        tail_{valid_mask(stimulus.num_examples, w1 - 1)},
        slot_(circuit.size(), kNoSlot),
        pending_(circuit.size(), 0),
        pinned_(circuit.size(), 0)
  {
    for (NodeId i = 0; i < c_.size(); ++i) {
      pending_[i] = c_.fanout_count(i);
    }
    for (const OutputBus& bus : c_.buses()) {
      for (Literal l : bus.bits) {
        pinned_[l.node()] = 1;
        --pending_[l.node()];
      }
    }
  }

  template <class Hook>
  void run(Hook& hook)
  {
    const std::size_t n = c_.size();
    {
      Word* v = data(alloc(0));
      std::fill(v, v + bw_, Word{0});
      maybe_release(0);
    }
    for (NodeId id = 1; id < n; ++id) {
      const Node& node = c_.node(id);
      Word* v = data(alloc(id));
      if (node.kind == NodeKind::Input) {
        const auto src = s_.inputs[node.input_index].words();
        std::copy(src.begin() + static_cast<std::ptrdiff_t>(w0_),
                  src.begin() + static_cast<std::ptrdiff_t>(w0_ + bw_), v);
        hook.input(id, std::span<Word>(v, bw_), w0_);
        v[bw_ - 1] &= tail_;
      } else {
        const Word* a = data(slot_[node.fanin0.node()]);
        const Word* b = data(slot_[node.fanin1.node()]);
        const Word ia = node.fanin0.complemented() ? ~Word{0} : 0;
        const Word ib = node.fanin1.complemented() ? ~Word{0} : 0;
        if (node.kind == NodeKind::And) {
          for (std::size_t k = 0; k < bw_; ++k) {
            v[k] = (a[k] ^ ia) & (b[k] ^ ib);
          }
        } else {
          for (std::size_t k = 0; k < bw_; ++k) {
            v[k] = (a[k] ^ ia) ^ (b[k] ^ ib);
          }
        }
        v[bw_ - 1] &= tail_;
        hook.gate(id, node, a, ia, b, ib, std::span<Word>(v, bw_), w0_, tail_);
        v[bw_ - 1] &= tail_;
        consume(node.fanin0.node());
        consume(node.fanin1.node());
      }
      maybe_release(id);
    }
  }

  void write_outputs(OutputColumns& outs) const
  {
    const auto& buses = c_.buses();
    for (std::size_t bi = 0; bi < buses.size(); ++bi) {
      for (std::size_t k = 0; k < buses[bi].bits.size(); ++k) {
        const Literal l = buses[bi].bits[k];
        const Word* v = data(slot_[l.node()]);
        const Word inv = l.complemented() ? ~Word{0} : 0;
        auto dst = outs[bi].bits[k].words();
        for (std::size_t w = 0; w < bw_; ++w) {
          dst[w0_ + w] = v[w] ^ inv;
        }
        dst[w0_ + bw_ - 1] &= tail_;
      }
    }
  }

  std::size_t peak_live() const { return peak_; }

 private:
  std::uint32_t alloc(NodeId id)
  {
    std::uint32_t s;
    if (!free_.empty()) {
      s = free_.back();
      free_.pop_back();
    } else {
      s = static_cast<std::uint32_t>(storage_.size() / bw_);
      storage_.resize(storage_.size() + bw_);
    }
    slot_[id] = s;
    peak_ = std::max(peak_, ++live_);
    return s;
  }

  Word* data(std::uint32_t slot) { return storage_.data() + static_cast<std::size_t>(slot) * bw_; }
  const Word* data(std::uint32_t slot) const
  {
    return storage_.data() + static_cast<std::size_t>(slot) * bw_;
  }

  void consume(NodeId id)
  {
    --pending_[id];
    maybe_release(id);
  }

  void maybe_release(NodeId id)
  {
    if (recycle_ && pending_[id] == 0 && !pinned_[id] && slot_[id] != kNoSlot) {
      free_.push_back(slot_[id]);
      slot_[id] = kNoSlot;
      --live_;
    }
  }

  const Circuit& c_;
  const Stimulus& s_;
  std::size_t w0_;
  std::size_t bw_;
  bool recycle_;
  Word tail_;
  std::vector<std::uint32_t> slot_;
  std::vector<std::uint32_t> pending_;
  std::vector<std::uint8_t> pinned_;
  std::vector<Word> storage_;
  std::vector<std::uint32_t> free_;
  std::size_t live_ = 0;
  std::size_t peak_ = 0;
};

OutputColumns make_outputs(const Circuit& circuit, std::size_t num_examples)
{
  OutputColumns outs;
  outs.reserve(circuit.buses().size());
  for (const OutputBus& bus : circuit.buses()) {
    outs.push_back(BusValues{bus.name, std::vector<BitColumn>(bus.bits.size(), BitColumn(num_examples))});
  }
  return outs;
}

void check_stimulus(const Circuit& circuit, const Stimulus& stimulus)
{
  if (stimulus.inputs.size() != circuit.num_inputs()) {
    throw std::invalid_argument("stimulus has " + std::to_string(stimulus.inputs.size()) +
                                " inputs but the circuit has " +
                                std::to_string(circuit.num_inputs()));
  }
  for (const BitColumn& col : stimulus.inputs) {
    if (col.size() != stimulus.num_examples) {
      throw std::invalid_argument("stimulus columns differ in length");
    }
  }
}

struct NoHook {
  void input(NodeId, std::span<Word>, std::size_t) {}
  void gate(NodeId, const Node&, const Word*, Word, const Word*, Word, std::span<Word>,
            std::size_t, Word)
  {
  }
};

struct CountHook {
  std::vector<std::uint32_t>* ones;
  std::vector<std::array<std::uint32_t, 4>>* pairs;

  void input(NodeId id, std::span<Word> v, std::size_t)
  {
    (*ones)[id] += popcount(v);
  }
  void gate(NodeId id, const Node&, const Word* a, Word ia, const Word* b, Word ib,
            std::span<Word> v, std::size_t, Word tail)
  {
    (*ones)[id] += popcount(v);
    if (pairs == nullptr) {
      return;
    }
    auto& p = (*pairs)[id];
    const std::size_t n = v.size();
    for (std::size_t k = 0; k < n; ++k) {
      const Word valid = k + 1 == n ? tail : ~Word{0};
      const Word x = (a[k] ^ ia) & valid;
      const Word y = (b[k] ^ ib) & valid;
      p[0] += static_cast<std::uint32_t>(std::popcount(~x & ~y & valid));
      p[1] += static_cast<std::uint32_t>(std::popcount(~x & y));
      p[2] += static_cast<std::uint32_t>(std::popcount(x & ~y));
      p[3] += static_cast<std::uint32_t>(std::popcount(x & y));
    }
  }

  static std::uint32_t popcount(std::span<const Word> v)
  {
    std::uint32_t n = 0;
    for (Word w : v) {
      n += static_cast<std::uint32_t>(std::popcount(w));
    }
    return n;
  }
};

void apply_rare_flags(std::uint8_t f, std::span<Word> v)
{
  switch (f) {
    case 1:  // only ones are rare: majority constant 0
      std::fill(v.begin(), v.end(), Word{0});
      break;
    case 2:
      std::fill(v.begin(), v.end(), ~Word{0});
      break;
    case 3:  // both values rare
      for (Word& w : v) {
        w = ~w;
      }
      break;
    default:
      break;
  }
}

struct SimpleHook {
  const PerturbPlan* plan;

  void input(NodeId id, std::span<Word> v, std::size_t)
  {
    if (plan->include_inputs()) {
      apply_rare_flags(plan->flags(id), v);
    }
  }
  void gate(NodeId id, const Node&, const Word*, Word, const Word*, Word, std::span<Word> v,
            std::size_t, Word)
  {
    apply_rare_flags(plan->flags(id), v);
  }
};

struct RandomizedHook {
  const PerturbPlan* plan;

  void perturb(NodeId id, std::span<Word> v, std::size_t w0)
  {
    const std::uint8_t f = plan->flags(id);
    if (f == 0) {
      return;
    }
    for (std::size_t k = 0; k < v.size(); ++k) {
      const Word m = ((f & 1) ? v[k] : 0) | ((f & 2) ? ~v[k] : 0);
      if (m == 0) {
        continue;
      }
      SplitMix64 gen{stream_key(plan->seed(), id, w0 + k)};
      v[k] = (v[k] & ~m) | (gen.next() & m);
    }
  }
  void input(NodeId id, std::span<Word> v, std::size_t w0)
  {
    if (plan->include_inputs()) {
      perturb(id, v, w0);
    }
  }
  void gate(NodeId id, const Node&, const Word*, Word, const Word*, Word, std::span<Word> v,
            std::size_t w0, Word)
  {
    perturb(id, v, w0);
  }
};

struct CompositeHook {
  const PerturbPlan* plan;

  void input(NodeId, std::span<Word>, std::size_t) {}
  void gate(NodeId id, const Node&, const Word* a, Word ia, const Word* b, Word ib,
            std::span<Word> v, std::size_t, Word)
  {
    const std::uint8_t f = plan->flags(id);
    if (f == 0) {
      return;
    }
    for (std::size_t k = 0; k < v.size(); ++k) {
      const Word x = a[k] ^ ia;
      const Word y = b[k] ^ ib;
      Word m = 0;
      if (f & 1) m |= ~x & ~y;
      if (f & 2) m |= ~x & y;
      if (f & 4) m |= x & ~y;
      if (f & 8) m |= x & y;
      v[k] ^= m;
    }
  }
};

struct NoiseHook {
  const PerturbPlan* plan;

  void perturb(NodeId id, std::span<Word> v, std::size_t w0)
  {
    for (std::size_t k = 0; k < v.size(); ++k) {
      SplitMix64 gen{stream_key(plan->seed(), id, w0 + k)};
      v[k] ^= bernoulli_word(gen, plan->probability());
    }
  }
  void input(NodeId id, std::span<Word> v, std::size_t w0)
  {
    if (plan->include_inputs()) {
      perturb(id, v, w0);
    }
  }
  void gate(NodeId id, const Node&, const Word*, Word, const Word*, Word, std::span<Word> v,
            std::size_t w0, Word)
  {
    perturb(id, v, w0);
  }
};

template <class MakeHook>
OutputColumns run_perturbed(const Circuit& circuit, const Stimulus& stimulus,
                            const SimOptions& options, SimStats* stats, MakeHook&& make_hook)
{
  OutputColumns outs = make_outputs(circuit, stimulus.num_examples);
  const std::size_t total = stimulus.num_words();
  const std::size_t bw = std::max<std::size_t>(options.block_words, 1);
  const unsigned workers = resolve_threads(options, (total + bw - 1) / bw);
  std::vector<std::size_t> peaks(workers, 0);
  for_each_block(total, options, workers, [&](unsigned w, std::size_t w0, std::size_t w1) {
    Sweep sweep(circuit, stimulus, w0, w1, options.recycle);
    auto hook = make_hook();
    sweep.run(hook);
    sweep.write_outputs(outs);
    peaks[w] = std::max(peaks[w], sweep.peak_live());
  });
  if (stats != nullptr) {
    stats->peak_live_columns = *std::max_element(peaks.begin(), peaks.end());
  }
  return outs;
}

}  // namespace

CountResult simulate_and_count(const Circuit& circuit, const Stimulus& stimulus, bool want_pairs,
                               const SimOptions& options)
{
  check_stimulus(circuit, stimulus);
  const std::size_t n = circuit.size();
  const std::size_t total = stimulus.num_words();
  const std::size_t bw = std::max<std::size_t>(options.block_words, 1);
  const unsigned workers = resolve_threads(options, (total + bw - 1) / bw);

  std::vector<std::vector<std::uint32_t>> ones(workers, std::vector<std::uint32_t>(n, 0));
  std::vector<std::vector<std::array<std::uint32_t, 4>>> pairs(
      want_pairs ? workers : 0, std::vector<std::array<std::uint32_t, 4>>(n, {0, 0, 0, 0}));
  std::vector<std::size_t> peaks(workers, 0);

  CountResult result;
  result.outputs = make_outputs(circuit, stimulus.num_examples);
  for_each_block(total, options, workers, [&](unsigned w, std::size_t w0, std::size_t w1) {
    Sweep sweep(circuit, stimulus, w0, w1, options.recycle);
    CountHook hook{&ones[w], want_pairs ? &pairs[w] : nullptr};
    sweep.run(hook);
    sweep.write_outputs(result.outputs);
    peaks[w] = std::max(peaks[w], sweep.peak_live());
  });

  result.counts.num_examples = stimulus.num_examples;
  result.counts.ones.assign(n, 0);
  for (const auto& part : ones) {
    for (std::size_t i = 0; i < n; ++i) {
      result.counts.ones[i] += part[i];
    }
  }
  if (want_pairs) {
    PairCountTable table;
    table.counts.assign(n, {0, 0, 0, 0});
    for (const auto& part : pairs) {
      for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < 4; ++k) {
          table.counts[i][k] += part[i][k];
        }
      }
    }
    result.pairs = std::move(table);
  }
  result.stats.peak_live_columns = *std::max_element(peaks.begin(), peaks.end());
  return result;
}

// ---------------------------------------------------------------------------
// PerturbPlan

PerturbPlan PerturbPlan::none(const Circuit& circuit)
{
  PerturbPlan p;
  p.num_nodes_ = circuit.size();
  return p;
}

namespace {

bool perturbable(const Node& n, bool include_inputs)
{
  return n.is_gate() || (include_inputs && n.kind == NodeKind::Input);
}

}  // namespace

PerturbPlan PerturbPlan::simple(const Circuit& circuit, const CountTable& counts, std::uint64_t l,
                                bool include_inputs)
{
  if (counts.ones.size() != circuit.size()) {
    throw std::invalid_argument("count table does not belong to this circuit");
  }
  PerturbPlan p;
  p.mode_ = PerturbMode::Simple;
  p.threshold_ = l;
  p.include_inputs_ = include_inputs;
  p.num_nodes_ = circuit.size();
  p.flags_.assign(circuit.size(), 0);
  p.triggered_.assign(circuit.size(), 0);
  for (NodeId id = 0; id < circuit.size(); ++id) {
    if (!perturbable(circuit.node(id), include_inputs)) {
      continue;
    }
    const std::uint64_t c1 = counts.count(id, true);
    const std::uint64_t c0 = counts.count(id, false);
    std::uint8_t f = 0;
    if (c1 <= l) f |= 1;
    if (c0 <= l) f |= 2;
    p.flags_[id] = f;
    if ((c1 > 0 && c1 <= l) || (c0 > 0 && c0 <= l)) {
      p.triggered_[id] = 1;
      ++p.perturbed_nodes_;
    }
  }
  return p;
}

PerturbPlan PerturbPlan::randomized(const Circuit& circuit, const CountTable& counts,
                                    std::uint64_t l, std::uint64_t seed, bool include_inputs)
{
  PerturbPlan p = simple(circuit, counts, l, include_inputs);
  p.mode_ = PerturbMode::Randomized;
  p.seed_ = seed;
  return p;
}

PerturbPlan PerturbPlan::composite(const Circuit& circuit, const PairCountTable& pairs,
                                   std::uint64_t l)
{
  if (pairs.counts.size() != circuit.size()) {
    throw std::invalid_argument("pair count table does not belong to this circuit");
  }
  PerturbPlan p;
  p.mode_ = PerturbMode::Composite;
  p.threshold_ = l;
  p.num_nodes_ = circuit.size();
  p.flags_.assign(circuit.size(), 0);
  p.triggered_.assign(circuit.size(), 0);
  for (NodeId id = 0; id < circuit.size(); ++id) {
    if (!circuit.node(id).is_gate()) {
      continue;
    }
    std::uint8_t f = 0;
    bool triggered = false;
    for (int k = 0; k < 4; ++k) {
      const std::uint64_t c = pairs.counts[id][k];
      if (c <= l) {
        f |= static_cast<std::uint8_t>(1u << k);
        triggered = triggered || c > 0;
      }
    }
    p.flags_[id] = f;
    if (triggered) {
      p.triggered_[id] = 1;
      ++p.perturbed_nodes_;
    }
  }
  return p;
}

PerturbPlan PerturbPlan::noise(const Circuit& circuit, double probability, std::uint64_t seed,
                               bool include_inputs)
{
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw std::invalid_argument("noise probability must lie in [0, 1]");
  }
  PerturbPlan p;
  p.mode_ = PerturbMode::Noise;
  p.probability_ = probability;
  p.seed_ = seed;
  p.include_inputs_ = include_inputs;
  p.num_nodes_ = circuit.size();
  return p;
}

std::vector<NodeId> PerturbPlan::perturbed_nodes() const
{
  std::vector<NodeId> out;
  for (NodeId id = 0; id < triggered_.size(); ++id) {
    if (triggered_[id]) {
      out.push_back(id);
    }
  }
  return out;
}

OutputColumns simulate_perturbed(const Circuit& circuit, const Stimulus& stimulus,
                                 const PerturbPlan& plan, const SimOptions& options,
                                 SimStats* stats)
{
  check_stimulus(circuit, stimulus);
  if (plan.num_nodes() != circuit.size()) {
    throw std::invalid_argument("perturbation plan was built for a different circuit");
  }
  switch (plan.mode()) {
    case PerturbMode::None:
      return run_perturbed(circuit, stimulus, options, stats, [] { return NoHook{}; });
    case PerturbMode::Simple:
      return run_perturbed(circuit, stimulus, options, stats, [&] { return SimpleHook{&plan}; });
    case PerturbMode::Randomized:
      return run_perturbed(circuit, stimulus, options, stats,
                           [&] { return RandomizedHook{&plan}; });
    case PerturbMode::Composite:
      return run_perturbed(circuit, stimulus, options, stats,
                           [&] { return CompositeHook{&plan}; });
    case PerturbMode::Noise:
      if (plan.probability() == 0.0) {
        return run_perturbed(circuit, stimulus, options, stats, [] { return NoHook{}; });
      }
      return run_perturbed(circuit, stimulus, options, stats, [&] { return NoiseHook{&plan}; });
  }
  throw std::logic_error("unknown perturbation mode");
}

namespace {

template <class Inner>
struct CaptureHook {
  Inner inner;
  std::vector<BitColumn>* values;

  void input(NodeId id, std::span<Word> v, std::size_t w0)
  {
    inner.input(id, v, w0);
    store(id, v, w0);
  }
  void gate(NodeId id, const Node& n, const Word* a, Word ia, const Word* b, Word ib,
            std::span<Word> v, std::size_t w0, Word tail)
  {
    inner.gate(id, n, a, ia, b, ib, v, w0, tail);
    v[v.size() - 1] &= tail;
    store(id, v, w0);
  }
  void store(NodeId id, std::span<const Word> v, std::size_t w0)
  {
    auto dst = (*values)[id].words();
    std::copy(v.begin(), v.end(), dst.begin() + static_cast<std::ptrdiff_t>(w0));
    const std::size_t last = w0 + v.size() - 1;
    dst[last] &= valid_mask((*values)[id].size(), last);
  }
};

template <class Inner>
std::vector<BitColumn> capture(const Circuit& circuit, const Stimulus& stimulus, Inner inner)
{
  std::vector<BitColumn> values(circuit.size(), BitColumn(stimulus.num_examples));
  const std::size_t total = stimulus.num_words();
  if (total == 0) {
    return values;
  }
  Sweep sweep(circuit, stimulus, 0, total, false);
  CaptureHook<Inner> hook{inner, &values};
  sweep.run(hook);
  return values;
}

}  // namespace

std::vector<BitColumn> simulate_node_values(const Circuit& circuit, const Stimulus& stimulus,
                                            const PerturbPlan& plan)
{
  check_stimulus(circuit, stimulus);
  if (plan.num_nodes() != circuit.size()) {
    throw std::invalid_argument("perturbation plan was built for a different circuit");
  }
  switch (plan.mode()) {
    case PerturbMode::Simple:
      return capture(circuit, stimulus, SimpleHook{&plan});
    case PerturbMode::Randomized:
      return capture(circuit, stimulus, RandomizedHook{&plan});
    case PerturbMode::Composite:
      return capture(circuit, stimulus, CompositeHook{&plan});
    case PerturbMode::Noise:
      return capture(circuit, stimulus, NoiseHook{&plan});
    case PerturbMode::None:
      break;
  }
  return capture(circuit, stimulus, NoHook{});
}

// ---------------------------------------------------------------------------
// Accuracy

std::vector<std::uint8_t> classify(const OutputColumns& outputs, BusDecoding decoding)
{
  if (outputs.size() < 2) {
    throw std::invalid_argument("classification needs at least two output buses");
  }
  const std::size_t width = outputs.front().bits.size();
  for (const BusValues& bus : outputs) {
    if (bus.bits.size() != width || width == 0 || width > 63) {
      throw std::invalid_argument("output buses must share one width between 1 and 63");
    }
  }
  const bool is_signed = decoding == BusDecoding::Signed ||
                         (decoding == BusDecoding::Auto && width > 1);
  const std::size_t n = outputs.front().bits.front().size();
  std::vector<std::uint8_t> cls(n, 0);
  std::vector<std::int64_t> best(n, 0);
  for (std::size_t bi = 0; bi < outputs.size(); ++bi) {
    const auto& bits = outputs[bi].bits;
    for (std::size_t e = 0; e < n; ++e) {
      std::int64_t v = 0;
      for (std::size_t k = 0; k < width; ++k) {
        v |= static_cast<std::int64_t>(bits[k].get(e)) << k;
      }
      if (is_signed && ((v >> (width - 1)) & 1)) {
        v -= std::int64_t{1} << width;
      }
      if (bi == 0 || v > best[e]) {
        best[e] = v;
        cls[e] = static_cast<std::uint8_t>(bi);
      }
    }
  }
  return cls;
}

double accuracy_of(const OutputColumns& outputs, std::span<const std::uint8_t> labels,
                   BusDecoding decoding)
{
  const auto cls = classify(outputs, decoding);
  if (labels.size() != cls.size()) {
    throw std::invalid_argument("label count does not match the simulated examples");
  }
  if (labels.empty()) {
    return 0.0;
  }
  std::size_t correct = 0;
  for (std::size_t e = 0; e < labels.size(); ++e) {
    if (labels[e] > 9 || labels[e] >= outputs.size()) {
      throw std::out_of_range("label " + std::to_string(labels[e]) + " out of range");
    }
    correct += cls[e] == labels[e] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

// ---------------------------------------------------------------------------
// Rare-pattern statistics

namespace {

struct RareMaskHook {
  const CountTable* counts;
  std::span<const std::uint64_t> thresholds;  // ascending
  bool include_inputs;
  std::vector<Word>* first_rare;  // thresholds.size() x block words

  void record(NodeId id, std::span<const Word> v)
  {
    const std::size_t bw = v.size();
    for (int value = 0; value < 2; ++value) {
      const std::uint64_t c = counts->count(id, value != 0);
      if (c == 0) {
        continue;
      }
      const auto it = std::lower_bound(thresholds.begin(), thresholds.end(), c);
      if (it == thresholds.end()) {
        continue;
      }
      Word* acc = first_rare->data() + static_cast<std::size_t>(it - thresholds.begin()) * bw;
      for (std::size_t k = 0; k < bw; ++k) {
        acc[k] |= value ? v[k] : ~v[k];
      }
    }
  }
  void input(NodeId id, std::span<Word> v, std::size_t)
  {
    if (include_inputs) {
      record(id, v);
    }
  }
  void gate(NodeId id, const Node&, const Word*, Word, const Word*, Word, std::span<Word> v,
            std::size_t, Word)
  {
    record(id, v);
  }
};

}  // namespace

std::vector<std::size_t> unaffected_counts(const Circuit& circuit, const Stimulus& stimulus,
                                           const CountTable& counts,
                                           std::span<const std::uint64_t> thresholds,
                                           bool include_inputs, const SimOptions& options)
{
  check_stimulus(circuit, stimulus);
  if (counts.ones.size() != circuit.size()) {
    throw std::invalid_argument("count table does not belong to this circuit");
  }
  std::vector<std::uint64_t> sorted(thresholds.begin(), thresholds.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  const std::size_t total = stimulus.num_words();
  const std::size_t bw = std::max<std::size_t>(options.block_words, 1);
  const unsigned workers = resolve_threads(options, (total + bw - 1) / bw);
  std::vector<std::vector<std::size_t>> affected(workers, std::vector<std::size_t>(sorted.size(), 0));

  for_each_block(total, options, workers, [&](unsigned w, std::size_t w0, std::size_t w1) {
    const std::size_t n = w1 - w0;
    std::vector<Word> first_rare(sorted.size() * n, 0);
    Sweep sweep(circuit, stimulus, w0, w1, options.recycle);
    RareMaskHook hook{&counts, sorted, include_inputs, &first_rare};
    sweep.run(hook);
    std::vector<Word> running(n, 0);
    for (std::size_t t = 0; t < sorted.size(); ++t) {
      for (std::size_t k = 0; k < n; ++k) {
        running[k] |= first_rare[t * n + k];
        affected[w][t] += static_cast<std::size_t>(
            std::popcount(running[k] & valid_mask(stimulus.num_examples, w0 + k)));
      }
    }
  });

  std::vector<std::size_t> out;
  out.reserve(thresholds.size());
  for (std::uint64_t l : thresholds) {
    const auto t = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), l) -
                                            sorted.begin());
    std::size_t hit = 0;
    for (const auto& part : affected) {
      hit += part[t];
    }
    out.push_back(stimulus.num_examples - hit);
  }
  return out;
}

std::size_t unaffected_count(const Circuit& circuit, const Stimulus& stimulus,
                             const CountTable& counts, std::uint64_t l, bool include_inputs,
                             const SimOptions& options)
{
  const std::uint64_t ls[] = {l};
  return unaffected_counts(circuit, stimulus, counts, ls, include_inputs, options).front();
}

// ---------------------------------------------------------------------------

NaiveResult simulate_naive(const Circuit& circuit, std::span<const std::uint8_t> input_bits)
{
  if (input_bits.size() != circuit.num_inputs()) {
    throw std::invalid_argument("simulate_naive: wrong number of input bits");
  }
  NaiveResult r;
  r.node_values.assign(circuit.size(), 0);
  auto value = [&](Literal l) -> std::uint8_t {
    return static_cast<std::uint8_t>(r.node_values[l.node()] ^ (l.complemented() ? 1 : 0));
  };
  for (NodeId id = 1; id < circuit.size(); ++id) {
    const Node& n = circuit.node(id);
    switch (n.kind) {
      case NodeKind::Input:
        r.node_values[id] = input_bits[n.input_index] ? 1 : 0;
        break;
      case NodeKind::And:
        r.node_values[id] = value(n.fanin0) & value(n.fanin1);
        break;
      case NodeKind::Xor:
        r.node_values[id] = value(n.fanin0) ^ value(n.fanin1);
        break;
      case NodeKind::Const0:
        break;
    }
  }
  for (const OutputBus& bus : circuit.buses()) {
    auto& bits = r.bus_bits.emplace_back();
    for (Literal l : bus.bits) {
      bits.push_back(value(l));
    }
  }
  return r;
}

}  // namespace cfsim
