#include "cfsim/cfs.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "cfsim/rng.hpp"

namespace cfsim {

namespace {

void check_schedule(std::span<const std::uint64_t> schedule)
{
  if (schedule.empty()) {
    throw std::invalid_argument("threshold schedule is empty");
  }
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (schedule[i] <= schedule[i - 1]) {
      throw std::invalid_argument("threshold schedule must be strictly ascending");
    }
  }
}

PerturbPlan make_plan(const Circuit& circuit, const CountResult& pass1, std::uint64_t l,
                      CfsMode mode, const CfsOptions& options)
{
  switch (mode) {
    case CfsMode::Simple:
      return PerturbPlan::simple(circuit, pass1.counts, l, options.include_inputs);
    case CfsMode::Randomized:
      return PerturbPlan::randomized(circuit, pass1.counts, l, options.seed,
                                     options.include_inputs);
    case CfsMode::Composite:
      return PerturbPlan::composite(circuit, *pass1.pairs, l);
  }
  throw std::logic_error("unknown CFS mode");
}

std::string fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

CfsCurve cfs_curve(const Circuit& circuit, const Stimulus& stimulus,
                   std::span<const std::uint8_t> labels, std::span<const std::uint64_t> schedule,
                   CfsMode mode, const CfsOptions& options)
{
  check_schedule(schedule);
  const CountResult pass1 =
      simulate_and_count(circuit, stimulus, mode == CfsMode::Composite, options.sim);
  CfsCurve curve;
  curve.baseline = accuracy_of(pass1.outputs, labels, options.decoding);
  const auto unaffected = unaffected_counts(circuit, stimulus, pass1.counts, schedule,
                                            options.include_inputs, options.sim);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const PerturbPlan plan = make_plan(circuit, pass1, schedule[i], mode, options);
    CfsRow row;
    row.l = schedule[i];
    row.accuracy = accuracy_of(simulate_perturbed(circuit, stimulus, plan, options.sim), labels,
                               options.decoding);
    row.unaffected = unaffected[i];
    row.perturbed_nodes = plan.perturbed_node_count();
    curve.rows.push_back(row);
  }
  return curve;
}

CfsRow cfs_accuracy(const Circuit& circuit, const Stimulus& stimulus,
                    std::span<const std::uint8_t> labels, std::uint64_t l, CfsMode mode,
                    const CfsOptions& options)
{
  const std::uint64_t one[] = {l};
  return cfs_curve(circuit, stimulus, labels, one, mode, options).rows.front();
}

std::vector<NoiseRow> noise_curve(const Circuit& circuit, const Stimulus& stimulus,
                                  std::span<const std::uint8_t> labels,
                                  std::span<const double> p_schedule, std::size_t trials,
                                  std::uint64_t seed, const NoiseOptions& options)
{
  if (trials == 0) {
    throw std::invalid_argument("noise curve needs at least one trial");
  }
  std::vector<NoiseRow> rows;
  for (double p : p_schedule) {
    std::vector<double> acc;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::uint64_t trial_seed = stream_key(seed, std::bit_cast<std::uint64_t>(p), t);
      const PerturbPlan plan =
          PerturbPlan::noise(circuit, p, trial_seed, options.include_inputs);
      acc.push_back(accuracy_of(simulate_perturbed(circuit, stimulus, plan, options.sim), labels,
                                options.decoding));
    }
    NoiseRow row;
    row.p = p;
    row.trials = trials;
    double sum = 0.0;
    for (double a : acc) sum += a;
    row.mean_accuracy = sum / static_cast<double>(trials);
    if (trials > 1) {
      double ss = 0.0;
      for (double a : acc) ss += (a - row.mean_accuracy) * (a - row.mean_accuracy);
      row.stddev = std::sqrt(ss / static_cast<double>(trials - 1));
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<RareStatsRow> rare_stats(const Circuit& circuit, const Stimulus& stimulus,
                                     const CountTable& counts,
                                     std::span<const std::uint64_t> schedule, bool include_inputs,
                                     const SimOptions& options)
{
  check_schedule(schedule);
  const auto unaffected =
      unaffected_counts(circuit, stimulus, counts, schedule, include_inputs, options);
  std::vector<RareStatsRow> rows;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const PerturbPlan plan = PerturbPlan::simple(circuit, counts, schedule[i], include_inputs);
    rows.push_back({schedule[i], plan.perturbed_node_count(), unaffected[i]});
  }
  return rows;
}

#ifndef CFSIM_VERSION
#define CFSIM_VERSION "unknown"
#endif

const char* version() { return CFSIM_VERSION; }

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t h)
{
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v)
{
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_cfs_csv(std::ostream& out, const CfsCurve& curve, const std::string& provenance)
{
  if (!provenance.empty()) {
    out << "# " << provenance << '\n';
  }
  out << "l,accuracy,unaffected,perturbed_nodes\n";
  for (const CfsRow& r : curve.rows) {
    out << r.l << ',' << fmt(r.accuracy) << ',' << r.unaffected << ',' << r.perturbed_nodes
        << '\n';
  }
}

void write_noise_csv(std::ostream& out, std::span<const NoiseRow> rows,
                     const std::string& provenance)
{
  if (!provenance.empty()) {
    out << "# " << provenance << '\n';
  }
  out << "p,mean_accuracy,stddev,trials\n";
  for (const NoiseRow& r : rows) {
    out << fmt(r.p) << ',' << fmt(r.mean_accuracy) << ',' << fmt(r.stddev) << ',' << r.trials
        << '\n';
  }
}

}  // namespace cfsim
