#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "probopt/certificates.hpp"
#include "probopt/derandomize.hpp"
#include "probopt/direct.hpp"
#include "probopt/distribution.hpp"
#include "probopt/graph.hpp"
#include "probopt/locality.hpp"
#include "probopt/mpnn.hpp"
#include "probopt/random.hpp"

namespace probopt {

enum class Producer { direct, mpnn, uniform_random };
enum class DecodeMethod {
  /// Method of conditional expectation (volume-guarded for partitioning).
  conditional,
  /// Clique sweep by decreasing probability.
  sweep,
  /// Best of k samples.
  sampled,
};

inline const char* to_string(Producer p) {
  switch (p) {
    case Producer::direct: return "direct";
    case Producer::mpnn: return "mpnn";
    case Producer::uniform_random: return "uniform";
  }
  return "?";
}

inline const char* to_string(DecodeMethod d) {
  switch (d) {
    case DecodeMethod::conditional: return "conditional";
    case DecodeMethod::sweep: return "sweep";
    case DecodeMethod::sampled: return "sampled";
  }
  return "?";
}

struct SolveConfig {
  Producer producer = Producer::direct;
  DecodeMethod decode = DecodeMethod::conditional;
  std::optional<double> beta;
  std::optional<double> gamma;
  double t = kDefaultConfidence;
  /// Restarts (clique) or restarts per interval (partition).
  std::size_t restarts = 10;
  /// When set, restarts continue until this many seconds pass (at least one runs).
  std::optional<double> time_budget;
  std::size_t steps = 300;
  AdamConfig adam{};
  /// Initial logit of the restart's seed node in direct mode; others start at 0.
  double seed_logit = 2.0;
  std::size_t samples = 32;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  IntervalSchedule schedule{};
  /// Explicit intervals replace the schedule when non-empty.
  std::vector<VolumeConstraint> intervals;
  VisitOrder order = VisitOrder::decreasing_probability;
  /// Grow each decoded clique to a maximal one.
  bool extend = true;
  const MpnnParams* mpnn = nullptr;
};

struct SolveResult {
  ProblemKind problem = ProblemKind::clique;
  NodeSet set;
  /// w(S) for cliques, cut(S) for partitions.
  double objective = 0.0;
  bool constraint_ok = false;
  /// Partitioning only.
  std::optional<double> conductance;
  std::optional<VolumeConstraint> interval;
  std::optional<NodeId> seed_node;
  Certificate certificate;
  double loss = 0.0;
  std::size_t seeds_tried = 0;
  /// Conditional decodes that did not end on a clique and were pruned to one.
  std::size_t repaired = 0;
  Producer producer = Producer::direct;
  DecodeMethod decode = DecodeMethod::conditional;
  std::optional<DecodeTrace> trace;
  double wall_time = 0.0;
};

/// Runs fn(0..count-1) on up to `threads` workers. Results must be written
/// to per-index slots so the outcome does not depend on scheduling.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline double approximation_ratio(double found, double optimal) {
  if (!(optimal > 0.0)) throw Error("approximation ratio needs a positive optimum");
  return found / optimal;
}

/// Clique built greedily as a maximal independent set of the complement:
/// repeatedly take the highest-degree candidate (ties by index) and keep
/// only candidates adjacent to it.
inline NodeSet greedy_mis_complement(const Graph& g) {
  NodeSet clique(g);
  std::vector<NodeId> candidates(g.num_nodes());
  std::iota(candidates.begin(), candidates.end(), NodeId{0});
  while (!candidates.empty()) {
    NodeId pick = candidates.front();
    for (NodeId v : candidates) {
      if (g.degree(v) > g.degree(pick)) pick = v;
    }
    clique.insert(g, pick);
    std::vector<NodeId> next;
    for (NodeId v : candidates) {
      if (v != pick && g.has_edge(pick, v)) next.push_back(v);
    }
    candidates.swap(next);
  }
  return clique;
}

namespace detail {

struct CliqueAttempt {
  NodeSet set;
  double weight = -1.0;
  double loss = 0.0;
  bool repaired = false;
  DecodeTrace trace;
};

inline NodeDistribution uniform_random_distribution(std::size_t n, Rng& rng) {
  std::vector<double> p(n);
  for (double& x : p) x = uniform01(rng);
  return NodeDistribution(std::move(p));
}

inline CliqueAttempt clique_attempt(const Graph& g, const SolveConfig& config,
                                    const CliqueLossParams& params, std::size_t restart) {
  Rng rng = make_rng(config.seed, restart);
  const NodeId seed = static_cast<NodeId>(uniform_index(rng, g.num_nodes()));
  NodeDistribution p;
  switch (config.producer) {
    case Producer::direct: {
      DirectInit init;
      init.logits.assign(g.num_nodes(), 0.0);
      init.logits[seed] = config.seed_logit;
      p = optimize_direct(g, CliqueLossSpec{params.beta, params.gamma}, config.steps, config.adam, init).produced;
      break;
    }
    case Producer::mpnn:
      if (!config.mpnn) throw Error("the mpnn producer needs trained parameters");
      p = mpnn_forward(g, *config.mpnn, seed);
      break;
    case Producer::uniform_random:
      p = uniform_random_distribution(g.num_nodes(), rng);
      break;
  }

  CliqueAttempt out;
  out.loss = clique_loss(g, p, params).value;
  const CliquePenaltyObjective objective{params};
  switch (config.decode) {
    case DecodeMethod::conditional: {
      DecodeResult r = decode_conditional(g, p, objective, config.order);
      out.set = std::move(r.set);
      out.trace = std::move(r.trace);
      break;
    }
    case DecodeMethod::sweep:
      out.set = decode_clique_sweep(g, p);
      break;
    case DecodeMethod::sampled:
      out.set = decode_best_of_k(g, p, objective, config.samples, rng);
      break;
  }
  const bool clique = is_clique(g, out.set);
  if (!clique || config.extend) {
    // Sweep the decoded nodes first, by p, then the rest. On a clique this
    // only adds nodes, which lowers γ − w(S); otherwise it prunes to a clique.
    std::vector<double> ranked(g.num_nodes());
    for (NodeId v = 0; v < g.num_nodes(); ++v) ranked[v] = out.set.contains(v) ? 0.5 + 0.5 * p[v] : 0.5 * p[v];
    out.set = decode_clique_sweep(g, NodeDistribution(std::move(ranked)));
    out.repaired = !clique;
  }
  out.weight = set_weight(g, out.set);
  return out;
}

template <class Attempt>
std::vector<std::optional<Attempt>> run_restarts(std::size_t restarts, const SolveConfig& config,
                                                 const std::function<Attempt(std::size_t)>& attempt) {
  if (!config.time_budget) {
    std::vector<std::optional<Attempt>> slots(restarts);
    parallel_for(restarts, config.threads, [&](std::size_t r) { slots[r] = attempt(r); });
    return slots;
  }
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::optional<Attempt>> slots;
  for (std::size_t r = 0;; ++r) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r > 0 && elapsed >= *config.time_budget) break;
    slots.push_back(attempt(r));
  }
  return slots;
}

}  // namespace detail

/**
 * Maximum clique by restarts: each restart picks a random seed node, produces
 * a distribution, decodes it, and the heaviest clique wins (earliest restart
 * on ties). The certificate is issued for the winning restart's loss.
 */
inline SolveResult solve_max_clique(const Graph& g, const SolveConfig& config) {
  if (g.num_nodes() == 0) throw Error("cannot solve max clique on an empty graph");
  if (config.restarts == 0 && !config.time_budget) throw Error("restart budget must be positive");
  const auto start = std::chrono::steady_clock::now();
  const CliqueLossParams params = CliqueLossSpec{config.beta, config.gamma}.resolve(g);

  const std::function<detail::CliqueAttempt(std::size_t)> attempt = [&](std::size_t r) {
    return detail::clique_attempt(g, config, params, r);
  };
  auto slots = detail::run_restarts(config.restarts, config, attempt);

  SolveResult result;
  result.problem = ProblemKind::clique;
  result.producer = config.producer;
  result.decode = config.decode;
  result.seeds_tried = slots.size();
  const detail::CliqueAttempt* best = nullptr;
  for (const auto& slot : slots) {
    if (slot->repaired) ++result.repaired;
    if (!best || slot->weight > best->weight + 1e-12 ||
        (std::abs(slot->weight - best->weight) <= 1e-12 && slot->set.size() > best->set.size())) {
      best = &*slot;
    }
  }
  result.set = best->set;
  result.objective = set_weight(g, result.set);
  result.constraint_ok = is_clique(g, result.set);
  result.loss = best->loss;
  result.certificate = clique_certificate(std::max(best->loss, 0.0), params.beta, params.gamma, config.t);
  if (config.decode == DecodeMethod::conditional) result.trace = best->trace;
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

/// solve_max_clique with i.i.d. uniform [0, 1] probabilities in place of the producer.
inline SolveResult uniform_random_baseline(const Graph& g, SolveConfig config) {
  config.producer = Producer::uniform_random;
  return solve_max_clique(g, config);
}

namespace detail {

struct PartitionAttempt {
  NodeSet set;
  VolumeConstraint interval;
  double conductance = std::numeric_limits<double>::infinity();
  bool in_interval = false;
  double loss = 0.0;
  bool rescaled = false;
  NodeDistribution evaluated;
  DecodeTrace trace;
};

inline PartitionAttempt partition_attempt(const Graph& g, NodeId seed, const SolveConfig& config,
                                          const VolumeConstraint& interval, std::size_t stream,
                                          std::size_t restart) {
  Rng rng = make_rng(config.seed, stream);
  const std::size_t n = g.num_nodes();
  const auto hops = hop_distances(g, seed);
  std::vector<std::uint8_t> active(n, 0);
  for (NodeId v = 0; v < n; ++v) active[v] = hops[v] <= config.schedule.hops ? 1 : 0;

  NodeDistribution produced;
  switch (config.producer) {
    case Producer::direct: {
      DirectInit init;
      init.logits.assign(n, 0.0);
      // Restarts past the first perturb the start so they explore.
      if (restart > 0) {
        for (double& x : init.logits) x = uniform_real(rng, -1.0, 1.0);
      }
      init.logits[seed] = config.seed_logit;
      init.active = active;
      produced = optimize_direct(g, CutLossSpec{interval}, config.steps, config.adam, init).produced;
      break;
    }
    case Producer::mpnn:
      if (!config.mpnn) throw Error("the mpnn producer needs trained parameters");
      produced = mpnn_forward(g, *config.mpnn, seed);
      break;
    case Producer::uniform_random: {
      std::vector<double> p(n, 0.0);
      for (NodeId v = 0; v < n; ++v) p[v] = active[v] ? uniform01(rng) : 0.0;
      produced = NodeDistribution(std::move(p));
      break;
    }
  }
  // A producer may zero every node (e.g. the seed alone in its ball).
  if (std::all_of(produced.probs().begin(), produced.probs().end(), [](double x) { return x == 0.0; })) {
    std::vector<double> p(n, 0.0);
    p[seed] = 1.0;
    produced = NodeDistribution(std::move(p));
  }
  RescaleResult rescaled = rescale_to_target(produced, g.degrees(), interval.target());

  PartitionAttempt out;
  out.interval = interval;
  out.rescaled = rescaled.reached_target;
  out.loss = expected_cut(g, rescaled.dist);
  if (config.decode == DecodeMethod::sampled) {
    out.set = decode_partition_best_of_k(g, rescaled.dist, interval, seed, config.samples, rng);
  } else {
    VolumeDecodeResult r = decode_cut_with_volume(g, rescaled.dist, interval, seed, config.order);
    out.set = std::move(r.set);
    out.trace = std::move(r.trace);
  }
  out.evaluated = std::move(rescaled.dist);
  out.in_interval = interval.contains(out.set.volume());
  out.conductance = out.set.volume() > 0.0 ? cut_weight(g, out.set) / out.set.volume()
                                           : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace detail

/**
 * Local partitioning around `seed`: for each volume interval (and restart),
 * rescale, optimize, and decode with the seed forced in and v_h enforced;
 * return the lowest-conductance set whose volume lands in its interval, or
 * the lowest-conductance set overall (constraint_ok = false) if none does.
 */
inline SolveResult solve_local_partition(const Graph& g, NodeId seed, const SolveConfig& config) {
  if (seed >= g.num_nodes()) throw Error("seed node out of range");
  const auto start = std::chrono::steady_clock::now();
  std::vector<VolumeConstraint> intervals =
      config.intervals.empty() ? interval_schedule(g, seed, config.schedule) : config.intervals;
  std::erase_if(intervals, [&](const VolumeConstraint& iv) { return iv.v_h < g.degree(seed); });
  if (intervals.empty()) {
    throw Error("seed degree " + std::to_string(g.degree(seed)) + " exceeds every interval's v_h");
  }
  for (const auto& iv : intervals) iv.validate();
  const std::size_t restarts = std::max<std::size_t>(config.restarts, 1);
  const std::size_t jobs = intervals.size() * restarts;

  std::vector<std::optional<detail::PartitionAttempt>> slots(jobs);
  parallel_for(jobs, config.threads, [&](std::size_t job) {
    slots[job] = detail::partition_attempt(g, seed, config, intervals[job / restarts], job, job % restarts);
  });

  const detail::PartitionAttempt* best = nullptr;
  for (const auto& slot : slots) {
    if (!best || (slot->in_interval && !best->in_interval) ||
        (slot->in_interval == best->in_interval && slot->conductance < best->conductance)) {
      best = &*slot;
    }
  }

  SolveResult result;
  result.problem = ProblemKind::partition;
  result.producer = config.producer;
  result.decode = config.decode == DecodeMethod::sampled ? DecodeMethod::sampled : DecodeMethod::conditional;
  result.seeds_tried = jobs;
  result.seed_node = seed;
  result.set = best->set;
  result.objective = cut_weight(g, result.set);
  result.interval = best->interval;
  result.constraint_ok = best->in_interval && result.set.contains(seed);
  result.conductance = conductance(g, result.set);
  result.loss = best->loss;
  result.certificate = box_certificate(std::max(best->loss, 0.0), config.t, g.degrees(),
                                       best->interval.v_l, best->interval.v_h);
  if (!best->rescaled) result.certificate.vacuous = true;
  if (result.decode == DecodeMethod::conditional) result.trace = best->trace;
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace probopt
