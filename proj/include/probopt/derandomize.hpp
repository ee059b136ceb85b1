#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <variant>
#include <vector>

#include "probopt/distribution.hpp"
#include "probopt/error.hpp"
#include "probopt/graph.hpp"
#include "probopt/random.hpp"

namespace probopt {

/// Aggregates of p that the decodable objectives are functions of.
struct Moments {
  double edge_mass = 0.0;  // Σ_E w_ij p_i p_j
  double sum_p = 0.0;      // Σ p_i
  double sum_p2 = 0.0;     // Σ p_i²
  double volume = 0.0;     // Σ d_i p_i
};

/// Expected clique penalty, the clique loss itself.
struct CliquePenaltyObjective {
  CliqueLossParams params;
  double operator()(const Moments& m) const {
    const double pairs = m.sum_p * m.sum_p - m.sum_p2;
    return params.gamma - (params.beta + 1.0) * m.edge_mass + 0.5 * params.beta * pairs;
  }
};

/// E[cut(S)].
struct CutObjective {
  double operator()(const Moments& m) const { return m.volume - 2.0 * m.edge_mass; }
};

/// −E[cut(S)]; decoding it from p = ½ gives a cut of at least half the edges.
struct NegatedCutObjective {
  double operator()(const Moments& m) const { return 2.0 * m.edge_mass - m.volume; }
};

/// Objectives multilinear in p, so conditioning on a node equals substitution.
using DecodeObjective = std::variant<CliquePenaltyObjective, CutObjective, NegatedCutObjective>;

inline double evaluate(const DecodeObjective& objective, const Moments& m) {
  return std::visit([&](const auto& f) { return f(m); }, objective);
}

/**
 * Working copy of p with cached neighbor sums s_i and global moments.
 * Fixing a node to 0 or 1 costs O(deg); querying the moments that would
 * result from fixing it costs O(1).
 */
class ConditionalState {
 public:
  ConditionalState(const Graph& g, const NodeDistribution& dist)
      : g_(g), p_(dist.probs().begin(), dist.probs().end()) {
    dist.require_matches(g);
    s_ = neighbor_sums(g, p_);
    m_ = recompute();
  }

  const Moments& moments() const { return m_; }
  double prob(NodeId i) const { return p_[i]; }
  std::span<const double> probs() const { return p_; }

  Moments moments_with(NodeId i, double x) const {
    const double delta = x - p_[i];
    Moments m = m_;
    m.edge_mass += delta * s_[i];
    m.sum_p += delta;
    m.sum_p2 += x * x - p_[i] * p_[i];
    m.volume += delta * g_.degree(i);
    return m;
  }

  void fix(NodeId i, double x) {
    const double delta = x - p_[i];
    m_ = moments_with(i, x);
    p_[i] = x;
    if (delta == 0.0) return;
    const auto row = g_.neighbors(i);
    const auto ws = g_.neighbor_weights(i);
    for (std::size_t k = 0; k < row.size(); ++k) s_[row[k]] += delta * ws[k];
  }

  /// Moments recomputed from scratch.
  Moments recompute() const {
    Moments m;
    for (NodeId i = 0; i < p_.size(); ++i) {
      m.sum_p += p_[i];
      m.sum_p2 += p_[i] * p_[i];
      m.volume += g_.degree(i) * p_[i];
      const auto row = g_.neighbors(i);
      const auto ws = g_.neighbor_weights(i);
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (row[k] > i) m.edge_mass += ws[k] * p_[i] * p_[row[k]];
      }
    }
    return m;
  }

 private:
  const Graph& g_;
  std::vector<double> p_;
  std::vector<double> s_;
  Moments m_;
};

enum class VisitOrder {
  /// Decreasing p, ties by ascending index.
  decreasing_probability,
  /// Ascending index.
  natural,
};

inline std::vector<NodeId> visit_order(const NodeDistribution& dist, VisitOrder order) {
  std::vector<NodeId> out(dist.size());
  std::iota(out.begin(), out.end(), NodeId{0});
  if (order == VisitOrder::decreasing_probability) {
    std::stable_sort(out.begin(), out.end(),
                     [&](NodeId a, NodeId b) { return dist[a] > dist[b]; });
  }
  return out;
}

struct DecodeTrace {
  std::vector<NodeId> visit_order;
  std::vector<std::uint8_t> decisions;
  double initial_expectation = 0.0;
  /// Conditional expectation after each decision.
  std::vector<double> expectation_path;
};

struct DecodeResult {
  NodeSet set;
  DecodeTrace trace;
};

/// Objective evaluated on the indicator vector of S.
inline double integral_value(const Graph& g, const DecodeObjective& objective, const NodeSet& s) {
  return evaluate(objective, ConditionalState(g, NodeDistribution::indicator(s)).moments());
}

/**
 * Method of conditional expectation. Nodes are visited in `order`; node i is
 * included iff fixing p_i = 1 gives a strictly smaller conditional
 * expectation than p_i = 0 (ties exclude). The expectation never increases,
 * so the decoded set's value is at most the objective at `dist`.
 */
inline DecodeResult decode_conditional(const Graph& g, const NodeDistribution& dist,
                                       const DecodeObjective& objective,
                                       VisitOrder order = VisitOrder::decreasing_probability) {
  ConditionalState state(g, dist);
  DecodeResult result{NodeSet(g), {}};
  DecodeTrace& trace = result.trace;
  trace.visit_order = visit_order(dist, order);
  trace.initial_expectation = evaluate(objective, state.moments());
  trace.decisions.reserve(g.num_nodes());
  trace.expectation_path.reserve(g.num_nodes());
  for (NodeId i : trace.visit_order) {
    const double with = evaluate(objective, state.moments_with(i, 1.0));
    const double without = evaluate(objective, state.moments_with(i, 0.0));
    const bool include = with < without;
    state.fix(i, include ? 1.0 : 0.0);
    if (include) result.set.insert(g, i);
    trace.decisions.push_back(include ? 1 : 0);
    trace.expectation_path.push_back(include ? with : without);
  }
  return result;
}

/// Side of a cut crossing at least half the total edge weight, decoded from
/// the uniform distribution p = ½ against −E[cut].
inline NodeSet decode_maxcut_half(const Graph& g) {
  return decode_conditional(g, NodeDistribution::constant(g.num_nodes(), 0.5),
                            NegatedCutObjective{}, VisitOrder::natural)
      .set;
}

/// Sweeps nodes by decreasing p and keeps each one adjacent to every node
/// kept so far. Always returns a clique.
inline NodeSet decode_clique_sweep(const Graph& g, const NodeDistribution& dist) {
  dist.require_matches(g);
  NodeSet clique(g);
  std::vector<std::size_t> links(g.num_nodes(), 0);
  for (NodeId v : visit_order(dist, VisitOrder::decreasing_probability)) {
    if (links[v] != clique.size()) continue;
    clique.insert(g, v);
    for (NodeId u : g.neighbors(v)) ++links[u];
  }
  return clique;
}

struct VolumeDecodeResult {
  NodeSet set;
  DecodeTrace trace;
  /// vol(S) >= v_l; the upper bound v_h always holds.
  bool reached_lower = false;
};

/**
 * Conditional-expectation decode of E[cut] with `seed` fixed inside S first.
 * Any inclusion that would push vol(S) above v_h is turned into an
 * exclusion, so the upper volume bound is hard and the lower one best-effort.
 */
inline VolumeDecodeResult decode_cut_with_volume(const Graph& g, const NodeDistribution& dist,
                                                 const VolumeConstraint& interval, NodeId seed,
                                                 VisitOrder order = VisitOrder::decreasing_probability) {
  dist.require_matches(g);
  if (seed >= g.num_nodes()) throw Error("seed node out of range");
  if (g.degree(seed) > interval.v_h) {
    throw Error("seed degree " + std::to_string(g.degree(seed)) + " exceeds v_h = " +
                std::to_string(interval.v_h));
  }
  const CutObjective objective;
  ConditionalState state(g, dist);
  VolumeDecodeResult result{NodeSet(g), {}, false};
  DecodeTrace& trace = result.trace;
  trace.initial_expectation = objective(state.moments());

  state.fix(seed, 1.0);
  result.set.insert(g, seed);
  trace.visit_order.push_back(seed);
  trace.decisions.push_back(1);
  trace.expectation_path.push_back(objective(state.moments()));

  for (NodeId i : visit_order(dist, order)) {
    if (i == seed) continue;
    const double with = objective(state.moments_with(i, 1.0));
    const double without = objective(state.moments_with(i, 0.0));
    const bool fits = result.set.volume() + g.degree(i) <= interval.v_h;
    const bool include = fits && with < without;
    state.fix(i, include ? 1.0 : 0.0);
    if (include) result.set.insert(g, i);
    trace.visit_order.push_back(i);
    trace.decisions.push_back(include ? 1 : 0);
    trace.expectation_path.push_back(include ? with : without);
  }
  result.reached_lower = result.set.volume() >= interval.v_l;
  return result;
}

/// Monte-Carlo decode: the lowest-valued of k draws, first wins ties.
inline NodeSet decode_best_of_k(const Graph& g, const NodeDistribution& dist,
                                const DecodeObjective& objective, std::size_t k, Rng& rng) {
  if (k < 1) throw Error("decode_best_of_k needs k >= 1");
  dist.require_matches(g);
  NodeSet best;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t draw = 0; draw < k; ++draw) {
    NodeSet s = sample(g, dist, rng);
    const double value = integral_value(g, objective, s);
    if (value < best_value) {
      best_value = value;
      best = std::move(s);
    }
  }
  return best;
}

/// Sampling decode for partitioning: every draw gets `seed` added, draws
/// above v_h are discarded, and the lowest conductance among draws inside
/// the interval wins (falling back to draws below v_l). Returns {seed} when
/// every draw is discarded.
inline NodeSet decode_partition_best_of_k(const Graph& g, const NodeDistribution& dist,
                                          const VolumeConstraint& interval, NodeId seed,
                                          std::size_t k, Rng& rng) {
  if (k < 1) throw Error("decode_partition_best_of_k needs k >= 1");
  if (seed >= g.num_nodes()) throw Error("seed node out of range");
  if (g.degree(seed) > interval.v_h) throw Error("seed degree exceeds v_h");
  NodeSet best = NodeSet::from_members(g, {seed});
  int best_rank = 2;  // 0: inside interval, 1: below v_l, 2: fallback
  double best_phi = std::numeric_limits<double>::infinity();
  for (std::size_t draw = 0; draw < k; ++draw) {
    NodeSet s = sample(g, dist, rng);
    s.insert(g, seed);
    if (s.volume() > interval.v_h) continue;
    const int rank = s.volume() >= interval.v_l ? 0 : 1;
    const double phi = s.volume() > 0.0 ? cut_weight(g, s) / s.volume() : 0.0;
    if (rank < best_rank || (rank == best_rank && phi < best_phi)) {
      best_rank = rank;
      best_phi = phi;
      best = std::move(s);
    }
  }
  return best;
}

}  // namespace probopt
