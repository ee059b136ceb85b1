#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "probopt/error.hpp"
#include "probopt/graph.hpp"
#include "probopt/random.hpp"

namespace probopt {

/// Bernoulli product distribution over node sets: node i is included
/// independently with probability p_i.
class NodeDistribution {
 public:
  NodeDistribution() = default;

  explicit NodeDistribution(std::vector<double> probs) : p_(std::move(probs)) {
    for (std::size_t i = 0; i < p_.size(); ++i) {
      if (!(p_[i] >= 0.0 && p_[i] <= 1.0)) {
        throw Error("probability p_" + std::to_string(i) + " = " + std::to_string(p_[i]) +
                    " outside [0, 1]");
      }
    }
  }

  static NodeDistribution constant(std::size_t n, double value) {
    return NodeDistribution(std::vector<double>(n, value));
  }

  /// Indicator distribution of a node set.
  static NodeDistribution indicator(const NodeSet& s) {
    std::vector<double> p(s.universe_size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = s.contains(static_cast<NodeId>(i)) ? 1.0 : 0.0;
    return NodeDistribution(std::move(p));
  }

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> probs() const { return p_; }
  const std::vector<double>& vector() const { return p_; }

  void require_matches(const Graph& g) const {
    if (p_.size() != g.num_nodes()) {
      throw Error("distribution has " + std::to_string(p_.size()) + " entries, graph has " +
                  std::to_string(g.num_nodes()) + " nodes");
    }
  }

 private:
  std::vector<double> p_;
};

/// Penalty weight beta and objective offset gamma of the clique loss.
struct CliqueLossParams {
  double beta = 1.0;
  double gamma = 1.0;

  /// gamma = beta = total edge weight, the cheapest upper bound on max w(S).
  static CliqueLossParams defaults_for(const Graph& g) {
    const double w = g.total_edge_weight() > 0.0 ? g.total_edge_weight() : 1.0;
    return {w, w};
  }

  void validate() const {
    if (!(gamma > 0.0) || !(beta >= gamma) || !std::isfinite(beta)) {
      throw Error("clique loss requires 0 < gamma <= beta (gamma=" + std::to_string(gamma) +
                  ", beta=" + std::to_string(beta) + ")");
    }
  }
};

/// Volume interval [v_l, v_h]; the rescaling target is its midpoint.
struct VolumeConstraint {
  double v_l = 0.0;
  double v_h = 0.0;

  double target() const { return 0.5 * (v_l + v_h); }
  bool contains(double vol) const { return vol >= v_l && vol <= v_h; }

  void validate() const {
    if (!(v_l >= 0.0) || !(v_l < v_h) || !std::isfinite(v_h)) {
      throw Error("volume interval requires 0 <= v_l < v_h (got [" + std::to_string(v_l) + ", " +
                  std::to_string(v_h) + "])");
    }
  }
};

/// Loss value, its gradient with respect to p, and the named terms it was
/// assembled from.
struct LossReport {
  double value = 0.0;
  std::vector<double> gradient;
  std::map<std::string, double> terms;
};

/// s_i = sum over neighbors j of w_ij p_j.
inline std::vector<double> neighbor_sums(const Graph& g, std::span<const double> p) {
  std::vector<double> s(g.num_nodes(), 0.0);
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const auto row = g.neighbors(i);
    const auto ws = g.neighbor_weights(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) acc += ws[k] * p[row[k]];
    s[i] = acc;
  }
  return s;
}

/// E[w(S)] = sum over edges of w_ij p_i p_j.
inline double expected_set_weight(const Graph& g, const NodeDistribution& dist) {
  dist.require_matches(g);
  const auto p = dist.probs();
  double total = 0.0;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const auto row = g.neighbors(i);
    const auto ws = g.neighbor_weights(i);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] > i) total += ws[k] * p[i] * p[row[k]];
    }
  }
  return total;
}

/// Sum over ordered pairs i != j of p_i p_j, as (sum p)^2 - sum p^2.
inline double ordered_pair_mass(const NodeDistribution& dist) {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double x : dist.probs()) {
    sum += x;
    sum_sq += x * x;
  }
  return sum * sum - sum_sq;
}

/// Markov upper bound on P(S is not a clique): E[w̄(S)] = ½ Σ_{i≠j} p_i p_j − E[w(S)].
inline double clique_violation_bound(const Graph& g, const NodeDistribution& dist) {
  return 0.5 * ordered_pair_mass(dist) - expected_set_weight(g, dist);
}

/**
 * Probabilistic penalty loss for maximum clique,
 *   γ − (β+1) Σ_E w_ij p_i p_j + (β/2) Σ_{i≠j} p_i p_j,
 * which upper-bounds E[γ − w(S)] + β·P(S not a clique) whenever w_ij ≤ 1.
 */
inline LossReport clique_loss(const Graph& g, const NodeDistribution& dist,
                              const CliqueLossParams& params) {
  params.validate();
  dist.require_matches(g);
  const auto p = dist.probs();
  const auto s = neighbor_sums(g, p);
  double sum = 0.0;
  double sum_sq = 0.0;
  double edge_mass = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sum += p[i];
    sum_sq += p[i] * p[i];
    edge_mass += p[i] * s[i];
  }
  edge_mass *= 0.5;
  const double pairs = sum * sum - sum_sq;
  const double beta = params.beta;

  LossReport report;
  report.value = params.gamma - (beta + 1.0) * edge_mass + 0.5 * beta * pairs;
  report.gradient.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    report.gradient[i] = -(beta + 1.0) * s[i] + beta * (sum - p[i]);
  }
  report.terms = {{"expected_weight", edge_mass},
                  {"violation_bound", 0.5 * pairs - edge_mass},
                  {"ordered_pair_mass", pairs},
                  {"gamma", params.gamma},
                  {"beta", beta}};
  return report;
}

/// γ − E[w] + β·violation_bound: the clique loss rebuilt from its terms.
inline double clique_loss_from_terms(const LossReport& report) {
  const auto& t = report.terms;
  return t.at("gamma") - t.at("expected_weight") + t.at("beta") * t.at("violation_bound");
}

/// E[vol(S)] = Σ d_i p_i.
inline double expected_volume(const Graph& g, const NodeDistribution& dist) {
  dist.require_matches(g);
  double total = 0.0;
  for (NodeId i = 0; i < g.num_nodes(); ++i) total += g.degree(i) * dist[i];
  return total;
}

/// E[cut(S)] = Σ d_i p_i − 2 Σ_E w_ij p_i p_j.
inline double expected_cut(const Graph& g, const NodeDistribution& dist) {
  return expected_volume(g, dist) - 2.0 * expected_set_weight(g, dist);
}

/// Expected cut with gradient d_i − 2 s_i.
inline LossReport cut_loss(const Graph& g, const NodeDistribution& dist) {
  dist.require_matches(g);
  const auto p = dist.probs();
  const auto s = neighbor_sums(g, p);
  double vol = 0.0;
  double edge_mass = 0.0;
  LossReport report;
  report.gradient.resize(p.size());
  for (NodeId i = 0; i < p.size(); ++i) {
    vol += g.degree(i) * p[i];
    edge_mass += p[i] * s[i];
    report.gradient[i] = g.degree(i) - 2.0 * s[i];
  }
  edge_mass *= 0.5;
  report.value = vol - 2.0 * edge_mass;
  report.terms = {{"expected_cut", report.value},
                  {"expected_volume", vol},
                  {"expected_weight", edge_mass}};
  return report;
}

// Box-constraint rescaling ---------------------------------------------------

struct RescaleResult {
  NodeDistribution dist;
  std::size_t iterations = 0;
  /// Σ a_i p_i hit b within tolerance.
  bool reached_target = false;
};

/// Iterates of the rescaling recursion, for inspection in tests.
struct RescaleTrace {
  std::vector<std::vector<double>> iterates;
};

inline constexpr double kRescaleTolerance = 1e-9;

/**
 * Finds p_i = clamp(c p0_i, 0, 1) with Σ a_i p_i = b by the saturating
 * recursion c = (b − Σ_Q a_i) / Σ_{V∖Q} a_i p_i, where Q is the set of nodes
 * already at 1. The first step scales every node (Q starts empty), so a
 * distribution with entries at 1 can also shrink. Each later step saturates at
 * least one more node or stops, giving at most n steps. When Σ a_i over the
 * support of p0 is at most b the result saturates that support and
 * `reached_target` reports whether the target was still met.
 */
inline RescaleResult rescale_to_target(const NodeDistribution& p0, std::span<const double> a,
                                       double b, RescaleTrace* trace = nullptr) {
  const std::size_t n = p0.size();
  if (a.size() != n) throw Error("rescaling weights do not match distribution size");
  if (!(b > 0.0) || !std::isfinite(b)) throw Error("rescaling target must be positive");
  for (double ai : a) {
    if (!(ai >= 0.0) || !std::isfinite(ai)) throw Error("rescaling weights must be non-negative");
  }
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) mass += a[i] * p0[i];
  if (!(mass > 0.0)) {
    throw Error("cannot rescale: Σ a_i p_i is zero, no positive scaling reaches the target");
  }

  std::vector<double> p(p0.probs().begin(), p0.probs().end());
  std::vector<std::uint8_t> saturated(n, 0);
  double saturated_mass = 0.0;
  std::size_t steps = 0;
  while (steps < n + 1) {
    double free_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!saturated[i]) free_mass += a[i] * p[i];
    }
    if (!(free_mass > 0.0)) break;
    const double c = (b - saturated_mass) / free_mass;
    ++steps;
    bool grew = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (saturated[i]) continue;
      const double scaled = c * p[i];
      if (scaled >= 1.0) {
        p[i] = 1.0;
        saturated[i] = 1;
        saturated_mass += a[i];
        grew = true;
      } else {
        p[i] = scaled;
      }
    }
    if (trace) trace->iterates.push_back(p);
    if (!grew) break;
  }

  double achieved = 0.0;
  for (std::size_t i = 0; i < n; ++i) achieved += a[i] * p[i];
  RescaleResult result{NodeDistribution(std::move(p)), steps, false};
  result.reached_target = std::abs(achieved - b) <= kRescaleTolerance * b;
  return result;
}

// Sampling ----------------------------------------------------------------

/// One draw as a 0/1 membership vector.
inline std::vector<std::uint8_t> sample_mask(const NodeDistribution& dist, Rng& rng) {
  std::vector<std::uint8_t> mask(dist.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = uniform01(rng) < dist[i] ? 1 : 0;
  return mask;
}

inline NodeSet sample(const Graph& g, const NodeDistribution& dist, Rng& rng) {
  dist.require_matches(g);
  return NodeSet::from_mask(g, sample_mask(dist, rng));
}

}  // namespace probopt
