#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "probopt/error.hpp"
#include "probopt/graph.hpp"

namespace probopt {

struct CliqueSearchOptions {
  /// Maximum number of search-tree nodes before BudgetExceeded is thrown.
  std::uint64_t node_limit = 50'000'000;
};

namespace detail {

class MaxWeightCliqueSearch {
 public:
  MaxWeightCliqueSearch(const Graph& g, std::uint64_t limit) : g_(g), limit_(limit) {}

  std::vector<NodeId> run() {
    std::vector<NodeId> all(g_.num_nodes());
    for (NodeId v = 0; v < all.size(); ++v) all[v] = v;
    extend(all, std::vector<double>(all.size(), 0.0));
    return best_;
  }

 private:
  static constexpr double kEps = 1e-12;

  bool improves(double w, std::size_t size) const {
    if (w > best_w_ + kEps) return true;
    return w >= best_w_ - kEps && size > best_.size();
  }

  // cand is ascending; conn[k] is the weight from cand[k] into current_.
  // Depth-first in ascending order visits sets lexicographically, so keeping
  // only strict improvements yields the lexicographically smallest optimum.
  void extend(const std::vector<NodeId>& cand, const std::vector<double>& conn) {
    if (++visited_ > limit_) throw BudgetExceeded("clique search exceeded node limit");
    if (improves(current_w_, current_.size())) {
      best_ = current_;
      best_w_ = current_w_;
    }
    std::vector<double> suffix(cand.size() + 1, 0.0);
    for (std::size_t k = cand.size(); k-- > 0;) suffix[k] = suffix[k + 1] + conn[k];

    std::vector<NodeId> next;
    std::vector<double> next_conn;
    for (std::size_t idx = 0; idx < cand.size(); ++idx) {
      // Weights are at most 1, so r more nodes add at most C(r, 2) internal weight.
      const double r = static_cast<double>(cand.size() - idx);
      const double bound = current_w_ + suffix[idx] + r * (r - 1.0) / 2.0;
      if (bound < best_w_ - kEps) break;
      if (bound <= best_w_ + kEps && current_.size() + (cand.size() - idx) <= best_.size()) break;

      const NodeId v = cand[idx];
      next.clear();
      next_conn.clear();
      const auto row = g_.neighbors(v);
      const auto ws = g_.neighbor_weights(v);
      std::size_t r_pos = 0;
      for (std::size_t k = idx + 1; k < cand.size(); ++k) {
        while (r_pos < row.size() && row[r_pos] < cand[k]) ++r_pos;
        if (r_pos < row.size() && row[r_pos] == cand[k]) {
          next.push_back(cand[k]);
          next_conn.push_back(conn[k] + ws[r_pos]);
        }
      }
      current_.push_back(v);
      current_w_ += conn[idx];
      extend(next, next_conn);
      current_w_ -= conn[idx];
      current_.pop_back();
    }
  }

  const Graph& g_;
  std::uint64_t limit_;
  std::uint64_t visited_ = 0;
  std::vector<NodeId> current_;
  double current_w_ = 0.0;
  std::vector<NodeId> best_;
  double best_w_ = -1.0;
};

}  // namespace detail

/**
 * Exact maximum-weight clique by branch and bound, for small graphs.
 *
 * Maximizes w(S), then |S|; remaining ties go to the lexicographically
 * smallest sorted member list. Throws BudgetExceeded past the node limit.
 */
inline NodeSet brute_force_max_clique(const Graph& g, const CliqueSearchOptions& options = {}) {
  detail::MaxWeightCliqueSearch search(g, options.node_limit);
  return NodeSet::from_members(g, search.run());
}

/// Largest n accepted by brute_force_expectation.
inline constexpr std::size_t kMaxEnumerationNodes = 20;

/// Exact E[objective(S)] for S drawn from the product distribution `p`, by
/// enumerating all 2^n subsets.
template <class Objective>
double brute_force_expectation(const Graph& g, std::span<const double> p, Objective&& objective) {
  const std::size_t n = g.num_nodes();
  if (n > kMaxEnumerationNodes) {
    throw Error("exhaustive expectation limited to " + std::to_string(kMaxEnumerationNodes) +
                " nodes, graph has " + std::to_string(n));
  }
  if (p.size() != n) throw Error("probability vector size does not match graph");
  double total = 0.0;
  std::vector<std::uint8_t> mask(n);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
    double prob = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      mask[i] = static_cast<std::uint8_t>((bits >> i) & 1u);
      prob *= mask[i] ? p[i] : 1.0 - p[i];
    }
    if (prob == 0.0) continue;
    total += prob * objective(NodeSet::from_mask(g, mask));
  }
  return total;
}

/// Set functions commonly passed to brute_force_expectation.
enum class SetObjective {
  set_weight,
  cut_weight,
  volume,
  clique_indicator,
  /// w̄(S): sum over unordered pairs in S of (1 - w_ij), non-edges counting 1.
  complement_weight,
};

inline double evaluate_set_objective(const Graph& g, const NodeSet& s, SetObjective which) {
  switch (which) {
    case SetObjective::set_weight:
      return set_weight(g, s);
    case SetObjective::cut_weight:
      return cut_weight(g, s);
    case SetObjective::volume:
      return volume(g, s);
    case SetObjective::clique_indicator:
      return is_clique(g, s) ? 1.0 : 0.0;
    case SetObjective::complement_weight: {
      const double k = static_cast<double>(s.size());
      return k * (k - 1.0) / 2.0 - set_weight(g, s);
    }
  }
  return 0.0;
}

inline double brute_force_expectation(const Graph& g, std::span<const double> p, SetObjective which) {
  return brute_force_expectation(g, p, [&](const NodeSet& s) {
    return evaluate_set_objective(g, s, which);
  });
}

}  // namespace probopt
