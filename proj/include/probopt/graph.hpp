#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "probopt/error.hpp"

namespace probopt {

using NodeId = std::uint32_t;

struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  double w = 1.0;
};

/**
 * Immutable weighted undirected graph in compressed adjacency form.
 *
 * Every undirected edge is stored once per direction, rows sorted by
 * neighbor id. Weights lie in (0, 1]: zero-weight edges are dropped on
 * construction and, when any weight exceeds one, all weights are divided by
 * the maximum. The weighted degree d_i is the row sum of weights.
 */
class Graph {
 public:
  Graph() : offsets_(1, 0) {}

  /// Validates and builds. Throws on out-of-range ids, self-loops,
  /// duplicate edges, and negative or non-finite weights.
  static Graph from_edges(std::size_t num_nodes, std::span<const Edge> edges) {
    std::vector<Edge> kept;
    kept.reserve(edges.size());
    double max_w = 0.0;
    for (const Edge& e : edges) {
      if (e.u >= num_nodes || e.v >= num_nodes) {
        throw Error("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                    ") references a node outside [0, " + std::to_string(num_nodes) + ")");
      }
      if (e.u == e.v) throw Error("self-loop on node " + std::to_string(e.u));
      if (!std::isfinite(e.w) || e.w < 0.0) {
        throw Error("invalid weight " + std::to_string(e.w) + " on edge (" +
                    std::to_string(e.u) + ", " + std::to_string(e.v) + ")");
      }
      if (e.w == 0.0) continue;
      kept.push_back(e.u < e.v ? e : Edge{e.v, e.u, e.w});
      max_w = std::max(max_w, e.w);
    }
    std::sort(kept.begin(), kept.end(), [](const Edge& a, const Edge& b) {
      return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    for (std::size_t k = 1; k < kept.size(); ++k) {
      if (kept[k].u == kept[k - 1].u && kept[k].v == kept[k - 1].v) {
        throw Error("duplicate edge (" + std::to_string(kept[k].u) + ", " +
                    std::to_string(kept[k].v) + ")");
      }
    }

    Graph g;
    g.rescaled_ = max_w > 1.0;
    if (g.rescaled_) {
      for (Edge& e : kept) e.w /= max_w;
    }
    g.offsets_.assign(num_nodes + 1, 0);
    for (const Edge& e : kept) {
      ++g.offsets_[e.u + 1];
      ++g.offsets_[e.v + 1];
    }
    std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());
    g.neighbors_.resize(2 * kept.size());
    g.weights_.resize(2 * kept.size());
    std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
    // kept is sorted by (u, v) with u < v: the first pass fills each row with
    // its smaller neighbors in order, the second with its larger ones.
    for (const Edge& e : kept) {
      g.neighbors_[fill[e.v]] = e.u;
      g.weights_[fill[e.v]++] = e.w;
    }
    for (const Edge& e : kept) {
      g.neighbors_[fill[e.u]] = e.v;
      g.weights_[fill[e.u]++] = e.w;
    }
    g.degree_.assign(num_nodes, 0.0);
    g.total_weight_ = 0.0;
    for (std::size_t i = 0; i < num_nodes; ++i) {
      double d = 0.0;
      for (std::size_t k = g.offsets_[i]; k < g.offsets_[i + 1]; ++k) d += g.weights_[k];
      g.degree_[i] = d;
    }
    for (const Edge& e : kept) g.total_weight_ += e.w;
    return g;
  }

  std::size_t num_nodes() const { return offsets_.size() - 1; }
  std::size_t num_edges() const { return neighbors_.size() / 2; }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {neighbors_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<const double> neighbor_weights(NodeId i) const {
    return {weights_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::size_t neighbor_count(NodeId i) const { return offsets_[i + 1] - offsets_[i]; }

  double degree(NodeId i) const { return degree_[i]; }
  std::span<const double> degrees() const { return degree_; }
  double max_degree() const {
    return degree_.empty() ? 0.0 : *std::max_element(degree_.begin(), degree_.end());
  }

  /// Sum of w_ij over undirected edges.
  double total_edge_weight() const { return total_weight_; }
  /// vol(V) = sum of weighted degrees = twice the total edge weight.
  double total_volume() const {
    return std::accumulate(degree_.begin(), degree_.end(), 0.0);
  }

  /// True when the input weights were divided by their maximum.
  bool rescaled() const { return rescaled_; }

  double edge_weight(NodeId i, NodeId j) const {
    const auto row = neighbors(i);
    const auto it = std::lower_bound(row.begin(), row.end(), j);
    if (it == row.end() || *it != j) return 0.0;
    return weights_[offsets_[i] + static_cast<std::size_t>(it - row.begin())];
  }
  bool has_edge(NodeId i, NodeId j) const { return edge_weight(i, j) > 0.0; }

  /// Canonical edge list: u < v, sorted lexicographically.
  std::vector<Edge> edge_list() const {
    std::vector<Edge> out;
    out.reserve(num_edges());
    for (NodeId i = 0; i < num_nodes(); ++i) {
      const auto row = neighbors(i);
      const auto ws = neighbor_weights(i);
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (row[k] > i) out.push_back({i, row[k], ws[k]});
      }
    }
    return out;
  }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> neighbors_;
  std::vector<double> weights_;
  std::vector<double> degree_;
  double total_weight_ = 0.0;
  bool rescaled_ = false;
};

/// Subset of a graph's nodes with cached size and volume.
class NodeSet {
 public:
  NodeSet() = default;
  explicit NodeSet(const Graph& g) : mask_(g.num_nodes(), 0) {}

  static NodeSet from_members(const Graph& g, std::span<const NodeId> members) {
    NodeSet s(g);
    for (NodeId v : members) s.insert(g, v);
    return s;
  }
  static NodeSet from_members(const Graph& g, std::initializer_list<NodeId> members) {
    return from_members(g, std::span<const NodeId>(members.begin(), members.size()));
  }
  static NodeSet from_mask(const Graph& g, std::span<const std::uint8_t> mask) {
    if (mask.size() != g.num_nodes()) throw Error("node mask size does not match graph");
    NodeSet s(g);
    for (NodeId v = 0; v < mask.size(); ++v) {
      if (mask[v]) s.insert(g, v);
    }
    return s;
  }

  bool contains(NodeId v) const { return v < mask_.size() && mask_[v] != 0; }

  void insert(const Graph& g, NodeId v) {
    if (v >= mask_.size()) throw Error("node " + std::to_string(v) + " out of range");
    if (mask_[v]) return;
    mask_[v] = 1;
    ++size_;
    volume_ += g.degree(v);
  }
  void erase(const Graph& g, NodeId v) {
    if (!contains(v)) return;
    mask_[v] = 0;
    --size_;
    volume_ -= g.degree(v);
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  double volume() const { return volume_; }
  std::size_t universe_size() const { return mask_.size(); }
  std::span<const std::uint8_t> mask() const { return mask_; }

  std::vector<NodeId> members() const {
    std::vector<NodeId> out;
    out.reserve(size_);
    for (NodeId v = 0; v < mask_.size(); ++v) {
      if (mask_[v]) out.push_back(v);
    }
    return out;
  }

  friend bool operator==(const NodeSet& a, const NodeSet& b) { return a.mask_ == b.mask_; }

 private:
  std::vector<std::uint8_t> mask_;
  std::size_t size_ = 0;
  double volume_ = 0.0;
};

// Exact set functions -------------------------------------------------------

/// w(S): total weight of edges with both endpoints in S.
inline double set_weight(const Graph& g, const NodeSet& s) {
  double total = 0.0;
  for (NodeId i : s.members()) {
    const auto row = g.neighbors(i);
    const auto ws = g.neighbor_weights(i);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] > i && s.contains(row[k])) total += ws[k];
    }
  }
  return total;
}

/// cut(S): total weight of edges with exactly one endpoint in S.
inline double cut_weight(const Graph& g, const NodeSet& s) {
  double total = 0.0;
  for (NodeId i : s.members()) {
    const auto row = g.neighbors(i);
    const auto ws = g.neighbor_weights(i);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (!s.contains(row[k])) total += ws[k];
    }
  }
  return total;
}

/// vol(S), recomputed from the graph rather than the set's cache.
inline double volume(const Graph& g, const NodeSet& s) {
  double total = 0.0;
  for (NodeId i : s.members()) total += g.degree(i);
  return total;
}

inline bool is_clique(const Graph& g, const NodeSet& s) {
  if (s.size() <= 1) return true;
  for (NodeId i : s.members()) {
    std::size_t inside = 0;
    for (NodeId j : g.neighbors(i)) inside += s.contains(j) ? 1 : 0;
    if (inside + 1 != s.size()) return false;
  }
  return true;
}

/// phi(S) = cut(S) / vol(S).
inline double conductance(const Graph& g, const NodeSet& s) {
  if (s.empty()) throw Error("conductance of the empty set is undefined");
  const double vol = volume(g, s);
  if (!(vol > 0.0)) throw Error("conductance undefined for a set of zero volume");
  return cut_weight(g, s) / vol;
}

/// Complement of S within the graph's node set.
inline NodeSet complement(const Graph& g, const NodeSet& s) {
  NodeSet out(g);
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (!s.contains(v)) out.insert(g, v);
  }
  return out;
}

}  // namespace probopt
