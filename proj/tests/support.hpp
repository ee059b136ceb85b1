#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "probopt/datasets.hpp"
#include "probopt/distribution.hpp"
#include "probopt/graph.hpp"
#include "probopt/random.hpp"

namespace probopt::testing {

inline Graph make_graph(std::size_t n, std::initializer_list<Edge> edges) {
  std::vector<Edge> e(edges);
  return Graph::from_edges(n, e);
}

inline Graph complete_graph(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) e.push_back({i, j, 1.0});
  }
  return Graph::from_edges(n, e);
}

inline Graph path_graph(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId i = 0; i + 1 < n; ++i) e.push_back({i, i + 1, 1.0});
  return Graph::from_edges(n, e);
}

inline Graph petersen() {
  std::vector<Edge> e;
  for (NodeId i = 0; i < 5; ++i) {
    e.push_back({i, static_cast<NodeId>((i + 1) % 5), 1.0});
    e.push_back({i, static_cast<NodeId>(i + 5), 1.0});
    e.push_back({static_cast<NodeId>(i + 5), static_cast<NodeId>(5 + (i + 2) % 5), 1.0});
  }
  return Graph::from_edges(10, e);
}

/// Triangles {0,1,2} and {3,4,5} joined by the edge 2-3.
inline Graph two_triangles() {
  return make_graph(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {2, 3}});
}

/// G(n, p) with optional random weights in (0, 1].
inline Graph random_graph(std::size_t n, double p_edge, Rng& rng, bool weighted = false) {
  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      if (uniform01(rng) < p_edge) e.push_back({i, j, weighted ? 0.05 + 0.95 * uniform01(rng) : 1.0});
    }
  }
  return Graph::from_edges(n, e);
}

inline NodeDistribution random_distribution(std::size_t n, Rng& rng) {
  std::vector<double> p(n);
  for (double& x : p) x = uniform01(rng);
  return NodeDistribution(std::move(p));
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace probopt::testing
