#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <vector>

#include "probopt/distribution.hpp"
#include "probopt/graph.hpp"

namespace probopt {

inline constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();

/// BFS hop distance from `source`; kUnreached for other components.
inline std::vector<std::size_t> hop_distances(const Graph& g, NodeId source) {
  std::vector<std::size_t> dist(g.num_nodes(), kUnreached);
  if (source >= g.num_nodes()) throw Error("source node out of range");
  std::deque<NodeId> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const NodeId v = queue.front();
    queue.pop_front();
    for (NodeId u : g.neighbors(v)) {
      if (dist[u] == kUnreached) {
        dist[u] = dist[v] + 1;
        queue.push_back(u);
      }
    }
  }
  return dist;
}

/// Volume of the nodes within `hops` hops of `source`.
inline double ball_volume(const Graph& g, NodeId source, std::size_t hops) {
  const auto dist = hop_distances(g, source);
  double vol = 0.0;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (dist[v] <= hops) vol += g.degree(v);
  }
  return vol;
}

struct IntervalSchedule {
  std::size_t count = 8;
  /// Interval half-width as a fraction of its center.
  double relative_half_width = 0.25;
  std::size_t hops = 3;
};

/**
 * Volume intervals to scan around a seed: centers geometrically spaced over
 * [2·d_seed, min(vol(hops-ball), vol(V)/2)], each center c giving
 * [(1 − r)c, (1 + r)c]. Duplicate centers collapse to one interval.
 */
inline std::vector<VolumeConstraint> interval_schedule(const Graph& g, NodeId seed,
                                                       const IntervalSchedule& schedule = {}) {
  const double d_seed = g.degree(seed);
  if (!(d_seed > 0.0)) return {};
  const double lo = 2.0 * d_seed;
  const double hi = std::max(lo, std::min(ball_volume(g, seed, schedule.hops), 0.5 * g.total_volume()));
  const std::size_t count = std::max<std::size_t>(schedule.count, 1);
  std::vector<VolumeConstraint> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double frac = count == 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    const double center = lo * std::pow(hi / lo, frac);
    const VolumeConstraint iv{(1.0 - schedule.relative_half_width) * center,
                              (1.0 + schedule.relative_half_width) * center};
    if (out.empty() || iv.v_h > out.back().v_h * (1.0 + 1e-12)) out.push_back(iv);
  }
  return out;
}

}  // namespace probopt
