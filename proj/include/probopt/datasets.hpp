#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "probopt/error.hpp"
#include "probopt/graph.hpp"
#include "probopt/graph_io.hpp"
#include "probopt/random.hpp"

#include <json.hpp>

namespace probopt {

/// Erdős–Rényi G(n, p) with unit weights.
inline Graph gen_gnp(std::size_t n, double p_edge, Rng& rng) {
  if (!(p_edge >= 0.0 && p_edge <= 1.0)) throw Error("edge probability must lie in [0, 1]");
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      if (uniform01(rng) < p_edge) edges.push_back({i, j, 1.0});
    }
  }
  return Graph::from_edges(n, edges);
}

struct PlantedInstance {
  Graph graph;
  NodeSet planted;
};

/// G(n, p_background) with a clique planted on k uniformly chosen nodes.
inline PlantedInstance gen_planted_clique(std::size_t n, std::size_t k, double p_background, Rng& rng) {
  if (k > n) throw Error("planted clique size exceeds node count");
  if (!(p_background >= 0.0 && p_background <= 1.0)) throw Error("edge probability must lie in [0, 1]");
  std::vector<NodeId> nodes(n);
  std::iota(nodes.begin(), nodes.end(), NodeId{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(nodes[i], nodes[i + uniform_index(rng, n - i)]);
  std::vector<std::uint8_t> in_clique(n, 0);
  for (std::size_t i = 0; i < k; ++i) in_clique[nodes[i]] = 1;

  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      const bool background = uniform01(rng) < p_background;
      if (background || (in_clique[i] && in_clique[j])) edges.push_back({i, j, 1.0});
    }
  }
  Graph g = Graph::from_edges(n, edges);
  NodeSet planted = NodeSet::from_mask(g, in_clique);
  return {std::move(g), std::move(planted)};
}

enum class Split { train, validation, test };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "val";
    case Split::test: return "test";
  }
  return "?";
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val" || s == "validation") return Split::validation;
  if (s == "test") return Split::test;
  throw Error("unknown split label '" + s + "'");
}

struct Corpus {
  std::vector<Graph> graphs;
  std::vector<std::string> names;
  std::vector<Split> split;

  std::size_t size() const { return graphs.size(); }

  std::vector<Graph> subset(Split which) const {
    std::vector<Graph> out;
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      if (split[i] == which) out.push_back(graphs[i]);
    }
    return out;
  }
};

/**
 * Per-graph shuffled split. Counts are floor(fraction·n) with the remainder
 * handed out by largest fractional part (train first on ties).
 */
inline Corpus split_corpus(Corpus corpus, std::array<double, 3> fractions, Rng& rng) {
  if (corpus.graphs.empty()) throw Error("cannot split an empty corpus");
  const double total = fractions[0] + fractions[1] + fractions[2];
  for (double f : fractions) {
    if (!(f >= 0.0)) throw Error("split fractions must be non-negative");
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("split fractions must sum to 1");
  const std::size_t n = corpus.graphs.size();
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double exact = fractions[k] * static_cast<double>(n);
    counts[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[k] = exact - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  std::array<std::size_t, 3> by_remainder{0, 1, 2};
  std::stable_sort(by_remainder.begin(), by_remainder.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[by_remainder[k % 3]];

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t k = n; k > 1; --k) std::swap(perm[k - 1], perm[uniform_index(rng, k)]);
  corpus.split.assign(n, Split::train);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const Split s = pos < counts[0] ? Split::train
                    : pos < counts[0] + counts[1] ? Split::validation
                                                  : Split::test;
    corpus.split[perm[pos]] = s;
  }
  return corpus;
}

struct ManifestEntry {
  std::string name;
  std::string path;
  Split split = Split::train;
};

/// Corpus manifest: {"graphs": [{"name", "path", "split"}, ...]}; paths are
/// relative to the manifest's directory unless absolute.
inline std::vector<ManifestEntry> read_manifest(const std::string& manifest_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("manifest '" + manifest_path + "': " + e.what());
  }
  if (!j.contains("graphs") || !j["graphs"].is_array()) throw Error("manifest lacks a 'graphs' array");
  const auto base = std::filesystem::path(manifest_path).parent_path();
  std::vector<ManifestEntry> out;
  for (const auto& item : j["graphs"]) {
    ManifestEntry e;
    e.path = item.at("path").get<std::string>();
    e.name = item.value("name", e.path);
    e.split = parse_split(item.value("split", std::string("train")));
    if (std::filesystem::path(e.path).is_relative()) e.path = (base / e.path).string();
    out.push_back(std::move(e));
  }
  return out;
}

inline Corpus load_corpus(const std::string& manifest_path, const EdgeListOptions& options = {}) {
  Corpus c;
  for (const auto& e : read_manifest(manifest_path)) {
    c.graphs.push_back(read_graph_file(e.path, options));
    c.names.push_back(e.name);
    c.split.push_back(e.split);
  }
  return c;
}

inline void write_manifest(const std::string& manifest_path, const std::vector<ManifestEntry>& entries) {
  nlohmann::json j;
  j["graphs"] = nlohmann::json::array();
  for (const auto& e : entries) {
    j["graphs"].push_back({{"name", e.name}, {"path", e.path}, {"split", to_string(e.split)}});
  }
  write_text_file(manifest_path, j.dump(2) + "\n");
}

}  // namespace probopt
