#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "probopt/error.hpp"
#include "probopt/graph.hpp"

namespace probopt {

enum class IndexBase { zero, one, detect };

struct EdgeListOptions {
  /// `detect` reads the ids as 1-based when no line mentions node 0.
  IndexBase base = IndexBase::zero;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::uint64_t parse_index(std::string_view field, std::size_t line) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(line, "expected a node index, got '" + std::string(field) + "'");
  }
  return value;
}

inline double parse_weight(std::string_view field, std::size_t line) {
  const std::string text(field);
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) {
    throw ParseError(line, "expected a weight, got '" + text + "'");
  }
  if (!(value > 0.0)) throw ParseError(line, "edge weight must be positive, got " + text);
  return value;
}

struct RawEdge {
  std::uint64_t u, v;
  double w;
  std::size_t line;
};

inline Graph build_checked(std::uint64_t declared_nodes, std::vector<RawEdge> raw, bool one_based) {
  std::uint64_t n = declared_nodes;
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (const RawEdge& e : raw) {
    if (one_based && (e.u == 0 || e.v == 0)) {
      throw ParseError(e.line, "node index 0 in 1-based input");
    }
    const std::uint64_t u = one_based ? e.u - 1 : e.u;
    const std::uint64_t v = one_based ? e.v - 1 : e.v;
    if (u == v) throw ParseError(e.line, "self-loop on node " + std::to_string(e.u));
    if (u > UINT32_MAX - 1 || v > UINT32_MAX - 1) throw ParseError(e.line, "node index too large");
    n = std::max<std::uint64_t>(n, std::max(u, v) + 1);
    edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v), e.w});
  }
  // Report duplicates with their line number before Graph sees them.
  std::vector<std::size_t> order(raw.size());
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](std::size_t k) {
    const Edge& e = edges[k];
    return std::pair(std::min(e.u, e.v), std::max(e.u, e.v));
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (key(order[k]) == key(order[k - 1])) {
      throw ParseError(raw[order[k]].line, "duplicate edge");
    }
  }
  return Graph::from_edges(static_cast<std::size_t>(n), edges);
}

}  // namespace detail

/**
 * Parses whitespace-separated `i j [w]` lines. Blank lines and lines starting
 * with `#` are skipped, except `# nodes N`, which fixes the node count so
 * isolated trailing nodes survive a round trip.
 */
inline Graph load_edge_list(std::string_view text, const EdgeListOptions& options = {}) {
  std::vector<detail::RawEdge> raw;
  std::uint64_t declared = 0;
  bool saw_zero = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    const auto fields = detail::split_fields(line);
    if (fields.empty()) continue;
    if (fields[0].front() == '#') {
      if (fields.size() == 3 && fields[0] == "#" && fields[1] == "nodes") {
        declared = detail::parse_index(fields[2], line_no);
      }
      continue;
    }
    if (fields.size() < 2 || fields.size() > 3) {
      throw ParseError(line_no, "expected 'i j [w]'");
    }
    detail::RawEdge e{detail::parse_index(fields[0], line_no),
                      detail::parse_index(fields[1], line_no), 1.0, line_no};
    if (fields.size() == 3) e.w = detail::parse_weight(fields[2], line_no);
    saw_zero = saw_zero || e.u == 0 || e.v == 0;
    raw.push_back(e);
  }
  const bool one_based = options.base == IndexBase::one ||
                         (options.base == IndexBase::detect && !saw_zero && !raw.empty());
  return detail::build_checked(declared, std::move(raw), one_based);
}

/// DIMACS clique format: `c` comments, one `p edge n m` header, `e i j [w]`
/// lines with 1-based ids.
inline Graph load_dimacs(std::string_view text) {
  std::vector<detail::RawEdge> raw;
  std::uint64_t declared = 0;
  bool header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    const auto fields = detail::split_fields(line);
    if (fields.empty() || fields[0] == "c") continue;
    if (fields[0] == "p") {
      if (header) throw ParseError(line_no, "second 'p' header");
      if (fields.size() != 4) throw ParseError(line_no, "expected 'p edge n m'");
      declared = detail::parse_index(fields[2], line_no);
      header = true;
    } else if (fields[0] == "e") {
      if (!header) throw ParseError(line_no, "edge before 'p' header");
      if (fields.size() < 3 || fields.size() > 4) throw ParseError(line_no, "expected 'e i j [w]'");
      detail::RawEdge e{detail::parse_index(fields[1], line_no),
                        detail::parse_index(fields[2], line_no), 1.0, line_no};
      if (fields.size() == 4) e.w = detail::parse_weight(fields[3], line_no);
      if (e.u > declared || e.v > declared) throw ParseError(line_no, "node index exceeds header count");
      raw.push_back(e);
    } else {
      throw ParseError(line_no, "unknown record '" + std::string(fields[0]) + "'");
    }
  }
  if (!header) throw ParseError(0, "missing 'p edge n m' header");
  return detail::build_checked(declared, std::move(raw), true);
}

inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

/// Canonical text form: node-count header then sorted 0-based `u v w` lines.
inline std::string to_edge_list_text(const Graph& g) {
  std::string out = "# nodes " + std::to_string(g.num_nodes()) + "\n";
  for (const Edge& e : g.edge_list()) {
    out += std::to_string(e.u) + " " + std::to_string(e.v) + " " + format_double(e.w) + "\n";
  }
  return out;
}

/// FNV-1a over the canonical text; identifies a graph inside reports.
inline std::string graph_fingerprint(const Graph& g) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_edge_list_text(g)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  for (int k = 15; k >= 0; --k) {
    buf[k] = "0123456789abcdef"[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << contents;
  if (!out) throw Error("write to '" + path + "' failed");
}

/// Chooses DIMACS for `.clq`/`.dimacs`/`.col` files, edge list otherwise.
inline Graph read_graph_file(const std::string& path, const EdgeListOptions& options = {}) {
  const std::string text = read_text_file(path);
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() &&
           path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".clq") || ends_with(".dimacs") || ends_with(".col")) return load_dimacs(text);
  return load_edge_list(text, options);
}

}  // namespace probopt
