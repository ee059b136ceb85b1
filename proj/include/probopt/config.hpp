#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probopt/error.hpp"
#include "probopt/graph_io.hpp"

namespace probopt {

enum class KeyType { text, real, count, flag, choice };

struct KeySpec {
  std::string_view name;
  KeyType type;
  std::string_view default_value;  // empty: unset
  std::string_view help;
  std::string_view choices = {};   // '|'-separated, KeyType::choice only
  /// False for keys that only steer I/O or scheduling and must not change results.
  bool affects_result = true;
};

// clang-format off
inline constexpr KeySpec kConfigKeys[] = {
  {"problem",        KeyType::choice, "clique",      "clique or partition", "clique|partition"},
  {"producer",       KeyType::choice, "direct",      "distribution producer", "direct|mpnn|uniform"},
  {"decode",         KeyType::choice, "conditional", "decoder", "conditional|sweep|sampled"},
  {"order",          KeyType::choice, "probability", "conditional decode visit order", "probability|natural"},
  {"beta",           KeyType::real,   "",            "penalty weight (default: total edge weight)"},
  {"gamma",          KeyType::real,   "",            "clique loss offset (default: beta)"},
  {"t",              KeyType::real,   "0.9",         "certificate confidence in [0, 1)"},
  {"v_l",            KeyType::real,   "",            "lower volume bound (with v_h replaces the schedule)"},
  {"v_h",            KeyType::real,   "",            "upper volume bound"},
  {"intervals",      KeyType::count,  "8",           "volume intervals in the schedule"},
  {"interval_width", KeyType::real,   "0.25",        "interval half-width relative to its center"},
  {"hops",           KeyType::count,  "3",           "receptive field radius around the seed node"},
  {"seed_node",      KeyType::count,  "0",           "partition seed node"},
  {"restarts",       KeyType::count,  "10",          "restarts (per interval for partitioning)"},
  {"budget",         KeyType::real,   "",            "wall-clock budget in seconds instead of a restart count"},
  {"steps",          KeyType::count,  "300",         "direct optimization steps"},
  {"lr",             KeyType::real,   "",            "Adam learning rate (default 0.01 direct, 0.001 training)"},
  {"seed_logit",     KeyType::real,   "2",           "initial logit of the restart seed node"},
  {"extend",         KeyType::flag,   "true",        "grow decoded cliques to maximal ones"},
  {"samples",        KeyType::count,  "32",          "draws for the sampled decoder"},
  {"seed",           KeyType::count,  "0",           "random seed"},
  {"graph",          KeyType::text,   "",            "graph file (edge list, or DIMACS for .clq/.dimacs/.col)"},
  {"index_base",     KeyType::choice, "zero",        "edge-list node numbering", "zero|one|detect"},
  {"manifest",       KeyType::text,   "",            "corpus manifest (JSON)"},
  {"split",          KeyType::choice, "all",         "corpus split to benchmark", "all|train|val|test"},
  {"checkpoint",     KeyType::text,   "",            "model checkpoint path"},
  {"checkpoint_format", KeyType::choice, "json",     "checkpoint encoding", "json|binary"},
  {"layers",         KeyType::count,  "3",           "message-passing rounds"},
  {"hidden",         KeyType::count,  "16",          "hidden width"},
  {"epochs",         KeyType::count,  "20",          "training epochs"},
  {"batch_size",     KeyType::count,  "8",           "graphs per optimizer step"},
  {"train_loss",     KeyType::choice, "clique",      "training loss", "clique|cut"},
  {"generator",      KeyType::choice, "planted",     "instance family", "planted|gnp"},
  {"n",              KeyType::count,  "50",          "nodes per generated graph"},
  {"k",              KeyType::count,  "10",          "planted clique size"},
  {"p",              KeyType::real,   "0.3",         "edge probability"},
  {"count",          KeyType::count,  "20",          "graphs to generate"},
  {"fractions",      KeyType::text,   "0.6,0.2,0.2", "train,val,test split fractions"},
  {"oracle_limit",   KeyType::count,  "60",          "largest graph the exact oracle may run on"},
  {"no_oracle",      KeyType::flag,   "false",       "skip the oracle and report raw objectives"},
  {"compare",        KeyType::flag,   "false",       "also run the uniform-random producer"},
  {"strict",         KeyType::flag,   "false",       "exit 2 when the constraint or certificate check fails"},
  {"resume",         KeyType::flag,   "false",       "continue training from the checkpoint"},
  {"out",            KeyType::text,   "",            "output path (stdout when empty)", {}, false},
  {"trace_out",      KeyType::text,   "",            "decode trace output path", {}, false},
  {"threads",        KeyType::count,  "1",           "worker threads", {}, false},
  {"timing",         KeyType::flag,   "true",        "include wall-clock fields in reports", {}, false},
  {"result",         KeyType::text,   "",            "solve report to verify", {}, false},
};
// clang-format on

inline const KeySpec* find_key(std::string_view name) {
  for (const KeySpec& k : kConfigKeys) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

namespace detail {
inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_real(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<std::uint64_t> parse_count(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<bool> parse_flag(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  return std::nullopt;
}

inline bool choice_allowed(std::string_view choices, std::string_view value) {
  while (!choices.empty()) {
    const auto bar = choices.find('|');
    if (choices.substr(0, bar) == value) return true;
    if (bar == std::string_view::npos) break;
    choices.remove_prefix(bar + 1);
  }
  return false;
}
}  // namespace detail

/**
 * Flat key=value run configuration. Every key has a default (possibly
 * "unset"); values are validated on assignment and kept as text so the
 * report can echo them exactly as given.
 */
class RunConfig {
 public:
  RunConfig() {
    for (const KeySpec& k : kConfigKeys) values_[std::string(k.name)] = std::string(k.default_value);
  }

  /// Throws Error for unknown keys or values that do not parse as the key's type.
  void set(std::string_view key, std::string_view value) {
    const KeySpec* spec = find_key(key);
    if (!spec) throw Error("unknown config key '" + std::string(key) + "'");
    value = detail::trim(value);
    if (!value.empty()) {
      bool ok = true;
      switch (spec->type) {
        case KeyType::text: break;
        case KeyType::real: ok = detail::parse_real(value).has_value(); break;
        case KeyType::count: ok = detail::parse_count(value).has_value(); break;
        case KeyType::flag: ok = detail::parse_flag(value).has_value(); break;
        case KeyType::choice: ok = detail::choice_allowed(spec->choices, value); break;
      }
      if (!ok) {
        std::string msg = "invalid value '" + std::string(value) + "' for " + std::string(key);
        if (spec->type == KeyType::choice) msg += " (expected " + std::string(spec->choices) + ")";
        throw Error(msg);
      }
    }
    values_[std::string(key)] = std::string(value);
  }

  /// Parses `key = value` lines; '#' starts a comment.
  void load_text(std::string_view text) {
    std::size_t line_no = 0;
    while (!text.empty()) {
      ++line_no;
      const auto nl = text.find('\n');
      std::string_view line = text.substr(0, nl);
      text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
      try {
        set(detail::trim(line.substr(0, eq)), line.substr(eq + 1));
      } catch (const ParseError&) {
        throw;
      } catch (const Error& e) {
        throw ParseError(line_no, e.what());
      }
    }
  }

  void load_file(const std::string& path) { load_text(read_text_file(path)); }

  const std::string& text(std::string_view key) const {
    const auto it = values_.find(std::string(key));
    if (it == values_.end()) throw Error("unknown config key '" + std::string(key) + "'");
    return it->second;
  }
  bool has(std::string_view key) const { return !text(key).empty(); }

  std::optional<double> real(std::string_view key) const {
    if (!has(key)) return std::nullopt;
    return detail::parse_real(text(key));
  }
  double real_or(std::string_view key, double fallback) const { return real(key).value_or(fallback); }

  std::uint64_t count(std::string_view key) const {
    if (!has(key)) throw Error("config key '" + std::string(key) + "' is not set");
    return *detail::parse_count(text(key));
  }

  bool flag(std::string_view key) const { return has(key) && *detail::parse_flag(text(key)); }

  /// Keys in table order with their current text, split by whether they affect results.
  std::vector<std::pair<std::string, std::string>> entries(bool result_keys) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const KeySpec& k : kConfigKeys) {
      if (k.affects_result == result_keys) out.emplace_back(std::string(k.name), text(k.name));
    }
    return out;
  }

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

/// Splits "a,b,c" into three fractions.
inline std::array<double, 3> parse_fractions(std::string_view s) {
  std::array<double, 3> out{};
  for (std::size_t k = 0; k < 3; ++k) {
    const auto comma = s.find(',');
    if ((k < 2) == (comma == std::string_view::npos)) throw Error("fractions must be three comma-separated numbers");
    const auto v = detail::parse_real(detail::trim(s.substr(0, comma)));
    if (!v || *v < 0.0) throw Error("invalid split fraction");
    out[k] = *v;
    s = comma == std::string_view::npos ? std::string_view{} : s.substr(comma + 1);
  }
  return out;
}

}  // namespace probopt
