#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "probopt/certificates.hpp"
#include "probopt/derandomize.hpp"
#include "probopt/distribution.hpp"
#include "probopt/graph.hpp"
#include "probopt/graph_io.hpp"
#include "probopt/mpnn.hpp"
#include "probopt/solver.hpp"

#include <json.hpp>

namespace probopt {

using Json = nlohmann::ordered_json;

inline Json to_json(const LossReport& r) {
  Json terms = Json::object();
  for (const auto& [name, value] : r.terms) terms[name] = value;
  return {{"value", r.value}, {"gradient", r.gradient}, {"terms", terms}};
}

inline Json to_json(const Certificate& c) {
  Json j{{"kind", to_string(c.kind)},
         {"problem", to_string(c.problem)},
         {"t", c.t},
         {"loss", c.loss},
         {"bound", c.bound},
         {"hoeffding_term", c.hoeffding_term},
         {"success_prob", c.success_prob},
         {"vacuous", c.vacuous}};
  if (c.kind == CertificateKind::penalty) {
    j["beta"] = c.beta;
    j["gamma"] = c.gamma;
  }
  if (c.kind == CertificateKind::box_constrained) {
    j["v_l"] = c.v_l;
    j["v_h"] = c.v_h;
  }
  return j;
}

inline Certificate certificate_from_json(const Json& j) {
  Certificate c;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "markov") c.kind = CertificateKind::markov;
  else if (kind == "penalty") c.kind = CertificateKind::penalty;
  else if (kind == "box_constrained") c.kind = CertificateKind::box_constrained;
  else throw Error("unknown certificate kind '" + kind + "'");
  const std::string problem = j.value("problem", std::string("generic"));
  if (problem == "clique") c.problem = ProblemKind::clique;
  else if (problem == "partition") c.problem = ProblemKind::partition;
  else c.problem = ProblemKind::generic;
  c.t = j.at("t").get<double>();
  c.loss = j.at("loss").get<double>();
  c.bound = j.at("bound").get<double>();
  c.hoeffding_term = j.value("hoeffding_term", 0.0);
  c.success_prob = j.at("success_prob").get<double>();
  c.vacuous = j.at("vacuous").get<bool>();
  c.beta = j.value("beta", 0.0);
  c.gamma = j.value("gamma", 0.0);
  c.v_l = j.value("v_l", 0.0);
  c.v_h = j.value("v_h", 0.0);
  return c;
}

inline Json to_json(const DecodeTrace& t) {
  return {{"visit_order", t.visit_order},
          {"decisions", t.decisions},
          {"initial_expectation", t.initial_expectation},
          {"expectation_path", t.expectation_path}};
}

inline Json graph_summary(const Graph& g) {
  return {{"nodes", g.num_nodes()}, {"edges", g.num_edges()}, {"fingerprint", graph_fingerprint(g)}};
}

/// Deterministic part of a solve result; timing lives elsewhere.
inline Json to_json(const Graph& g, const SolveResult& r) {
  Json j{{"problem", to_string(r.problem)},
         {"producer", to_string(r.producer)},
         {"decode", to_string(r.decode)},
         {"graph", graph_summary(g)},
         {"set", r.set.members()},
         {"size", r.set.size()},
         {"objective", r.objective},
         {"constraint_ok", r.constraint_ok}};
  if (r.conductance) j["conductance"] = *r.conductance;
  if (r.interval) j["interval"] = {r.interval->v_l, r.interval->v_h};
  if (r.seed_node) j["seed_node"] = *r.seed_node;
  j["volume"] = volume(g, r.set);
  j["loss"] = r.loss;
  j["certificate"] = to_json(r.certificate);
  j["seeds_tried"] = r.seeds_tried;
  j["repaired"] = r.repaired;
  return j;
}

// Checkpoints ---------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;
inline constexpr char kBinaryMagic[4] = {'P', 'O', 'C', 'K'};

struct Checkpoint {
  MpnnParams best;
  TrainState state;
  /// Training configuration and loss settings, stored for reproducibility.
  Json metadata = Json::object();
};

namespace detail {
inline Json checkpoint_header(const Checkpoint& c) {
  const AdamConfig& a = c.state.optimizer.config();
  return {{"format", "probopt-mpnn"},
          {"version", kCheckpointVersion},
          {"layers", c.best.shape().layers},
          {"hidden", c.best.shape().hidden},
          {"epochs_completed", c.state.epochs_completed},
          {"optimizer", {{"step", c.state.optimizer.steps()},
                         {"learning_rate", a.learning_rate},
                         {"beta1", a.beta1},
                         {"beta2", a.beta2},
                         {"epsilon", a.epsilon}}},
          {"metadata", c.metadata}};
}

inline Checkpoint checkpoint_from_header(const Json& h, std::vector<double> best, std::vector<double> last,
                                         std::vector<double> m, std::vector<double> v) {
  if (h.at("format") != "probopt-mpnn") throw Error("not an mpnn checkpoint");
  if (h.at("version").get<int>() != kCheckpointVersion) throw Error("unsupported checkpoint version");
  const MpnnShape shape{h.at("layers").get<std::size_t>(), h.at("hidden").get<std::size_t>()};
  Checkpoint c;
  c.best = MpnnParams::from_values(shape, std::move(best));
  c.state.params = MpnnParams::from_values(shape, std::move(last));
  const Json& o = h.at("optimizer");
  const AdamConfig cfg{o.at("learning_rate").get<double>(), o.at("beta1").get<double>(),
                       o.at("beta2").get<double>(), o.at("epsilon").get<double>()};
  if (m.size() != c.state.params.values().size()) throw Error("optimizer state has the wrong size");
  c.state.optimizer = Adam::restore(cfg, o.at("step").get<std::uint64_t>(), std::move(m), std::move(v));
  c.state.epochs_completed = h.at("epochs_completed").get<std::size_t>();
  c.metadata = h.value("metadata", Json::object());
  return c;
}
}  // namespace detail

inline std::string checkpoint_to_json(const Checkpoint& c) {
  Json j = detail::checkpoint_header(c);
  j["best"] = std::vector<double>(c.best.values().begin(), c.best.values().end());
  j["last"] = std::vector<double>(c.state.params.values().begin(), c.state.params.values().end());
  j["adam_m"] = c.state.optimizer.first_moment();
  j["adam_v"] = c.state.optimizer.second_moment();
  return j.dump(1) + "\n";
}

inline Checkpoint checkpoint_from_json(const std::string& text) {
  const Json j = Json::parse(text);
  return detail::checkpoint_from_header(j, j.at("best").get<std::vector<double>>(),
                                        j.at("last").get<std::vector<double>>(),
                                        j.at("adam_m").get<std::vector<double>>(),
                                        j.at("adam_v").get<std::vector<double>>());
}

/// Binary layout: magic "POCK", u32 header length, JSON header, then four
/// little-endian f64 arrays of equal length: best, last, adam m, adam v.
inline std::string checkpoint_to_binary(const Checkpoint& c) {
  const std::string header = detail::checkpoint_header(c).dump();
  std::string out(kBinaryMagic, 4);
  const auto len = static_cast<std::uint32_t>(header.size());
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((len >> (8 * b)) & 0xff));
  out += header;
  auto append = [&](std::span<const double> xs) {
    for (double x : xs) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, &x, sizeof bits);
      for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
  };
  append(c.best.values());
  append(c.state.params.values());
  append(c.state.optimizer.first_moment());
  append(c.state.optimizer.second_moment());
  return out;
}

inline Checkpoint checkpoint_from_binary(const std::string& data) {
  if (data.size() < 8 || data.compare(0, 4, kBinaryMagic, 4) != 0) throw Error("not a binary checkpoint");
  std::uint32_t len = 0;
  for (int b = 0; b < 4; ++b) len |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[4 + b])) << (8 * b);
  if (data.size() < 8 + static_cast<std::size_t>(len)) throw Error("truncated checkpoint header");
  const Json h = Json::parse(data.substr(8, len));
  const MpnnShape shape{h.at("layers").get<std::size_t>(), h.at("hidden").get<std::size_t>()};
  const std::size_t count = MpnnParams::total_size(shape);
  if (data.size() != 8 + len + 4 * count * 8) throw Error("binary checkpoint has the wrong length");
  std::size_t pos = 8 + len;
  auto take = [&] {
    std::vector<double> xs(count);
    for (double& x : xs) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos++])) << (8 * b);
      std::memcpy(&x, &bits, sizeof x);
    }
    return xs;
  };
  auto best = take();
  auto last = take();
  auto m = take();
  auto v = take();
  return detail::checkpoint_from_header(h, std::move(best), std::move(last), std::move(m), std::move(v));
}

inline void save_checkpoint(const std::string& path, const Checkpoint& c, bool binary) {
  write_text_file(path, binary ? checkpoint_to_binary(c) : checkpoint_to_json(c));
}

/// Detects the format from the leading magic bytes.
inline Checkpoint load_checkpoint(const std::string& path) {
  const std::string data = read_text_file(path);
  if (data.size() >= 4 && data.compare(0, 4, kBinaryMagic, 4) == 0) return checkpoint_from_binary(data);
  try {
    return checkpoint_from_json(data);
  } catch (const nlohmann::json::exception& e) {
    throw Error("checkpoint '" + path + "': " + e.what());
  }
}

}  // namespace probopt
