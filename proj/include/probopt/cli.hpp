#pragma once

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "probopt/certificates.hpp"
#include "probopt/config.hpp"
#include "probopt/datasets.hpp"
#include "probopt/graph_io.hpp"
#include "probopt/oracles.hpp"
#include "probopt/report.hpp"
#include "probopt/solver.hpp"

#include <CLI11.hpp>

namespace probopt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailed = 2;

// Config → library settings ---------------------------------------------------

inline EdgeListOptions edge_list_options(const RunConfig& cfg) {
  const std::string& b = cfg.text("index_base");
  return {b == "one" ? IndexBase::one : b == "detect" ? IndexBase::detect : IndexBase::zero};
}

inline Producer producer_of(const std::string& s) {
  if (s == "mpnn") return Producer::mpnn;
  if (s == "uniform") return Producer::uniform_random;
  return Producer::direct;
}

inline SolveConfig solve_config(const RunConfig& cfg) {
  SolveConfig sc;
  sc.producer = producer_of(cfg.text("producer"));
  const std::string& d = cfg.text("decode");
  sc.decode = d == "sweep" ? DecodeMethod::sweep : d == "sampled" ? DecodeMethod::sampled : DecodeMethod::conditional;
  sc.order = cfg.text("order") == "natural" ? VisitOrder::natural : VisitOrder::decreasing_probability;
  sc.beta = cfg.real("beta");
  sc.gamma = cfg.real("gamma");
  sc.t = *cfg.real("t");
  sc.restarts = cfg.count("restarts");
  sc.time_budget = cfg.real("budget");
  sc.steps = cfg.count("steps");
  sc.adam.learning_rate = cfg.real_or("lr", 0.01);
  sc.seed_logit = *cfg.real("seed_logit");
  sc.samples = cfg.count("samples");
  sc.extend = cfg.flag("extend");
  sc.seed = cfg.count("seed");
  sc.threads = std::max<std::uint64_t>(cfg.count("threads"), 1);
  sc.schedule.count = cfg.count("intervals");
  sc.schedule.relative_half_width = *cfg.real("interval_width");
  sc.schedule.hops = cfg.count("hops");
  if (cfg.has("v_l") != cfg.has("v_h")) throw Error("v_l and v_h must be given together");
  if (cfg.has("v_l")) {
    const VolumeConstraint iv{*cfg.real("v_l"), *cfg.real("v_h")};
    iv.validate();
    sc.intervals = {iv};
  }
  return sc;
}

inline TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig tc;
  tc.shape = {cfg.count("layers"), cfg.count("hidden")};
  tc.loss = cfg.text("train_loss") == "cut" ? TrainLossKind::cut : TrainLossKind::clique;
  tc.beta = cfg.real("beta");
  tc.gamma = cfg.real("gamma");
  tc.schedule.count = cfg.count("intervals");
  tc.schedule.relative_half_width = *cfg.real("interval_width");
  tc.epochs = cfg.count("epochs");
  tc.batch_size = cfg.count("batch_size");
  tc.adam.learning_rate = cfg.real_or("lr", 0.001);
  return tc;
}

inline Json config_echo(const RunConfig& cfg, bool result_keys) {
  Json j = Json::object();
  for (const auto& [k, v] : cfg.entries(result_keys)) j[k] = v;
  return j;
}

inline void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.has("out")) {
    write_text_file(cfg.text("out"), text);
  } else {
    out << text;
  }
}

inline std::string fixed(double x, int digits = 6) {
  std::ostringstream ss;
  ss << std::setprecision(digits) << x;
  return ss.str();
}

// Commands --------------------------------------------------------------------

inline int cmd_generate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  if (!cfg.has("out")) throw Error("generate needs --out <directory>");
  const std::filesystem::path dir = cfg.text("out");
  std::filesystem::create_directories(dir);
  const std::size_t count = cfg.count("count");
  const std::size_t n = cfg.count("n");
  const double p = *cfg.real("p");
  if (count == 0) throw Error("count must be positive");
  if (!(p >= 0.0 && p <= 1.0)) throw Error("p must lie in [0, 1]");
  const bool planted = cfg.text("generator") == "planted";

  Corpus corpus;
  std::vector<std::string> headers;
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = make_rng(cfg.count("seed"), i);
    std::ostringstream name;
    name << "g" << std::setw(3) << std::setfill('0') << i;
    std::string header;
    if (planted) {
      PlantedInstance inst = gen_planted_clique(n, cfg.count("k"), p, rng);
      header = "# planted";
      for (NodeId v : inst.planted.members()) header += " " + std::to_string(v);
      header += "\n";
      corpus.graphs.push_back(std::move(inst.graph));
    } else {
      corpus.graphs.push_back(gen_gnp(n, p, rng));
    }
    corpus.names.push_back(name.str());
    headers.push_back(header);
  }
  Rng split_rng = make_rng(cfg.count("seed"), count);
  corpus = split_corpus(std::move(corpus), parse_fractions(cfg.text("fractions")), split_rng);

  std::vector<ManifestEntry> entries;
  std::array<std::size_t, 3> per_split{};
  for (std::size_t i = 0; i < count; ++i) {
    const std::string file = corpus.names[i] + ".txt";
    write_text_file((dir / file).string(), headers[i] + to_edge_list_text(corpus.graphs[i]));
    entries.push_back({corpus.names[i], file, corpus.split[i]});
    ++per_split[static_cast<std::size_t>(corpus.split[i])];
  }
  write_manifest((dir / "manifest.json").string(), entries);
  out << "wrote " << count << " graphs to " << dir.string() << " (train " << per_split[0] << ", val "
      << per_split[1] << ", test " << per_split[2] << ")\n";
  return kExitOk;
}

inline MpnnParams load_model(const RunConfig& cfg) {
  if (!cfg.has("checkpoint")) throw Error("the mpnn producer needs --checkpoint");
  return load_checkpoint(cfg.text("checkpoint")).best;
}

inline int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.has("graph")) throw Error("solve needs --graph");
  const Graph g = read_graph_file(cfg.text("graph"), edge_list_options(cfg));
  SolveConfig sc = solve_config(cfg);
  MpnnParams model;
  if (sc.producer == Producer::mpnn) {
    model = load_model(cfg);
    sc.mpnn = &model;
  }
  const bool partition = cfg.text("problem") == "partition";
  SolveResult r;
  if (partition) {
    const std::uint64_t seed = cfg.count("seed_node");
    if (seed >= g.num_nodes()) throw Error("seed_node " + std::to_string(seed) + " is not a node");
    r = solve_local_partition(g, static_cast<NodeId>(seed), sc);
  } else {
    r = solve_max_clique(g, sc);
  }

  Json report{{"config", config_echo(cfg, true)}, {"result", to_json(g, r)}};
  if (cfg.flag("timing")) {
    report["timing"] = {{"wall_time", r.wall_time}, {"runtime", config_echo(cfg, false)}};
  }
  emit(cfg, report.dump(2) + "\n", out);
  if (cfg.has("trace_out")) {
    const Json trace = r.trace ? to_json(*r.trace) : Json(nullptr);
    write_text_file(cfg.text("trace_out"), trace.dump(2) + "\n");
  }

  if (cfg.flag("strict")) {
    const ProblemKind kind = partition ? ProblemKind::partition : ProblemKind::clique;
    const VerifyMode mode =
        partition && r.decode == DecodeMethod::conditional ? VerifyMode::either : VerifyMode::strict;
    if (!r.constraint_ok) {
      err << "strict: constraint not satisfied\n";
      return kExitFailed;
    }
    if (!verify_solution(g, r.set, r.certificate, kind, mode)) {
      err << "strict: solution does not meet its certificate"
          << (r.certificate.vacuous ? " (certificate is vacuous)" : "") << "\n";
      return kExitFailed;
    }
  }
  return kExitOk;
}

namespace detail {
inline bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }
}  // namespace detail

inline int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.has("graph") || !cfg.has("result")) throw Error("verify needs --graph and --result");
  const Graph g = read_graph_file(cfg.text("graph"), edge_list_options(cfg));
  Json doc;
  try {
    doc = Json::parse(read_text_file(cfg.text("result")));
  } catch (const nlohmann::json::exception& e) {
    throw Error("result '" + cfg.text("result") + "': " + e.what());
  }
  const Json& r = doc.contains("result") ? doc.at("result") : doc;
  if (r.at("graph").at("fingerprint").get<std::string>() != graph_fingerprint(g)) {
    err << "verify: result was produced for a different graph\n";
    return kExitUsage;
  }

  bool ok = true;
  auto check = [&](const std::string& what, bool passed) {
    out << (passed ? "ok   " : "FAIL ") << what << "\n";
    ok = ok && passed;
  };

  const auto members = r.at("set").get<std::vector<std::uint64_t>>();
  NodeSet s(g);
  bool members_ok = true;
  for (std::uint64_t v : members) {
    if (v >= g.num_nodes() || s.contains(static_cast<NodeId>(v))) {
      members_ok = false;
      break;
    }
    s.insert(g, static_cast<NodeId>(v));
  }
  check("set members are distinct nodes", members_ok);
  if (!members_ok) return kExitFailed;
  check("size", r.at("size").get<std::size_t>() == s.size());

  const Certificate cert = certificate_from_json(r.at("certificate"));
  const std::string problem = r.at("problem").get<std::string>();
  if (problem == "clique") {
    check("objective = w(S)", detail::close(r.at("objective").get<double>(), set_weight(g, s)));
    const bool clique = is_clique(g, s);
    check("set is a clique", clique);
    check("constraint_ok matches", r.at("constraint_ok").get<bool>() == clique);
    const Certificate re = clique_certificate(cert.loss, cert.beta, cert.gamma, cert.t);
    check("certificate recomputes",
          detail::close(re.bound, cert.bound) && re.vacuous == cert.vacuous &&
              detail::close(re.success_prob, cert.success_prob));
  } else if (problem == "partition") {
    const double cut = cut_weight(g, s);
    check("objective = cut(S)", detail::close(r.at("objective").get<double>(), cut));
    const NodeId seed = r.at("seed_node").get<NodeId>();
    check("seed in set", seed < g.num_nodes() && s.contains(seed));
    const auto iv = r.at("interval").get<std::vector<double>>();
    const VolumeConstraint interval{iv.at(0), iv.at(1)};
    check("volume <= v_h", s.volume() <= interval.v_h);
    check("constraint_ok matches",
          r.at("constraint_ok").get<bool>() == (interval.contains(s.volume()) && s.contains(seed)));
    if (s.volume() > 0.0) check("conductance", detail::close(r.at("conductance").get<double>(), cut / s.volume()));
    Certificate re = box_certificate(cert.loss, cert.t, g.degrees(), cert.v_l, cert.v_h);
    check("certificate recomputes",
          detail::close(re.bound, cert.bound) && detail::close(re.success_prob, cert.success_prob) &&
              (re.vacuous == cert.vacuous || cert.vacuous));
  } else {
    throw Error("unknown problem '" + problem + "' in result");
  }
  return ok ? kExitOk : kExitFailed;
}

inline int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  if (!cfg.has("manifest")) throw Error("train needs --manifest");
  if (!cfg.has("checkpoint")) throw Error("train needs --checkpoint");
  const Corpus corpus = load_corpus(cfg.text("manifest"), edge_list_options(cfg));
  const std::vector<Graph> train = corpus.subset(Split::train);
  const std::vector<Graph> val = corpus.subset(Split::validation);
  if (train.empty()) throw Error("the corpus has no training graphs");
  const TrainConfig tc = train_config(cfg);

  std::optional<TrainState> resume;
  if (cfg.flag("resume")) {
    Checkpoint c = load_checkpoint(cfg.text("checkpoint"));
    if (!(c.state.params.shape() == tc.shape)) throw Error("checkpoint shape differs from layers/hidden");
    resume = std::move(c.state);
  }
  const std::size_t start_epoch = resume ? resume->epochs_completed : 0;
  Rng rng = make_rng(cfg.count("seed"), start_epoch);
  const TrainResult result = train_mpnn(train, val, tc, rng, std::move(resume));

  for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
    if (!std::isfinite(result.train_loss[e]) || !std::isfinite(result.validation_loss[e])) {
      throw Error("non-finite loss at epoch " + std::to_string(start_epoch + e + 1));
    }
    out << "epoch " << start_epoch + e + 1 << " train_loss " << fixed(result.train_loss[e], 10)
        << " val_loss " << fixed(result.validation_loss[e], 10) << "\n";
  }
  Checkpoint c{result.best, result.last, Json::object()};
  c.metadata["train_loss"] = cfg.text("train_loss");
  c.metadata["config"] = config_echo(cfg, true);
  c.metadata["best_epoch"] = result.best_epoch;
  save_checkpoint(cfg.text("checkpoint"), c, cfg.text("checkpoint_format") == "binary");
  out << "checkpoint " << cfg.text("checkpoint") << " epochs " << result.last.epochs_completed << " steps "
      << result.last.optimizer.steps() << "\n";
  return kExitOk;
}

inline int cmd_benchmark(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  if (!cfg.has("manifest")) throw Error("benchmark needs --manifest");
  const Corpus corpus = load_corpus(cfg.text("manifest"), edge_list_options(cfg));
  std::vector<std::size_t> picked;
  const std::string& split = cfg.text("split");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (split == "all" || split == to_string(corpus.split[i])) picked.push_back(i);
  }
  if (picked.empty()) throw Error("no graphs to benchmark");

  const bool partition = cfg.text("problem") == "partition";
  const bool use_oracle = !partition && !cfg.flag("no_oracle");
  if (use_oracle) {
    for (std::size_t i : picked) {
      if (corpus.graphs[i].num_nodes() > cfg.count("oracle_limit")) {
        throw Error("graph " + corpus.names[i] + " exceeds oracle_limit; pass --no_oracle to skip the oracle");
      }
    }
  }

  SolveConfig base = solve_config(cfg);
  MpnnParams model;
  if (base.producer == Producer::mpnn) {
    model = load_model(cfg);
    base.mpnn = &model;
  }
  std::vector<Producer> producers{base.producer};
  if (cfg.flag("compare") && base.producer != Producer::uniform_random) producers.push_back(Producer::uniform_random);
  const bool timing = cfg.flag("timing");

  std::ostringstream csv;
  csv << "instance,producer,decode,objective," << (partition ? "conductance" : "ratio") << ",time,constraint_ok\n";
  struct Tally {
    std::vector<double> metric, time;
    std::size_t ok = 0;
  };
  std::vector<Tally> tallies(producers.size());
  for (std::size_t i : picked) {
    const Graph& g = corpus.graphs[i];
    std::optional<double> optimum;
    if (use_oracle) optimum = static_cast<double>(brute_force_max_clique(g).size());
    for (std::size_t k = 0; k < producers.size(); ++k) {
      SolveConfig sc = base;
      sc.producer = producers[k];
      SolveResult r;
      std::optional<double> metric;
      if (partition) {
        std::vector<NodeId> candidates;
        for (NodeId v = 0; v < g.num_nodes(); ++v) {
          if (g.degree(v) > 0.0) candidates.push_back(v);
        }
        if (candidates.empty()) throw Error("graph " + corpus.names[i] + " has no edges");
        Rng rng = make_rng(cfg.count("seed"), i);
        r = solve_local_partition(g, candidates[uniform_index(rng, candidates.size())], sc);
        metric = r.conductance;
      } else {
        r = solve_max_clique(g, sc);
        if (optimum) metric = approximation_ratio(static_cast<double>(r.set.size()), *optimum);
      }
      csv << corpus.names[i] << "," << to_string(r.producer) << "," << to_string(r.decode) << ","
          << format_double(r.objective) << "," << (metric ? format_double(*metric) : "") << ","
          << (timing ? fixed(r.wall_time) : "") << "," << (r.constraint_ok ? "true" : "false") << "\n";
      if (metric) tallies[k].metric.push_back(*metric);
      tallies[k].time.push_back(r.wall_time);
      tallies[k].ok += r.constraint_ok ? 1 : 0;
    }
  }
  auto mean = [](const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
  };
  auto stddev = [&](const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
  };
  for (std::size_t k = 0; k < producers.size(); ++k) {
    const Tally& t = tallies[k];
    const std::string ok_rate = format_double(static_cast<double>(t.ok) / static_cast<double>(picked.size()));
    const std::string decode = to_string(partition && base.decode == DecodeMethod::sweep ? DecodeMethod::conditional
                                                                                        : base.decode);
    const bool have = !t.metric.empty();
    csv << "mean," << to_string(producers[k]) << "," << decode << ",," << (have ? fixed(mean(t.metric), 10) : "")
        << "," << (timing ? fixed(mean(t.time)) : "") << "," << ok_rate << "\n";
    csv << "std," << to_string(producers[k]) << "," << decode << ",," << (have ? fixed(stddev(t.metric), 10) : "")
        << "," << (timing ? fixed(stddev(t.time)) : "") << ",\n";
  }
  emit(cfg, csv.str(), out);
  return kExitOk;
}

// Entry point -----------------------------------------------------------------

/// Parses argv and dispatches; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Probabilistic-method combinatorial optimization on graphs"};
  app.require_subcommand(1);
  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const RunConfig&, std::ostream&, std::ostream&);
  };
  const Command commands[] = {
      {"generate", "write a synthetic corpus and its manifest", cmd_generate},
      {"solve", "solve one instance and print a JSON report", cmd_solve},
      {"train", "train the message-passing producer on a corpus", cmd_train},
      {"benchmark", "solve every corpus graph and print CSV", cmd_benchmark},
      {"verify", "re-check a solve report against its graph", cmd_verify},
  };
  std::vector<std::vector<std::optional<std::string>>> flag_values(std::size(commands));
  std::vector<std::string> config_paths(std::size(commands));
  std::vector<CLI::App*> subs;
  for (std::size_t c = 0; c < std::size(commands); ++c) {
    CLI::App* sub = app.add_subcommand(commands[c].name, commands[c].help);
    sub->add_option("--config", config_paths[c], "key = value config file; flags override it");
    flag_values[c].resize(std::size(kConfigKeys));
    for (std::size_t k = 0; k < std::size(kConfigKeys); ++k) {
      const KeySpec& key = kConfigKeys[k];
      std::string names = "--" + std::string(key.name);
      std::string dashed = names;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != names) names += "," + dashed;
      std::string help(key.help);
      if (!key.default_value.empty()) help += " [" + std::string(key.default_value) + "]";
      if (key.type == KeyType::flag) {
        sub->add_option_function<std::string>(
               names, [&flag_values, c, k](const std::string& v) { flag_values[c][k] = v; }, help)
            ->expected(0, 1)
            ->default_str("true");
      } else {
        sub->add_option_function<std::string>(
            names, [&flag_values, c, k](const std::string& v) { flag_values[c][k] = v; }, help);
      }
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Subcommand help requests land here too.
    for (CLI::App* sub : subs) {
      if (sub->parsed() && (e.get_name() == "CallForHelp")) {
        out << sub->help();
        return kExitOk;
      }
    }
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  for (std::size_t c = 0; c < std::size(commands); ++c) {
    if (!subs[c]->parsed()) continue;
    try {
      RunConfig cfg;
      if (!config_paths[c].empty()) cfg.load_file(config_paths[c]);
      for (std::size_t k = 0; k < std::size(kConfigKeys); ++k) {
        if (flag_values[c][k]) cfg.set(kConfigKeys[k].name, *flag_values[c][k]);
      }
      return commands[c].fn(cfg, out, err);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  return kExitUsage;
}

}  // namespace probopt::cli
