#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "probopt/adam.hpp"
#include "probopt/distribution.hpp"
#include "probopt/error.hpp"
#include "probopt/graph.hpp"

namespace probopt {

/// Clique penalty loss; unset parameters default to the graph's total edge weight.
struct CliqueLossSpec {
  std::optional<double> beta;
  std::optional<double> gamma;

  CliqueLossParams resolve(const Graph& g) const {
    CliqueLossParams p = CliqueLossParams::defaults_for(g);
    if (gamma) p.gamma = *gamma;
    if (beta) p.beta = *beta;
    p.validate();
    return p;
  }
};

/// Expected cut after rescaling p to E[vol(S)] = (v_l + v_h)/2.
struct CutLossSpec {
  VolumeConstraint interval;
};

using LossSpec = std::variant<CliqueLossSpec, CutLossSpec>;

struct LossEvaluation {
  double value = 0.0;
  /// d loss / d p at the producer's (un-rescaled) p.
  std::vector<double> gradient;
  /// Distribution the loss was evaluated at: p itself, or its rescaling.
  NodeDistribution evaluated;
  bool reached_target = true;
};

/**
 * Evaluates a loss and its gradient with respect to the produced p. For the
 * cut loss the rescaling p → clamp(c p, 0, 1) is treated as a constant
 * per-node scaling: the gradient through an unsaturated node is multiplied
 * by its scale factor, through a saturated node it is zero.
 */
inline LossEvaluation evaluate_loss(const Graph& g, const LossSpec& spec, const NodeDistribution& p) {
  LossEvaluation out;
  if (const auto* clique = std::get_if<CliqueLossSpec>(&spec)) {
    LossReport r = clique_loss(g, p, clique->resolve(g));
    out.value = r.value;
    out.gradient = std::move(r.gradient);
    out.evaluated = p;
    return out;
  }
  const auto& cut = std::get<CutLossSpec>(spec);
  cut.interval.validate();
  RescaleResult rescaled = rescale_to_target(p, g.degrees(), cut.interval.target());
  LossReport r = cut_loss(g, rescaled.dist);
  out.value = r.value;
  out.gradient.assign(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = rescaled.dist[i];
    if (q < 1.0 && p[i] > 0.0) out.gradient[i] = r.gradient[i] * (q / p[i]);
  }
  out.evaluated = std::move(rescaled.dist);
  out.reached_target = rescaled.reached_target;
  return out;
}

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct DirectInit {
  /// Initial logits; empty means all zero (p = ½).
  std::vector<double> logits;
  /// Nodes with active == 0 are pinned at p = 0; empty means all active.
  std::vector<std::uint8_t> active;
};

struct DirectResult {
  /// σ(logits) after the last step, masked nodes at 0.
  NodeDistribution produced;
  /// Distribution the loss sees (the rescaled one for the cut loss).
  NodeDistribution evaluated;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> loss_history;
};

/**
 * Per-instance optimization of free node logits with Adam. The loss history
 * records the value before each step followed by the final value.
 */
inline DirectResult optimize_direct(const Graph& g, const LossSpec& spec, std::size_t steps,
                                    const AdamConfig& config, const DirectInit& init = {}) {
  const std::size_t n = g.num_nodes();
  std::vector<double> logits = init.logits.empty() ? std::vector<double>(n, 0.0) : init.logits;
  if (logits.size() != n) throw Error("initial logits do not match graph size");
  if (!init.active.empty() && init.active.size() != n) throw Error("active mask does not match graph size");
  auto is_active = [&](std::size_t i) { return init.active.empty() || init.active[i] != 0; };

  auto produce = [&] {
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = is_active(i) ? logistic(logits[i]) : 0.0;
    return NodeDistribution(std::move(p));
  };

  Adam adam(n, config);
  DirectResult result;
  std::vector<double> grad_logits(n);
  NodeDistribution p = produce();
  LossEvaluation eval = evaluate_loss(g, spec, p);
  result.initial_loss = eval.value;
  for (std::size_t step = 0; step < steps; ++step) {
    if (!std::isfinite(eval.value)) {
      throw Error("direct optimization diverged at step " + std::to_string(step) +
                  " (loss = " + std::to_string(eval.value) + ")");
    }
    result.loss_history.push_back(eval.value);
    for (std::size_t i = 0; i < n; ++i) {
      grad_logits[i] = is_active(i) ? eval.gradient[i] * p[i] * (1.0 - p[i]) : 0.0;
    }
    adam.step(logits, grad_logits);
    p = produce();
    eval = evaluate_loss(g, spec, p);
  }
  if (!std::isfinite(eval.value)) throw Error("direct optimization produced a non-finite loss");
  result.loss_history.push_back(eval.value);
  result.final_loss = eval.value;
  result.produced = std::move(p);
  result.evaluated = std::move(eval.evaluated);
  return result;
}

}  // namespace probopt
