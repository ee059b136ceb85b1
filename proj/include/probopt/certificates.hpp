#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>

#include "probopt/error.hpp"
#include "probopt/graph.hpp"

namespace probopt {

enum class CertificateKind { markov, penalty, box_constrained };

/// Problem whose objective a certificate speaks about.
enum class ProblemKind {
  /// Objective unspecified; only markov certificates use it.
  generic,
  /// f(S) = γ − w(S) with the clique constraint.
  clique,
  /// f(S) = cut(S) with a volume interval.
  partition,
};

inline const char* to_string(CertificateKind k) {
  switch (k) {
    case CertificateKind::markov: return "markov";
    case CertificateKind::penalty: return "penalty";
    case CertificateKind::box_constrained: return "box_constrained";
  }
  return "?";
}

inline const char* to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::generic: return "generic";
    case ProblemKind::clique: return "clique";
    case ProblemKind::partition: return "partition";
  }
  return "?";
}

/**
 * A probabilistic guarantee issued for a distribution: with probability at
 * least `success_prob`, a draw S has objective below `bound` (and, for
 * penalty and box kinds, satisfies the constraint). A vacuous certificate
 * claims nothing; it is still returned so callers can log progress.
 */
struct Certificate {
  CertificateKind kind = CertificateKind::markov;
  ProblemKind problem = ProblemKind::generic;
  double t = 0.0;
  double loss = 0.0;
  double bound = 0.0;
  double hoeffding_term = 0.0;
  double success_prob = 0.0;
  bool vacuous = false;
  // Problem context needed to re-check a decoded set.
  double beta = 0.0;
  double gamma = 0.0;
  double v_l = 0.0;
  double v_h = 0.0;
};

inline constexpr double kDefaultConfidence = 0.9;

namespace detail {
inline void require_confidence(double t) {
  if (!(t >= 0.0 && t < 1.0)) throw Error("confidence t must lie in [0, 1), got " + std::to_string(t));
}
inline double clamp_loss(double loss) {
  // Closed-form losses can round a hair below zero.
  if (loss < 0.0 && loss > -1e-9) return 0.0;
  if (!(loss >= 0.0)) throw Error("loss must be non-negative, got " + std::to_string(loss));
  return loss;
}
}  // namespace detail

/// Markov: P(f(S) < loss / (1 − t)) > t for non-negative f.
inline Certificate markov_certificate(double loss, double t) {
  detail::require_confidence(t);
  Certificate c;
  c.kind = CertificateKind::markov;
  c.t = t;
  c.loss = detail::clamp_loss(loss);
  c.bound = c.loss / (1.0 - t);
  c.success_prob = t;
  return c;
}

/// Penalty loss with β above max f: with probability at least t a draw lies
/// in the feasible family and has f(S) < ε = loss / (1 − t). Vacuous unless ε < β.
inline Certificate penalty_certificate(double loss, double beta, double t) {
  detail::require_confidence(t);
  if (!(beta > 0.0)) throw Error("penalty weight beta must be positive");
  Certificate c;
  c.kind = CertificateKind::penalty;
  c.t = t;
  c.loss = detail::clamp_loss(loss);
  c.beta = beta;
  c.bound = c.loss / (1.0 - t);
  c.success_prob = t;
  c.vacuous = !(c.bound < beta);
  return c;
}

/// Clique form of the penalty certificate: f(S) = γ − w(S), so a
/// non-vacuous certificate promises a clique with w(S) > γ − ε.
inline Certificate clique_certificate(double loss, double beta, double gamma, double t) {
  Certificate c = penalty_certificate(loss, beta, t);
  c.problem = ProblemKind::clique;
  c.gamma = gamma;
  return c;
}

/// γ − ε: the clique weight a non-vacuous clique certificate guarantees to exceed.
inline double certified_clique_weight(const Certificate& c) { return c.gamma - c.bound; }

/// Hoeffding slack 2·exp(−(b_h − b_l)² / Σ 2 a_i²) for a box constraint.
inline double hoeffding_term(std::span<const double> a, double b_l, double b_h) {
  double sq = 0.0;
  for (double x : a) sq += x * x;
  if (!(sq > 0.0)) throw Error("box certificate needs some a_i > 0");
  const double width = b_h - b_l;
  return 2.0 * std::exp(-(width * width) / (2.0 * sq));
}

/**
 * Box-constrained certificate for a distribution already rescaled so that
 * Σ a_i p_i = (b_l + b_h)/2: with probability at least t − hoeffding_term a
 * draw has f(S) < loss / (1 − t) and Σ_{i∈S} a_i ∈ [b_l, b_h].
 *
 * When `attested_sum` (the caller's Σ a_i p_i) is given it must match the
 * midpoint to 1e-8 relative, otherwise the distribution was not rescaled.
 */
inline Certificate box_certificate(double loss, double t, std::span<const double> a, double b_l,
                                   double b_h, std::optional<double> attested_sum = std::nullopt) {
  detail::require_confidence(t);
  if (!(b_l >= 0.0) || !(b_h >= b_l)) throw Error("box certificate requires 0 <= b_l <= b_h");
  if (attested_sum) {
    const double mid = 0.5 * (b_l + b_h);
    if (std::abs(*attested_sum - mid) > 1e-8 * std::max(1.0, mid)) {
      throw Error("distribution is not rescaled: Σ a_i p_i = " + std::to_string(*attested_sum) +
                  ", midpoint " + std::to_string(mid));
    }
  }
  Certificate c;
  c.kind = CertificateKind::box_constrained;
  c.problem = ProblemKind::partition;
  c.t = t;
  c.loss = detail::clamp_loss(loss);
  c.bound = c.loss / (1.0 - t);
  c.hoeffding_term = hoeffding_term(a, b_l, b_h);
  c.success_prob = t - c.hoeffding_term;
  c.vacuous = !(c.success_prob > 0.0);
  c.v_l = b_l;
  c.v_h = b_h;
  return c;
}

/// Probability that k independent draws contain at least one success of probability t.
inline double sampling_success(double t, std::size_t k) {
  if (!(t > 0.0 && t <= 1.0)) throw Error("sampling_success needs t in (0, 1]");
  if (k < 1) throw Error("sampling_success needs k >= 1");
  return 1.0 - std::pow(1.0 - t, static_cast<double>(k));
}

enum class VerifyMode {
  /// Bound and constraint must both hold.
  strict,
  /// Box certificates only: bound or constraint. A sequential decode can
  /// promise one of the two, not both.
  either,
};

/**
 * Re-checks a decoded set against a certificate. Decoded sets satisfy the
 * bound non-strictly (the conditional expectation ends at or below the
 * loss), so the comparison is `f(S) <= bound` with 1e-9 relative slack.
 */
inline bool verify_solution(const Graph& g, const NodeSet& s, const Certificate& cert,
                            ProblemKind problem, VerifyMode mode = VerifyMode::strict) {
  if (s.universe_size() != g.num_nodes()) throw Error("node set does not belong to this graph");
  const bool kinds_match =
      cert.problem == problem &&
      (cert.kind == CertificateKind::markov ||
       (cert.kind == CertificateKind::penalty && problem == ProblemKind::clique) ||
       (cert.kind == CertificateKind::box_constrained && problem == ProblemKind::partition));
  if (!kinds_match || problem == ProblemKind::generic) {
    throw Error(std::string("certificate of kind ") + to_string(cert.kind) + " for problem " +
                to_string(cert.problem) + " cannot verify a " + to_string(problem) + " solution");
  }
  const double slack = 1e-9 * std::max(1.0, std::abs(cert.bound));
  if (problem == ProblemKind::clique) {
    const double f = cert.gamma - set_weight(g, s);
    const bool bound_ok = f <= cert.bound + slack;
    if (cert.kind == CertificateKind::markov) return bound_ok;
    return bound_ok && is_clique(g, s);
  }
  const double f = cut_weight(g, s);
  const bool bound_ok = f <= cert.bound + slack;
  if (cert.kind == CertificateKind::markov) return bound_ok;
  const double vol = volume(g, s);
  const bool in_box = vol >= cert.v_l - 1e-9 * cert.v_h && vol <= cert.v_h + 1e-9 * cert.v_h;
  return mode == VerifyMode::either ? (bound_ok || in_box) : (bound_ok && in_box);
}

}  // namespace probopt
