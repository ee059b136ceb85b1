#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "probopt/adam.hpp"
#include "probopt/direct.hpp"
#include "probopt/distribution.hpp"
#include "probopt/error.hpp"
#include "probopt/graph.hpp"
#include "probopt/locality.hpp"
#include "probopt/random.hpp"

namespace probopt {

struct MpnnShape {
  std::size_t layers = 3;
  std::size_t hidden = 16;

  friend bool operator==(const MpnnShape&, const MpnnShape&) = default;
};

/// Per-node input features: seed one-hot and degree / max degree.
inline constexpr std::size_t kMpnnFeatures = 2;

/**
 * Parameters of the message-passing producer, stored flat so the optimizer
 * and gradient buffers share one layout:
 *
 *   input   W (H×2), b (H)
 *   layer k W (H×H), b (H)        for k = 0..L-1
 *   readout W (H×H), b (H)
 *   output  w (H),   b (1)
 *
 * Matrices are row-major.
 */
class MpnnParams {
 public:
  MpnnParams() = default;
  explicit MpnnParams(MpnnShape shape) : shape_(shape), values_(total_size(shape), 0.0) {}

  /// Uniform in [−1/√H, 1/√H].
  static MpnnParams random(MpnnShape shape, Rng& rng) {
    MpnnParams p(shape);
    const double scale = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(shape.hidden, 1)));
    for (double& v : p.values_) v = uniform_real(rng, -scale, scale);
    return p;
  }

  static MpnnParams from_values(MpnnShape shape, std::vector<double> values) {
    if (values.size() != total_size(shape)) throw Error("parameter vector has the wrong size for its shape");
    for (double v : values) {
      if (!std::isfinite(v)) throw Error("non-finite parameter value");
    }
    MpnnParams p;
    p.shape_ = shape;
    p.values_ = std::move(values);
    return p;
  }

  static std::size_t total_size(MpnnShape s) {
    const std::size_t h = s.hidden;
    return h * kMpnnFeatures + h + s.layers * (h * h + h) + h * h + h + h + 1;
  }

  const MpnnShape& shape() const { return shape_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::size_t input_weight() const { return 0; }
  std::size_t input_bias() const { return shape_.hidden * kMpnnFeatures; }
  std::size_t layer_weight(std::size_t k) const {
    const std::size_t h = shape_.hidden;
    return input_bias() + h + k * (h * h + h);
  }
  std::size_t layer_bias(std::size_t k) const { return layer_weight(k) + shape_.hidden * shape_.hidden; }
  std::size_t readout_weight() const { return layer_weight(shape_.layers); }
  std::size_t readout_bias() const { return readout_weight() + shape_.hidden * shape_.hidden; }
  std::size_t output_weight() const { return readout_bias() + shape_.hidden; }
  std::size_t output_bias() const { return output_weight() + shape_.hidden; }

  friend bool operator==(const MpnnParams&, const MpnnParams&) = default;

 private:
  MpnnShape shape_;
  std::vector<double> values_;
};

/// Activations kept by mpnn_forward for mpnn_backward.
struct MpnnCache {
  const Graph* graph = nullptr;
  NodeId seed = 0;
  std::vector<double> params;                  // copy, to detect stale use
  std::vector<double> features;                // n × F
  std::vector<std::vector<double>> hidden;     // L+1 of n × H
  std::vector<std::vector<double>> aggregate;  // L of n × H
  std::vector<std::vector<double>> preact;     // L of n × H
  std::vector<std::size_t> hops;
  std::vector<double> readout_pre;             // n × H
  std::vector<double> scores;                  // n
  std::size_t argmin = 0;
  std::size_t argmax = 0;
  double range = 0.0;
  bool degenerate = true;
};

namespace detail {

// y = W x + b for each of n rows; W is out×in row-major.
inline void affine_rows(std::span<const double> w, std::span<const double> b, const double* x,
                        double* y, std::size_t n, std::size_t in, std::size_t out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x + i * in;
    double* yi = y + i * out;
    for (std::size_t r = 0; r < out; ++r) {
      double acc = b[r];
      const double* wr = w.data() + r * in;
      for (std::size_t c = 0; c < in; ++c) acc += wr[c] * xi[c];
      yi[r] = acc;
    }
  }
}

// Accumulates grad_w += Σ_i gy_i x_i^T, grad_b += Σ_i gy_i, gx_i = W^T gy_i.
inline void affine_rows_backward(std::span<const double> w, const double* x, const double* gy,
                                 double* grad_w, double* grad_b, double* gx, std::size_t n,
                                 std::size_t in, std::size_t out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x + i * in;
    const double* gyi = gy + i * out;
    double* gxi = gx ? gx + i * in : nullptr;
    for (std::size_t r = 0; r < out; ++r) {
      const double gr = gyi[r];
      if (gr == 0.0) continue;
      grad_b[r] += gr;
      double* gwr = grad_w + r * in;
      const double* wr = w.data() + r * in;
      for (std::size_t c = 0; c < in; ++c) {
        gwr[c] += gr * xi[c];
        if (gxi) gxi[c] += gr * wr[c];
      }
    }
  }
}

// out_i = h_i + Σ_j w_ij h_j.
inline void aggregate_neighbors(const Graph& g, const std::vector<double>& h, std::vector<double>& out,
                                std::size_t width) {
  out = h;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    double* oi = out.data() + i * width;
    const auto row = g.neighbors(i);
    const auto ws = g.neighbor_weights(i);
    for (std::size_t k = 0; k < row.size(); ++k) {
      const double* hj = h.data() + static_cast<std::size_t>(row[k]) * width;
      for (std::size_t c = 0; c < width; ++c) oi[c] += ws[k] * hj[c];
    }
  }
}

}  // namespace detail

/**
 * Message-passing producer. Each round computes
 *   h'_i = ReLU(W (h_i + Σ_j w_ij h_j) + b) + h_i
 * and zeroes nodes more than k hops from the seed after round k. A two-layer
 * readout gives one score per node; graph-wide min-max normalization maps the
 * scores to [0, 1], or to ½ everywhere when all scores are equal.
 */
inline NodeDistribution mpnn_forward(const Graph& g, const MpnnParams& params, NodeId seed,
                                     MpnnCache* cache = nullptr) {
  const std::size_t n = g.num_nodes();
  const std::size_t h = params.shape().hidden;
  const std::size_t layers = params.shape().layers;
  if (params.values().size() != MpnnParams::total_size(params.shape())) {
    throw Error("parameter vector does not match its shape");
  }
  if (seed >= n) throw Error("seed node out of range");
  const auto v = params.values();
  auto block = [&](std::size_t offset, std::size_t len) { return v.subspan(offset, len); };

  MpnnCache local;
  MpnnCache& c = cache ? *cache : local;
  c = MpnnCache{};
  c.graph = &g;
  c.seed = seed;
  c.params.assign(v.begin(), v.end());
  c.hops = hop_distances(g, seed);

  const double max_d = g.max_degree();
  c.features.assign(n * kMpnnFeatures, 0.0);
  for (NodeId i = 0; i < n; ++i) {
    c.features[i * kMpnnFeatures] = i == seed ? 1.0 : 0.0;
    c.features[i * kMpnnFeatures + 1] = max_d > 0.0 ? g.degree(i) / max_d : 0.0;
  }

  c.hidden.assign(layers + 1, std::vector<double>(n * h));
  detail::affine_rows(block(params.input_weight(), h * kMpnnFeatures), block(params.input_bias(), h),
                      c.features.data(), c.hidden[0].data(), n, kMpnnFeatures, h);
  c.aggregate.resize(layers);
  c.preact.assign(layers, std::vector<double>(n * h));
  for (std::size_t k = 0; k < layers; ++k) {
    detail::aggregate_neighbors(g, c.hidden[k], c.aggregate[k], h);
    detail::affine_rows(block(params.layer_weight(k), h * h), block(params.layer_bias(k), h),
                        c.aggregate[k].data(), c.preact[k].data(), n, h, h);
    auto& next = c.hidden[k + 1];
    for (NodeId i = 0; i < n; ++i) {
      const bool visible = c.hops[i] <= k + 1;
      for (std::size_t r = 0; r < h; ++r) {
        const double z = c.preact[k][i * h + r];
        next[i * h + r] = visible ? std::max(z, 0.0) + c.hidden[k][i * h + r] : 0.0;
      }
    }
  }

  c.readout_pre.assign(n * h, 0.0);
  detail::affine_rows(block(params.readout_weight(), h * h), block(params.readout_bias(), h),
                      c.hidden[layers].data(), c.readout_pre.data(), n, h, h);
  const auto w_out = block(params.output_weight(), h);
  const double b_out = v[params.output_bias()];
  c.scores.assign(n, 0.0);
  for (NodeId i = 0; i < n; ++i) {
    double acc = b_out;
    for (std::size_t r = 0; r < h; ++r) acc += w_out[r] * std::max(c.readout_pre[i * h + r], 0.0);
    c.scores[i] = acc;
  }

  const auto [lo, hi] = std::minmax_element(c.scores.begin(), c.scores.end());
  c.argmin = static_cast<std::size_t>(lo - c.scores.begin());
  c.argmax = static_cast<std::size_t>(hi - c.scores.begin());
  c.range = *hi - *lo;
  c.degenerate = !(c.range > 1e-12 * std::max(1.0, std::abs(*hi)));
  std::vector<double> p(n, 0.5);
  if (!c.degenerate) {
    for (NodeId i = 0; i < n; ++i) p[i] = (c.scores[i] - *lo) / c.range;
    p[c.argmin] = 0.0;
    p[c.argmax] = 1.0;
  }
  return NodeDistribution(std::move(p));
}

/**
 * Gradient of a loss with respect to every parameter, given d loss / d p for
 * the forward pass recorded in `cache`. Throws if the cache belongs to
 * different parameters or another graph size.
 */
inline MpnnParams mpnn_backward(const Graph& g, const MpnnParams& params, const MpnnCache& cache,
                                std::span<const double> grad_p) {
  const std::size_t n = g.num_nodes();
  const std::size_t h = params.shape().hidden;
  const std::size_t layers = params.shape().layers;
  if (cache.graph != &g || cache.scores.size() != n ||
      !std::equal(cache.params.begin(), cache.params.end(), params.values().begin(), params.values().end())) {
    throw Error("stale forward cache: run mpnn_forward with these parameters and graph first");
  }
  if (grad_p.size() != n) throw Error("upstream gradient size does not match graph");
  const auto v = params.values();
  auto block = [&](std::size_t offset, std::size_t len) { return v.subspan(offset, len); };

  MpnnParams grad(params.shape());
  auto gv = grad.values();
  if (cache.degenerate) return grad;

  // p_i = (y_i − y_min) / R
  std::vector<double> gy(n, 0.0);
  double to_min = 0.0;
  double to_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = (cache.scores[i] - cache.scores[cache.argmin]) / cache.range;
    gy[i] += grad_p[i] / cache.range;
    to_min += grad_p[i] * (p - 1.0) / cache.range;
    to_max -= grad_p[i] * p / cache.range;
  }
  gy[cache.argmin] += to_min;
  gy[cache.argmax] += to_max;

  // y_i = w_out · ReLU(u_i) + b_out
  const auto w_out = block(params.output_weight(), h);
  std::vector<double> gu(n * h, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    gv[params.output_bias()] += gy[i];
    for (std::size_t r = 0; r < h; ++r) {
      const double u = cache.readout_pre[i * h + r];
      if (u > 0.0) {
        gv[params.output_weight() + r] += gy[i] * u;
        gu[i * h + r] = gy[i] * w_out[r];
      }
    }
  }

  std::vector<double> gh(n * h, 0.0);
  detail::affine_rows_backward(block(params.readout_weight(), h * h), cache.hidden[layers].data(),
                               gu.data(), gv.data() + params.readout_weight(),
                               gv.data() + params.readout_bias(), gh.data(), n, h, h);

  std::vector<double> gz(n * h);
  std::vector<double> ga(n * h);
  std::vector<double> gprev(n * h);
  for (std::size_t k = layers; k-- > 0;) {
    std::fill(gz.begin(), gz.end(), 0.0);
    std::fill(ga.begin(), ga.end(), 0.0);
    std::fill(gprev.begin(), gprev.end(), 0.0);
    for (NodeId i = 0; i < n; ++i) {
      if (cache.hops[i] > k + 1) continue;  // masked: no gradient flows
      for (std::size_t r = 0; r < h; ++r) {
        const double gr = gh[i * h + r];
        gprev[i * h + r] += gr;
        if (cache.preact[k][i * h + r] > 0.0) gz[i * h + r] = gr;
      }
    }
    detail::affine_rows_backward(block(params.layer_weight(k), h * h), cache.aggregate[k].data(),
                                 gz.data(), gv.data() + params.layer_weight(k),
                                 gv.data() + params.layer_bias(k), ga.data(), n, h, h);
    // a_i = h_i + Σ_j w_ij h_j, symmetric in (i, j).
    std::vector<double> gagg;
    detail::aggregate_neighbors(g, ga, gagg, h);
    for (std::size_t idx = 0; idx < gprev.size(); ++idx) gprev[idx] += gagg[idx];
    gh.swap(gprev);
  }

  std::vector<double> unused(n * kMpnnFeatures, 0.0);
  detail::affine_rows_backward(block(params.input_weight(), h * kMpnnFeatures), cache.features.data(),
                               gh.data(), gv.data() + params.input_weight(),
                               gv.data() + params.input_bias(), unused.data(), n, kMpnnFeatures, h);
  return grad;
}

// Training ------------------------------------------------------------------

enum class TrainLossKind { clique, cut };

struct TrainConfig {
  MpnnShape shape;
  TrainLossKind loss = TrainLossKind::clique;
  std::optional<double> beta;
  std::optional<double> gamma;
  IntervalSchedule schedule;
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  AdamConfig adam{0.001, 0.9, 0.999, 1e-8};
};

/// Optimizer position; enough to resume training exactly.
struct TrainState {
  MpnnParams params;
  Adam optimizer;
  std::size_t epochs_completed = 0;
};

struct TrainResult {
  /// Parameters with the lowest validation loss seen (initial ones included).
  MpnnParams best;
  double best_validation_loss = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  TrainState last;
  std::vector<double> train_loss;       // per epoch, mean over samples
  std::vector<double> validation_loss;  // per epoch
};

namespace detail {

struct Sample {
  NodeId seed = 0;
  LossSpec spec;
};

// Seed (and, for the cut loss, a volume interval inside its receptive field).
// Returns nullopt when the graph has no usable seed.
inline std::optional<Sample> draw_sample(const Graph& g, const TrainConfig& config, Rng& rng) {
  if (g.num_nodes() == 0) return std::nullopt;
  if (config.loss == TrainLossKind::clique) {
    return Sample{static_cast<NodeId>(uniform_index(rng, g.num_nodes())), CliqueLossSpec{config.beta, config.gamma}};
  }
  std::vector<NodeId> candidates;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (g.degree(v) > 0.0) candidates.push_back(v);
  }
  if (candidates.empty()) return std::nullopt;
  const NodeId seed = candidates[uniform_index(rng, candidates.size())];
  IntervalSchedule schedule = config.schedule;
  schedule.hops = config.shape.layers;
  const auto intervals = interval_schedule(g, seed, schedule);
  return Sample{seed, CutLossSpec{intervals[uniform_index(rng, intervals.size())]}};
}

inline double sample_loss(const Graph& g, const MpnnParams& params, const Sample& s,
                          MpnnParams* grad_out) {
  MpnnCache cache;
  const NodeDistribution p = mpnn_forward(g, params, s.seed, &cache);
  const LossEvaluation eval = evaluate_loss(g, s.spec, p);
  if (!std::isfinite(eval.value)) throw Error("training loss became non-finite");
  if (grad_out) {
    const MpnnParams grad = mpnn_backward(g, params, cache, eval.gradient);
    auto acc = grad_out->values();
    const auto add = grad.values();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += add[i];
  }
  return eval.value;
}

}  // namespace detail

/**
 * Mini-batch Adam training across a set of graphs. Every epoch shuffles the
 * training graphs and draws a fresh random seed node per graph. Validation
 * uses one fixed seed per graph so losses are comparable across epochs; when
 * there are no validation graphs the training loss stands in.
 */
inline TrainResult train_mpnn(std::span<const Graph> train, std::span<const Graph> validation,
                              const TrainConfig& config, Rng& rng,
                              std::optional<TrainState> resume = std::nullopt) {
  if (train.empty()) throw Error("training set is empty");
  if (config.batch_size == 0) throw Error("batch size must be positive");

  TrainResult result;
  if (resume) {
    if (!(resume->params.shape() == config.shape)) throw Error("checkpoint shape differs from config");
    result.last = std::move(*resume);
  } else {
    result.last.params = MpnnParams::random(config.shape, rng);
    result.last.optimizer = Adam(result.last.params.values().size(), config.adam);
  }
  MpnnParams& params = result.last.params;

  std::vector<detail::Sample> val_samples;
  std::vector<std::size_t> val_index;
  for (std::size_t k = 0; k < validation.size(); ++k) {
    Rng fixed = make_rng(0x7a11da7e, k);
    if (auto s = detail::draw_sample(validation[k], config, fixed)) {
      val_samples.push_back(*s);
      val_index.push_back(k);
    }
  }
  auto validate = [&]() -> std::optional<double> {
    if (val_samples.empty()) return std::nullopt;
    double total = 0.0;
    for (std::size_t k = 0; k < val_samples.size(); ++k) {
      total += detail::sample_loss(validation[val_index[k]], params, val_samples[k], nullptr);
    }
    return total / static_cast<double>(val_samples.size());
  };

  if (auto v0 = validate()) {
    result.best = params;
    result.best_validation_loss = *v0;
    result.best_epoch = result.last.epochs_completed;
  }

  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    // Fresh permutation each epoch so a resumed run sees the same batches.
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[uniform_index(rng, k)]);
    double epoch_total = 0.0;
    std::size_t epoch_count = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      MpnnParams grad(config.shape);
      std::size_t used = 0;
      for (std::size_t b = start; b < end; ++b) {
        const Graph& g = train[order[b]];
        const auto sample = detail::draw_sample(g, config, rng);
        if (!sample) continue;
        epoch_total += detail::sample_loss(g, params, *sample, &grad);
        ++epoch_count;
        ++used;
      }
      if (used == 0) continue;
      for (double& x : grad.values()) x /= static_cast<double>(used);
      result.last.optimizer.step(params.values(), grad.values());
    }
    if (epoch_count == 0) throw Error("no training graph admits a sample for this loss");
    ++result.last.epochs_completed;
    const double train_mean = epoch_total / static_cast<double>(epoch_count);
    result.train_loss.push_back(train_mean);
    const double val = validate().value_or(train_mean);
    result.validation_loss.push_back(val);
    if (val < result.best_validation_loss) {
      result.best = params;
      result.best_validation_loss = val;
      result.best_epoch = result.last.epochs_completed;
    }
  }
  if (result.best.values().empty()) result.best = params;
  return result;
}

}  // namespace probopt
