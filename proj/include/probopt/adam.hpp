#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "probopt/error.hpp"

namespace probopt {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moment accumulators for a flat parameter vector.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t size, AdamConfig config) : config_(config), m_(size, 0.0), v_(size, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
      throw Error("Adam: parameter and gradient sizes must match the optimizer state");
    }
    ++steps_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
      v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
      params[i] -= config_.learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.epsilon);
    }
  }

  const AdamConfig& config() const { return config_; }
  std::uint64_t steps() const { return steps_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }

  /// Rebuilds a saved state, e.g. from a checkpoint.
  static Adam restore(AdamConfig config, std::uint64_t steps, std::vector<double> m,
                      std::vector<double> v) {
    if (m.size() != v.size()) throw Error("Adam: moment vectors differ in size");
    Adam a;
    a.config_ = config;
    a.steps_ = steps;
    a.m_ = std::move(m);
    a.v_ = std::move(v);
    return a;
  }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t steps_ = 0;
};

}  // namespace probopt
