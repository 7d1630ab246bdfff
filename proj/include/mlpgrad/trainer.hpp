// Squared-error regression and online SGD.
#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mlpgrad/backprop.hpp"
#include "mlpgrad/network.hpp"

namespace mlpgrad {

struct Sample {
  std::vector<double> x;
  std::vector<double> d;
};

struct Dataset {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  void add(std::vector<double> x, std::vector<double> d) {
    if (x.size() != inputs || d.size() != outputs)
      throw std::invalid_argument("sample shape (" + std::to_string(x.size()) + ", " + std::to_string(d.size()) +
                                  ") does not match dataset (" + std::to_string(inputs) + ", " +
                                  std::to_string(outputs) + ")");
    samples.push_back({std::move(x), std::move(d)});
  }
};

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 100;
  std::uint64_t seed = 42;
  bool shuffle = true;
};

struct TrainHistory {
  std::vector<double> epoch_error;  // total error after each epoch
};

struct TrainResult {
  WeightVector weights;
  TrainHistory history;
};

/// 0.5 * sum_o (z_{L,o} - d_o)^2.
inline double error_value(std::span<const double> output, std::span<const double> target) {
  if (output.size() != target.size())
    throw std::invalid_argument("output has " + std::to_string(output.size()) + " entries, target has " +
                                std::to_string(target.size()));
  double sum = 0.0;
  for (std::size_t o = 0; o < output.size(); ++o) {
    const double diff = output[o] - target[o];
    sum += diff * diff;
  }
  return 0.5 * sum;
}

inline double error_value(const ForwardTrace& trace, std::span<const double> target) {
  return error_value(trace.output(), target);
}

inline void check_dataset(const Topology& t, const Dataset& ds) {
  if (ds.inputs != t.inputs() || ds.outputs != t.outputs())
    throw std::invalid_argument("dataset has " + std::to_string(ds.inputs) + " inputs and " +
                                std::to_string(ds.outputs) + " outputs, network expects " +
                                std::to_string(t.inputs()) + " and " + std::to_string(t.outputs()));
}

/// Sum of per-sample errors, accumulated in sample order.
inline double total_error(const Topology& t, std::span<const double> w, const Dataset& ds, Activations phi) {
  check_dataset(t, ds);
  double total = 0.0;
  for (const Sample& s : ds.samples) total += error_value(forward(t, w, s.x, phi), s.d);
  return total;
}

/// Sum of per-sample gradients over the dataset.
inline Gradient total_gradient(const Topology& t, std::span<const double> w, const Dataset& ds, Activations phi) {
  check_dataset(t, ds);
  Gradient g(t.weight_count(), 0.0);
  for (const Sample& s : ds.samples) {
    const Gradient gs = bp_reg(t, w, s.x, s.d, phi);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += gs[k];
  }
  return g;
}

/// w - lr * g. A negative rate is allowed so that a step can be undone.
inline WeightVector sgd_step(std::span<const double> w, std::span<const double> g, double lr) {
  if (w.size() != g.size())
    throw std::invalid_argument("weights have " + std::to_string(w.size()) + " entries, gradient has " +
                                std::to_string(g.size()));
  WeightVector out(w.begin(), w.end());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= lr * g[k];
  return out;
}

/// Sample visiting order for one epoch. The generator is seeded from
/// (seed, epoch) only, so any epoch can be reproduced on its own.
inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch, bool shuffle) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!shuffle || n < 2) return order;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  std::mt19937_64 gen(seq);
  // Fisher-Yates with an explicit bounded draw; std::shuffle is not
  // specified bit-for-bit across implementations.
  for (std::size_t k = n - 1; k > 0; --k) {
    const std::size_t j = static_cast<std::size_t>(unit_uniform(gen) * static_cast<double>(k + 1));
    std::swap(order[k], order[j]);
  }
  return order;
}

/// Plain online SGD starting from init_weights(t, cfg.seed), updating after
/// every sample.
inline TrainResult train(const Topology& t, const Dataset& ds, const TrainConfig& cfg, Activations phi) {
  if (ds.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  if (!(cfg.learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  check_dataset(t, ds);

  TrainResult result;
  result.weights = init_weights(t, cfg.seed);
  result.history.epoch_error.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t k : epoch_order(ds.size(), cfg.seed, epoch, cfg.shuffle)) {
      const Sample& s = ds.samples[k];
      const Gradient g = bp_reg(t, result.weights, s.x, s.d, phi);
      result.weights = sgd_step(result.weights, g, cfg.learning_rate);
    }
    result.history.epoch_error.push_back(total_error(t, result.weights, ds, phi));
  }
  return result;
}

}  // namespace mlpgrad
