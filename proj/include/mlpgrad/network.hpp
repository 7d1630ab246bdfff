// Multilayer perceptron topology, flat weight layout, activations and the
// forward pass.
//
// Node and weight indices follow the usual layered convention: layer 0 is the
// input, layers 1..L are computed, neurons are numbered from 1 and input index
// j = 0 of every neuron is its bias. Only positions in the flat weight vector
// are 0-based.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mlpgrad {

using WeightVector = std::vector<double>;
using Gradient = std::vector<double>;

/// Position of a single weight w_{l,i,j}.
struct WeightIndex {
  std::size_t layer = 0;
  std::size_t neuron = 0;
  std::size_t input = 0;

  friend bool operator==(const WeightIndex&, const WeightIndex&) = default;
};

class Topology {
 public:
  /// Throws std::invalid_argument unless there are at least two layers and
  /// every width is positive.
  explicit Topology(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2)
      throw std::invalid_argument("topology needs an input and at least one computed layer");
    for (std::size_t w : widths_)
      if (w == 0) throw std::invalid_argument("layer widths must be positive");
    offsets_.assign(widths_.size() + 1, 0);
    for (std::size_t l = 1; l < widths_.size(); ++l)
      offsets_[l + 1] = offsets_[l] + (1 + widths_[l - 1]) * widths_[l];
  }

  /// Number of computed layers L (hidden + output).
  std::size_t layers() const { return widths_.size() - 1; }
  std::size_t width(std::size_t l) const { return widths_.at(l); }
  std::size_t inputs() const { return widths_.front(); }
  std::size_t outputs() const { return widths_.back(); }
  const std::vector<std::size_t>& widths() const { return widths_; }

  /// Sum over l of (1 + h_{l-1}) * h_l.
  std::size_t weight_count() const { return offsets_.back(); }

  /// Total number of computed nodes, sum of h_1..h_L.
  std::size_t node_count() const {
    std::size_t total = 0;
    for (std::size_t l = 1; l < widths_.size(); ++l) total += widths_[l];
    return total;
  }

  /// Flat position of the first weight of layer l.
  std::size_t layer_offset(std::size_t l) const {
    if (l < 1 || l > layers()) throw std::out_of_range("layer index out of range");
    return offsets_[l];
  }

  std::size_t index_of(std::size_t l, std::size_t i, std::size_t j) const {
    if (l < 1 || l > layers()) throw std::out_of_range("layer index out of range");
    if (i < 1 || i > widths_[l]) throw std::out_of_range("neuron index out of range");
    if (j > widths_[l - 1]) throw std::out_of_range("input index out of range");
    return offsets_[l] + (i - 1) * (1 + widths_[l - 1]) + j;
  }

  std::size_t index_of(const WeightIndex& k) const { return index_of(k.layer, k.neuron, k.input); }

  /// Inverse of index_of.
  WeightIndex position(std::size_t flat) const {
    if (flat >= weight_count()) throw std::out_of_range("flat weight index out of range");
    std::size_t l = 1;
    while (offsets_[l + 1] <= flat) ++l;
    const std::size_t fan_in = 1 + widths_[l - 1];
    const std::size_t local = flat - offsets_[l];
    return {l, local / fan_in + 1, local % fan_in};
  }

  friend bool operator==(const Topology& a, const Topology& b) { return a.widths_ == b.widths_; }

 private:
  std::vector<std::size_t> widths_;
  std::vector<std::size_t> offsets_;
};

/// Validating factory for untrusted width lists (CLI, files).
inline Topology build_topology(std::span<const long long> widths) {
  if (widths.size() < 2)
    throw std::invalid_argument("topology needs at least 2 layer widths, got " +
                                std::to_string(widths.size()));
  std::vector<std::size_t> out;
  out.reserve(widths.size());
  for (long long w : widths) {
    if (w < 1) throw std::invalid_argument("layer width must be >= 1, got " + std::to_string(w));
    out.push_back(static_cast<std::size_t>(w));
  }
  return Topology(std::move(out));
}

inline Topology build_topology(std::initializer_list<long long> widths) {
  return build_topology(std::span<const long long>(widths.begin(), widths.size()));
}

inline std::size_t weight_count(const Topology& t) { return t.weight_count(); }

inline std::size_t index_of(const Topology& t, std::size_t l, std::size_t i, std::size_t j) {
  return t.index_of(l, i, j);
}

// ---------------------------------------------------------------------------
// Activations

enum class Activation { identity, sigmoid, tanh, relu };

inline double activate(Activation k, double v) {
  switch (k) {
    case Activation::identity:
      return v;
    case Activation::sigmoid:
      if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
      else {
        const double e = std::exp(v);
        return e / (1.0 + e);
      }
    case Activation::tanh:
      return std::tanh(v);
    case Activation::relu:
      return v > 0 ? v : 0.0;
  }
  throw std::logic_error("unknown activation");
}

/// relu'(0) is taken to be 0.
inline double activate_prime(Activation k, double v) {
  switch (k) {
    case Activation::identity:
      return 1.0;
    case Activation::sigmoid: {
      const double s = activate(Activation::sigmoid, v);
      return s * (1.0 - s);
    }
    case Activation::tanh: {
      const double t = std::tanh(v);
      return 1.0 - t * t;
    }
    case Activation::relu:
      return v > 0 ? 1.0 : 0.0;
  }
  throw std::logic_error("unknown activation");
}

inline std::string_view to_string(Activation k) {
  switch (k) {
    case Activation::identity: return "identity";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "?";
}

/// Throws std::invalid_argument naming the token when it is not recognised.
inline Activation parse_activation(std::string_view name) {
  for (Activation k : {Activation::identity, Activation::sigmoid, Activation::tanh, Activation::relu})
    if (name == to_string(k)) return k;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

/// One activation shared by every hidden layer and one for the output layer.
struct Activations {
  Activation hidden = Activation::tanh;
  Activation output = Activation::identity;

  Activation at(const Topology& t, std::size_t l) const { return l == t.layers() ? output : hidden; }

  friend bool operator==(const Activations&, const Activations&) = default;
};

// ---------------------------------------------------------------------------
// Forward pass

/// Pre-activations u_{l,i} (l = 1..L) and activations z_{l,i} (l = 0..L) for
/// one input. Accessors take 1-based neuron indices.
struct ForwardTrace {
  std::vector<std::vector<double>> pre;  // pre[0] is empty
  std::vector<std::vector<double>> act;  // act[0] is the input

  double u(std::size_t l, std::size_t i) const { return pre.at(l).at(i - 1); }
  double z(std::size_t l, std::size_t i) const { return act.at(l).at(i - 1); }
  std::size_t layers() const { return act.size() - 1; }
  const std::vector<double>& output() const { return act.back(); }
};

inline double weight(const Topology& t, std::span<const double> w, std::size_t l, std::size_t i,
                     std::size_t j) {
  return w[t.index_of(l, i, j)];
}

inline void check_weights(const Topology& t, std::span<const double> w) {
  if (w.size() != t.weight_count())
    throw std::invalid_argument("weight vector has " + std::to_string(w.size()) +
                                " entries, topology needs " + std::to_string(t.weight_count()));
}

inline ForwardTrace forward(const Topology& t, std::span<const double> w, std::span<const double> x,
                            Activations phi) {
  check_weights(t, w);
  if (x.size() != t.inputs())
    throw std::invalid_argument("input has " + std::to_string(x.size()) + " entries, network expects " +
                                std::to_string(t.inputs()));
  const std::size_t L = t.layers();
  ForwardTrace trace;
  trace.pre.resize(L + 1);
  trace.act.resize(L + 1);
  trace.act[0].assign(x.begin(), x.end());
  for (std::size_t l = 1; l <= L; ++l) {
    const std::size_t fan_in = t.width(l - 1);
    const Activation f = phi.at(t, l);
    const std::vector<double>& prev = trace.act[l - 1];
    auto& u = trace.pre[l];
    auto& z = trace.act[l];
    u.resize(t.width(l));
    z.resize(t.width(l));
    std::size_t k = t.layer_offset(l);
    for (std::size_t i = 0; i < t.width(l); ++i) {
      double sum = w[k++];
      for (std::size_t j = 0; j < fan_in; ++j) sum += w[k++] * prev[j];
      u[i] = sum;
      z[i] = activate(f, sum);
    }
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Initialisation

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw. Used
/// instead of std::uniform_real_distribution so sequences are identical
/// across standard library implementations.
inline double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(gen);
}

/// Each w_{l,i,j} uniform in [-r, r] with r = 1/sqrt(1 + h_{l-1}).
inline WeightVector init_weights(const Topology& t, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  WeightVector w(t.weight_count());
  for (std::size_t l = 1; l <= t.layers(); ++l) {
    const double r = 1.0 / std::sqrt(1.0 + static_cast<double>(t.width(l - 1)));
    const std::size_t begin = t.layer_offset(l);
    const std::size_t end = begin + (1 + t.width(l - 1)) * t.width(l);
    for (std::size_t k = begin; k < end; ++k) w[k] = uniform(gen, -r, r);
  }
  return w;
}

/// Relative error |a - b| / max(1, |a|, |b|).
inline double relative_error(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale;
}

}  // namespace mlpgrad
