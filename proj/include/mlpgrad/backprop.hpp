// Error backpropagation for a single sample.
//
// The loss enters only through the epsilon vector, eps_o = dE/df_o. The error
// coefficient of node (l,i) is
//
//   e_{l,i} = sum_o eps_o phi'_L(u_{L,o}) a(l,i -> L,o)
//
// and the weight gradient is e_{l,i} for biases and e_{l,i} z_{l-1,j}
// otherwise. bp_reg runs the three parts in order: forward pass, backward
// recursion over error coefficients, gradient assembly.
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlpgrad/dac.hpp"
#include "mlpgrad/network.hpp"

namespace mlpgrad {

using EpsilonVector = std::vector<double>;
using TargetVector = std::vector<double>;

/// e_{l,i} for 1 <= l <= L, stored for every layer including the output.
class ErrorCoefficients {
 public:
  explicit ErrorCoefficients(const Topology& t) : layers_(t.layers() + 1) {
    for (std::size_t l = 1; l <= t.layers(); ++l) layers_[l].assign(t.width(l), 0.0);
  }

  double operator()(std::size_t l, std::size_t i) const { return layers_.at(l).at(i - 1); }
  double& operator()(std::size_t l, std::size_t i) { return layers_.at(l).at(i - 1); }

  std::size_t layers() const { return layers_.size() - 1; }
  std::vector<double>& layer(std::size_t l) { return layers_.at(l); }
  const std::vector<double>& layer(std::size_t l) const { return layers_.at(l); }

  std::vector<double> flatten() const {
    std::vector<double> out;
    for (std::size_t l = 1; l < layers_.size(); ++l) out.insert(out.end(), layers_[l].begin(), layers_[l].end());
    return out;
  }

 private:
  std::vector<std::vector<double>> layers_;
};

/// eps_o = z_{L,o} - d_o, the epsilon vector of the squared-error loss.
inline EpsilonVector epsilon_regression(std::span<const double> output, std::span<const double> target) {
  if (output.size() != target.size())
    throw std::invalid_argument("output has " + std::to_string(output.size()) + " entries, target has " +
                                std::to_string(target.size()));
  EpsilonVector eps(output.size());
  for (std::size_t o = 0; o < output.size(); ++o) eps[o] = output[o] - target[o];
  return eps;
}

/// e_{L,o} = eps_o phi'_L(u_{L,o}).
inline std::vector<double> output_error_coefficients(std::span<const double> eps, const ForwardTrace& trace,
                                                     Activation output) {
  const std::size_t L = trace.layers();
  if (L == 0 || eps.size() != trace.pre[L].size())
    throw std::invalid_argument("epsilon length does not match output layer");
  std::vector<double> e(eps.size());
  for (std::size_t o = 0; o < eps.size(); ++o) e[o] = eps[o] * activate_prime(output, trace.pre[L][o]);
  return e;
}

/// Signature of the backward step that produces layer l from layer l+1.
/// Exposed so the verification suite can be run against a deliberately
/// broken recursion.
using BackwardStep = std::function<double(double gain, double weighted_sum)>;

inline double standard_backward_step(double gain, double weighted_sum) { return gain * weighted_sum; }

/// Copies layer L from output_coeffs, then for l = L-1 .. 1:
///   e_{l,i} = phi'_l(u_{l,i}) sum_s w_{l+1,s,i} e_{l+1,s}
inline ErrorCoefficients backpropagate_error_coefficients(const Topology& t, std::span<const double> w,
                                                          const ForwardTrace& trace,
                                                          std::span<const double> output_coeffs,
                                                          Activation hidden,
                                                          const BackwardStep& step = standard_backward_step) {
  check_weights(t, w);
  detail::check_trace(t, trace);
  if (output_coeffs.size() != t.outputs())
    throw std::invalid_argument("output-layer coefficients must have " + std::to_string(t.outputs()) +
                                " entries");
  const std::size_t L = t.layers();
  ErrorCoefficients e(t);
  e.layer(L).assign(output_coeffs.begin(), output_coeffs.end());
  for (std::size_t l = L - 1; l >= 1; --l) {
    const std::vector<double>& next = e.layer(l + 1);
    for (std::size_t i = 1; i <= t.width(l); ++i) {
      double sum = 0.0;
      for (std::size_t s = 1; s <= t.width(l + 1); ++s) sum += w[t.index_of(l + 1, s, i)] * next[s - 1];
      e(l, i) = step(activate_prime(hidden, trace.u(l, i)), sum);
    }
  }
  return e;
}

/// Direct evaluation of the error-coefficient definition from a DAC table.
inline ErrorCoefficients error_coefficients_by_definition(const Topology& t, std::span<const double> eps,
                                                          const ForwardTrace& trace, const DacTable& table,
                                                          Activation output) {
  detail::check_trace(t, trace);
  if (eps.size() != t.outputs()) throw std::invalid_argument("epsilon length does not match output layer");
  if (table.layers() != t.layers() || table.outputs() != t.outputs())
    throw std::invalid_argument("dac table shape does not match topology");
  const std::size_t L = t.layers();
  ErrorCoefficients e(t);
  for (std::size_t l = 1; l <= L; ++l) {
    for (std::size_t i = 1; i <= t.width(l); ++i) {
      double sum = 0.0;
      for (std::size_t o = 1; o <= t.outputs(); ++o)
        sum += eps[o - 1] * activate_prime(output, trace.u(L, o)) * table(l, i, o);
      e(l, i) = sum;
    }
  }
  return e;
}

/// dE/dw_{l,i,0} = e_{l,i}; dE/dw_{l,i,j} = e_{l,i} z_{l-1,j}.
inline Gradient error_gradient(const Topology& t, const ForwardTrace& trace, const ErrorCoefficients& e) {
  detail::check_trace(t, trace);
  if (e.layers() != t.layers()) throw std::invalid_argument("error coefficients do not match topology");
  Gradient g(t.weight_count());
  std::size_t k = 0;
  for (std::size_t l = 1; l <= t.layers(); ++l) {
    if (e.layer(l).size() != t.width(l)) throw std::invalid_argument("error coefficients do not match topology");
    for (std::size_t i = 1; i <= t.width(l); ++i) {
      const double eli = e(l, i);
      g[k++] = eli;
      for (std::size_t j = 1; j <= t.width(l - 1); ++j) g[k++] = eli * trace.z(l - 1, j);
    }
  }
  return g;
}

/// Gradient for an arbitrary loss, given its epsilon vector at this trace.
inline Gradient gradient_from_epsilon(const Topology& t, std::span<const double> w, const ForwardTrace& trace,
                                      std::span<const double> eps, Activations phi,
                                      const BackwardStep& step = standard_backward_step) {
  const std::vector<double> top = output_error_coefficients(eps, trace, phi.output);
  const ErrorCoefficients e = backpropagate_error_coefficients(t, w, trace, top, phi.hidden, step);
  return error_gradient(t, trace, e);
}

/// Gradient of 0.5 * ||f(x; w) - d||^2 with respect to w.
inline Gradient bp_reg(const Topology& t, std::span<const double> w, std::span<const double> x,
                       std::span<const double> d, Activations phi) {
  if (d.size() != t.outputs())
    throw std::invalid_argument("target has " + std::to_string(d.size()) + " entries, network has " +
                                std::to_string(t.outputs()) + " outputs");
  const ForwardTrace trace = forward(t, w, x, phi);
  const EpsilonVector eps = epsilon_regression(trace.output(), d);
  return gradient_from_epsilon(t, w, trace, eps, phi);
}

}  // namespace mlpgrad
