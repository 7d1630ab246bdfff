// Randomised oracle-equivalence suite.
//
// Every trial draws one network instance (topology, activations, weights,
// input, target) and checks each property on it. The same suite backs the
// `mlpgrad verify` subcommand and the acceptance tests.
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mlpgrad/backprop.hpp"
#include "mlpgrad/dac.hpp"
#include "mlpgrad/gradcheck.hpp"
#include "mlpgrad/network.hpp"

namespace mlpgrad {

/// A network together with one evaluation point.
struct Instance {
  Topology topology;
  Activations activations;
  WeightVector weights;
  std::vector<double> x;
  std::vector<double> d;
  std::uint64_t seed = 0;
};

/// splitmix64 finaliser; turns (base seed, trial) into independent seeds.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::size_t uniform_index(std::mt19937_64& gen, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(unit_uniform(gen) * static_cast<double>(hi - lo + 1));
}

/// Weights, input and target uniform in [-1, 1] for a fixed topology.
inline Instance random_instance(const Topology& t, Activations phi, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Instance inst{t, phi, WeightVector(t.weight_count()), std::vector<double>(t.inputs()),
                std::vector<double>(t.outputs()), seed};
  for (double& v : inst.weights) v = uniform(gen, -1, 1);
  for (double& v : inst.x) v = uniform(gen, -1, 1);
  for (double& v : inst.d) v = uniform(gen, -1, 1);
  return inst;
}

inline constexpr Activation kSmoothActivations[] = {Activation::identity, Activation::sigmoid, Activation::tanh};

/// 1..max_layers computed layers, every width in 1..max_width, smooth
/// activations chosen independently for hidden and output layers.
inline Instance random_instance(std::size_t max_layers, std::size_t max_width, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const std::size_t L = uniform_index(gen, 1, max_layers);
  std::vector<std::size_t> widths(L + 1);
  for (std::size_t& h : widths) h = uniform_index(gen, 1, max_width);
  Activations phi{kSmoothActivations[uniform_index(gen, 0, 2)], kSmoothActivations[uniform_index(gen, 0, 2)]};
  return random_instance(Topology(std::move(widths)), phi, gen());
}

inline std::string describe(const Topology& t) {
  std::string s;
  for (std::size_t k = 0; k < t.widths().size(); ++k) s += (k ? "-" : "") + std::to_string(t.width(k));
  return s;
}

inline std::string describe(const Instance& inst) {
  std::ostringstream out;
  out << "topology " << describe(inst.topology) << ", " << to_string(inst.activations.hidden) << '/'
      << to_string(inst.activations.output) << ", seed " << inst.seed;
  return out.str();
}

namespace detail {
inline double worst_of(double current, double candidate) { return worse(candidate, current) ? candidate : current; }
}  // namespace detail

// ---------------------------------------------------------------------------
// Individual checks. Each returns the largest relative error it observed.

/// Backward table against the literal recursion, every (l, i, o).
inline double check_dac_table(const Instance& inst) {
  const auto& [t, phi, w, x, d, seed] = inst;
  const ForwardTrace trace = forward(t, w, x, phi);
  const DacTable table = dac_backward_table(t, w, trace, phi);
  double worst = 0;
  for (std::size_t l = 1; l <= t.layers(); ++l)
    for (std::size_t i = 1; i <= t.width(l); ++i)
      for (std::size_t o = 1; o <= t.outputs(); ++o)
        worst = detail::worst_of(worst, relative_error(table(l, i, o), dac_by_definition(t, w, trace, phi, l, i, t.layers(), o)));
  return worst;
}

/// Backward identity for every pair l < r, all nodes, both sides evaluated by
/// the definition.
inline double check_dac_identity(const Instance& inst) {
  const auto& [t, phi, w, x, d, seed] = inst;
  const ForwardTrace trace = forward(t, w, x, phi);
  double worst = 0;
  for (std::size_t l = 1; l < t.layers(); ++l)
    for (std::size_t r = l + 1; r <= t.layers(); ++r)
      for (std::size_t i = 1; i <= t.width(l); ++i)
        for (std::size_t tgt = 1; tgt <= t.width(r); ++tgt) {
          double sum = 0;
          for (std::size_t s = 1; s <= t.width(l + 1); ++s)
            sum += weight(t, w, l + 1, s, i) * dac_by_definition(t, w, trace, phi, l + 1, s, r, tgt);
          const double rhs = activate_prime(phi.at(t, l), trace.u(l, i)) * sum;
          worst = detail::worst_of(worst, relative_error(dac_by_definition(t, w, trace, phi, l, i, r, tgt), rhs));
        }
  return worst;
}

inline double check_error_coefficients(const Instance& inst, const BackwardStep& step = standard_backward_step) {
  const auto& [t, phi, w, x, d, seed] = inst;
  const ForwardTrace trace = forward(t, w, x, phi);
  const EpsilonVector eps = epsilon_regression(trace.output(), d);
  const ErrorCoefficients fast =
      backpropagate_error_coefficients(t, w, trace, output_error_coefficients(eps, trace, phi.output), phi.hidden, step);
  const ErrorCoefficients oracle =
      error_coefficients_by_definition(t, eps, trace, dac_backward_table(t, w, trace, phi), phi.output);
  return compare_values(fast.flatten(), oracle.flatten(), 0).max_relative_error;
}

/// sum_o eps_o * J[o], the output-Jacobian route to dE/dw.
inline Gradient gradient_via_jacobian(const Topology& t, std::span<const double> w, const ForwardTrace& trace,
                                      std::span<const double> eps, Activations phi) {
  const Jacobian jac = output_jacobian_wrt_weights(t, w, trace, dac_backward_table(t, w, trace, phi), phi);
  Gradient g(t.weight_count(), 0.0);
  for (std::size_t o = 1; o <= t.outputs(); ++o)
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += eps[o - 1] * jac(o, k);
  return g;
}

inline double check_gradient_vs_jacobian(const Instance& inst, const BackwardStep& step = standard_backward_step) {
  const auto& [t, phi, w, x, d, seed] = inst;
  const ForwardTrace trace = forward(t, w, x, phi);
  const EpsilonVector eps = epsilon_regression(trace.output(), d);
  const Gradient fast = gradient_from_epsilon(t, w, trace, eps, phi, step);
  return compare_values(fast, gradient_via_jacobian(t, w, trace, eps, phi), 0).max_relative_error;
}

inline double check_gradient_vs_fd(const Instance& inst, const BackwardStep& step = standard_backward_step,
                                   double h = kDefaultStep) {
  const auto& [t, phi, w, x, d, seed] = inst;
  const ForwardTrace trace = forward(t, w, x, phi);
  const Gradient fast = gradient_from_epsilon(t, w, trace, epsilon_regression(trace.output(), d), phi, step);
  return compare_values(fast, finite_difference_gradient(t, w, x, d, phi, h), 0).max_relative_error;
}

inline double check_jacobian_vs_fd(const Instance& inst, double h = kDefaultStep) {
  const auto& [t, phi, w, x, d, seed] = inst;
  const ForwardTrace trace = forward(t, w, x, phi);
  const Jacobian jac = output_jacobian_wrt_weights(t, w, trace, dac_backward_table(t, w, trace, phi), phi);
  const Jacobian fd = finite_difference_output_jacobian(t, w, x, phi, h);
  double worst = 0;
  for (std::size_t o = 1; o <= t.outputs(); ++o)
    worst = detail::worst_of(worst, compare_values(jac.row(o), fd.row(o), 0).max_relative_error);
  return worst;
}

/// On a 2-3-2-1 network:
///   a(1,2 -> 3,1) = phi'_1(u_{1,2}) (w_{2,1,2} a(2,1 -> 3,1) + w_{2,2,2} a(2,2 -> 3,1))
/// with every coefficient taken from the definition.
inline double check_worked_identity(const Instance& inst) {
  const auto& [t, phi, w, x, d, seed] = inst;
  if (t.widths() != std::vector<std::size_t>{2, 3, 2, 1})
    throw std::invalid_argument("worked identity needs a 2-3-2-1 network");
  const ForwardTrace trace = forward(t, w, x, phi);
  auto a = [&](std::size_t l, std::size_t i) { return dac_by_definition(t, w, trace, phi, l, i, 3, 1); };
  const double rhs =
      activate_prime(phi.hidden, trace.u(1, 2)) * (weight(t, w, 2, 1, 2) * a(2, 1) + weight(t, w, 2, 2, 2) * a(2, 2));
  return relative_error(a(1, 2), rhs);
}

// ---------------------------------------------------------------------------
// Suite

struct VerifyOptions {
  std::size_t max_layers = 4;
  std::size_t max_width = 6;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  /// Replaces the error-coefficient recursion; lets tests confirm the suite
  /// notices a broken implementation.
  BackwardStep backward_step = standard_backward_step;
};

struct PropertyResult {
  std::string name;
  double tolerance = 0;
  std::size_t instances = 0;
  double worst_error = 0;
  std::string worst_instance;
  std::string first_failure;  // empty when the property held everywhere

  bool passed() const { return first_failure.empty(); }
};

struct VerifyReport {
  std::vector<PropertyResult> properties;

  bool passed() const {
    for (const auto& p : properties)
      if (!p.passed()) return false;
    return true;
  }
  const PropertyResult* find(std::string_view name) const {
    for (const auto& p : properties)
      if (p.name == name) return &p;
    return nullptr;
  }
};

inline constexpr double kExactTolerance = 1e-12;
inline constexpr double kFiniteDifferenceTolerance = 1e-6;

namespace detail {

inline void record(PropertyResult& p, double err, const Instance& inst) {
  ++p.instances;
  if (p.instances == 1 || worse(err, p.worst_error)) {
    p.worst_error = err;
    p.worst_instance = describe(inst);
  }
  if (!(err <= p.tolerance) && p.first_failure.empty()) p.first_failure = describe(inst);
}

}  // namespace detail

inline VerifyReport run_verification(const VerifyOptions& opt) {
  if (opt.max_layers < 1 || opt.max_width < 1) throw std::invalid_argument("max layers and width must be >= 1");
  VerifyReport report;
  auto add = [&](std::string name, double tol) -> PropertyResult& {
    PropertyResult& p = report.properties.emplace_back();
    p.name = std::move(name);
    p.tolerance = tol;
    return p;
  };
  add("dac-backward-table", kExactTolerance);
  add("dac-backward-identity", kExactTolerance);
  add("error-coefficient-recursion", kExactTolerance);
  add("gradient-vs-jacobian", kExactTolerance);
  add("gradient-vs-finite-differences", kFiniteDifferenceTolerance);
  add("jacobian-vs-finite-differences", kFiniteDifferenceTolerance);
  add("worked-2-3-2-1-identity", kExactTolerance);
  auto& props = report.properties;

  const Topology worked({2, 3, 2, 1});
  for (std::size_t trial = 0; trial < opt.trials; ++trial) {
    const Instance inst = random_instance(opt.max_layers, opt.max_width, mix_seed(opt.seed, trial));
    detail::record(props[0], check_dac_table(inst), inst);
    detail::record(props[1], check_dac_identity(inst), inst);
    detail::record(props[2], check_error_coefficients(inst, opt.backward_step), inst);
    detail::record(props[3], check_gradient_vs_jacobian(inst, opt.backward_step), inst);
    detail::record(props[4], check_gradient_vs_fd(inst, opt.backward_step), inst);
    detail::record(props[5], check_jacobian_vs_fd(inst), inst);

    std::mt19937_64 gen(mix_seed(opt.seed ^ 0x5eedULL, trial));
    Activations phi{kSmoothActivations[uniform_index(gen, 0, 2)], kSmoothActivations[uniform_index(gen, 0, 2)]};
    const Instance small = random_instance(worked, phi, gen());
    detail::record(props[6], check_worked_identity(small), small);
  }
  return report;
}

}  // namespace mlpgrad
