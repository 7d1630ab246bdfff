// Central finite-difference oracles and gradient comparison.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlpgrad/dac.hpp"
#include "mlpgrad/network.hpp"
#include "mlpgrad/trainer.hpp"

namespace mlpgrad {

inline constexpr double kDefaultStep = 1e-5;

/// [E(w + h e_k) - E(w - h e_k)] / 2h for every weight k, using two forward
/// passes per entry.
inline Gradient finite_difference_gradient(const Topology& t, std::span<const double> w, std::span<const double> x,
                                           std::span<const double> d, Activations phi, double h = kDefaultStep) {
  if (!(h > 0)) throw std::invalid_argument("finite-difference step must be positive");
  check_weights(t, w);
  WeightVector probe(w.begin(), w.end());
  Gradient g(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    probe[k] = w[k] + h;
    const double plus = error_value(forward(t, probe, x, phi), d);
    probe[k] = w[k] - h;
    const double minus = error_value(forward(t, probe, x, phi), d);
    probe[k] = w[k];
    g[k] = (plus - minus) / (2 * h);
  }
  return g;
}

/// Central differences of every network output f_o with respect to every weight.
inline Jacobian finite_difference_output_jacobian(const Topology& t, std::span<const double> w,
                                                  std::span<const double> x, Activations phi,
                                                  double h = kDefaultStep) {
  if (!(h > 0)) throw std::invalid_argument("finite-difference step must be positive");
  check_weights(t, w);
  WeightVector probe(w.begin(), w.end());
  Jacobian jac(t.outputs(), w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    probe[k] = w[k] + h;
    const std::vector<double> plus = forward(t, probe, x, phi).output();
    probe[k] = w[k] - h;
    const std::vector<double> minus = forward(t, probe, x, phi).output();
    probe[k] = w[k];
    for (std::size_t o = 1; o <= t.outputs(); ++o) jac(o, k) = (plus[o - 1] - minus[o - 1]) / (2 * h);
  }
  return jac;
}

struct ComparisonFailure {
  std::size_t flat = 0;
  std::optional<WeightIndex> index;
  double a = 0;
  double b = 0;
  double rel = 0;
};

struct ComparisonReport {
  double tolerance = 0;
  double max_relative_error = 0;
  std::size_t worst_flat = 0;
  std::optional<WeightIndex> worst_index;
  std::size_t entry_count = 0;
  std::vector<ComparisonFailure> failures;

  bool passed() const { return failures.empty(); }
};

namespace detail {
// NaN ranks above every number so it is always reported as the worst entry.
inline bool worse(double candidate, double current) {
  return std::isnan(candidate) ? !std::isnan(current) : candidate > current;
}
}  // namespace detail

/// Entrywise relative_error; an entry fails when it exceeds tol. Works on any
/// pair of equally sized sequences.
inline ComparisonReport compare_values(std::span<const double> a, std::span<const double> b, double tol) {
  if (a.size() != b.size())
    throw std::invalid_argument("cannot compare sequences of length " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()));
  ComparisonReport report;
  report.tolerance = tol;
  report.entry_count = a.size();
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double rel = relative_error(a[k], b[k]);
    if (k == 0 || detail::worse(rel, report.max_relative_error)) {
      report.max_relative_error = rel;
      report.worst_flat = k;
    }
    if (!(rel <= tol)) report.failures.push_back({k, std::nullopt, a[k], b[k], rel});
  }
  return report;
}

/// As compare_values, with flat positions mapped back to (l, i, j).
inline ComparisonReport compare_gradients(const Topology& t, std::span<const double> a, std::span<const double> b,
                                          double tol) {
  if (a.size() != t.weight_count() || b.size() != t.weight_count())
    throw std::invalid_argument("gradient length does not match topology");
  ComparisonReport report = compare_values(a, b, tol);
  if (report.entry_count > 0) report.worst_index = t.position(report.worst_flat);
  for (ComparisonFailure& f : report.failures) f.index = t.position(f.flat);
  return report;
}

/// Smallest |u_{l,i}| over all computed nodes.
inline double min_abs_preactivation(const ForwardTrace& trace) {
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t l = 1; l < trace.pre.size(); ++l)
    for (double u : trace.pre[l]) smallest = std::min(smallest, std::abs(u));
  return smallest;
}

}  // namespace mlpgrad
