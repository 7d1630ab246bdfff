// Derivative amplification coefficients.
//
// a(l,i -> r,t) is the factor by which a change in the pre-activation u_{l,i}
// reaches the pre-activation u_{r,t}. It is defined layer-by-layer going
// forward from (l,i):
//
//   a(l,i -> l,t) = [i == t]
//   a(l,i -> r,t) = sum_j w_{r,t,j} phi'_{r-1}(u_{r-1,j}) a(l,i -> r-1,j),  l < r
//
// and satisfies the backward identity
//
//   a(l,i -> r,t) = phi'_l(u_{l,i}) sum_s w_{l+1,s,i} a(l+1,s -> r,t),      l < r
//
// which is what makes the output-layer table cheap to build. Both routes are
// provided here so one can certify the other.
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlpgrad/network.hpp"

namespace mlpgrad {

/// a(l,i -> L,o) for every computed node (l,i) and every output o.
class DacTable {
 public:
  explicit DacTable(const Topology& t) : outputs_(t.outputs()), rows_(t.layers() + 1) {
    for (std::size_t l = 1; l <= t.layers(); ++l) rows_[l].assign(t.width(l) * outputs_, 0.0);
  }

  double operator()(std::size_t l, std::size_t i, std::size_t o) const { return rows_[l][slot(l, i, o)]; }
  double& operator()(std::size_t l, std::size_t i, std::size_t o) { return rows_[l][slot(l, i, o)]; }

  std::size_t layers() const { return rows_.size() - 1; }
  std::size_t outputs() const { return outputs_; }
  std::size_t width(std::size_t l) const { return rows_.at(l).size() / outputs_; }

  /// All entries, layer-major, then node, then output.
  std::vector<double> flatten() const {
    std::vector<double> out;
    for (std::size_t l = 1; l < rows_.size(); ++l) out.insert(out.end(), rows_[l].begin(), rows_[l].end());
    return out;
  }

 private:
  std::size_t slot(std::size_t l, std::size_t i, std::size_t o) const {
    if (l < 1 || l >= rows_.size()) throw std::out_of_range("dac table: layer out of range");
    if (o < 1 || o > outputs_) throw std::out_of_range("dac table: output out of range");
    const std::size_t k = (i - 1) * outputs_ + (o - 1);
    if (i < 1 || k >= rows_[l].size()) throw std::out_of_range("dac table: node out of range");
    return k;
  }

  std::size_t outputs_;
  std::vector<std::vector<double>> rows_;
};

namespace detail {

inline double dac_recursive(const Topology& t, std::span<const double> w, const ForwardTrace& trace,
                            Activations phi, std::size_t l, std::size_t i, std::size_t r, std::size_t tgt) {
  if (r == l) return i == tgt ? 1.0 : 0.0;
  const Activation below = phi.at(t, r - 1);
  double sum = 0.0;
  for (std::size_t j = 1; j <= t.width(r - 1); ++j)
    sum += weight(t, w, r, tgt, j) * activate_prime(below, trace.u(r - 1, j)) *
           dac_recursive(t, w, trace, phi, l, i, r - 1, j);
  return sum;
}

inline void check_trace(const Topology& t, const ForwardTrace& trace) {
  if (trace.layers() != t.layers()) throw std::invalid_argument("trace depth does not match topology");
  for (std::size_t l = 0; l <= t.layers(); ++l) {
    if (trace.act[l].size() != t.width(l) || (l > 0 && trace.pre[l].size() != t.width(l)))
      throw std::invalid_argument("trace layer " + std::to_string(l) + " does not match topology");
  }
}

}  // namespace detail

/// Literal evaluation of the forward-defined recursion, no memoisation.
/// Cost grows like the product of the intermediate widths.
inline double dac_by_definition(const Topology& t, std::span<const double> w, const ForwardTrace& trace,
                                Activations phi, std::size_t l, std::size_t i, std::size_t r,
                                std::size_t tgt) {
  check_weights(t, w);
  detail::check_trace(t, trace);
  if (l < 1 || r < l || r > t.layers()) throw std::out_of_range("dac: require 1 <= l <= r <= L");
  if (i < 1 || i > t.width(l)) throw std::out_of_range("dac: source node out of range");
  if (tgt < 1 || tgt > t.width(r)) throw std::out_of_range("dac: target node out of range");
  return detail::dac_recursive(t, w, trace, phi, l, i, r, tgt);
}

/// Output-layer coefficients by the backward recursion, one sweep from L
/// down to 1.
inline DacTable dac_backward_table(const Topology& t, std::span<const double> w, const ForwardTrace& trace,
                                   Activations phi) {
  check_weights(t, w);
  detail::check_trace(t, trace);
  const std::size_t L = t.layers();
  const std::size_t m = t.outputs();
  DacTable table(t);
  for (std::size_t o = 1; o <= m; ++o) table(L, o, o) = 1.0;
  for (std::size_t l = L - 1; l >= 1; --l) {
    const Activation f = phi.at(t, l);
    for (std::size_t i = 1; i <= t.width(l); ++i) {
      const double gain = activate_prime(f, trace.u(l, i));
      for (std::size_t o = 1; o <= m; ++o) {
        double sum = 0.0;
        for (std::size_t s = 1; s <= t.width(l + 1); ++s) sum += weight(t, w, l + 1, s, i) * table(l + 1, s, o);
        table(l, i, o) = gain * sum;
      }
    }
  }
  return table;
}

/// Dense m x weight_count matrix of output partials. Rows use 1-based output
/// indices, columns are flat weight positions.
class Jacobian {
 public:
  Jacobian(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  double operator()(std::size_t o, std::size_t k) const { return data_.at((o - 1) * cols_ + k); }
  double& operator()(std::size_t o, std::size_t k) { return data_.at((o - 1) * cols_ + k); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t o) const {
    return std::span<const double>(data_).subspan((o - 1) * cols_, cols_);
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

/// df_o/dw_{l,i,j} = phi'_L(u_{L,o}) * a(l,i -> L,o) * p, with p = 1 for the
/// bias and z_{l-1,j} otherwise.
inline Jacobian output_jacobian_wrt_weights(const Topology& t, std::span<const double> w,
                                            const ForwardTrace& trace, const DacTable& table,
                                            Activations phi) {
  check_weights(t, w);
  detail::check_trace(t, trace);
  if (table.layers() != t.layers() || table.outputs() != t.outputs())
    throw std::invalid_argument("dac table shape does not match topology");
  const std::size_t L = t.layers();
  Jacobian jac(t.outputs(), t.weight_count());
  for (std::size_t o = 1; o <= t.outputs(); ++o) {
    const double out_gain = activate_prime(phi.output, trace.u(L, o));
    for (std::size_t l = 1; l <= L; ++l) {
      for (std::size_t i = 1; i <= t.width(l); ++i) {
        const double a = out_gain * table(l, i, o);
        const std::size_t base = t.index_of(l, i, 0);
        jac(o, base) = a;
        for (std::size_t j = 1; j <= t.width(l - 1); ++j) jac(o, base + j) = a * trace.z(l - 1, j);
      }
    }
  }
  return jac;
}

}  // namespace mlpgrad
