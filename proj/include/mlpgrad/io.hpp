// Text formats: shortest round-trip number formatting, CSV datasets and the
// line-oriented model file.
//
// Model file layout:
//
//   layers: 2 3 2 1
//   hidden_activation: tanh
//   output_activation: identity
//   <one weight per line, flat index order>
#pragma once

#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mlpgrad/network.hpp"
#include "mlpgrad/trainer.hpp"

namespace mlpgrad {

/// Raised for malformed text input. The message names the line or token.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("cannot format number");
  return std::string(buf, end);
}

inline std::string format_row(std::span<const double> values, char sep = ',') {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += sep;
    out += format_double(values[k]);
  }
  return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace detail

/// Strict parse of a whole token as a double; false on any trailing garbage.
inline bool parse_double(std::string_view token, double& out) {
  token = detail::trim(token);
  if (token.empty()) return false;
  if (token.front() == '+') token.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc{} && ptr == token.data() + token.size();
}

inline bool parse_integer(std::string_view token, long long& out) {
  token = detail::trim(token);
  if (token.empty()) return false;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc{} && ptr == token.data() + token.size();
}

/// Comma-separated list of doubles, e.g. "0.5,1,-2".
inline std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  for (std::string_view field : detail::split(text, ',')) {
    double v = 0;
    if (!parse_double(field, v)) throw FormatError("not a number: '" + std::string(detail::trim(field)) + "'");
    out.push_back(v);
  }
  return out;
}

/// Each row holds n input fields followed by m target fields. Blank lines are
/// ignored; rows are numbered by their line in the source.
inline Dataset load_dataset(std::string_view text, std::size_t n, std::size_t m, bool skip_header = false) {
  Dataset ds{n, m, {}};
  const auto lines = detail::split_lines(text);
  for (std::size_t row = 0; row < lines.size(); ++row) {
    if (row == 0 && skip_header) continue;
    const std::string_view line = detail::trim(lines[row]);
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != n + m)
      throw FormatError("row " + std::to_string(row + 1) + ": expected " + std::to_string(n + m) +
                        " fields, got " + std::to_string(fields.size()));
    std::vector<double> values(fields.size());
    for (std::size_t k = 0; k < fields.size(); ++k)
      if (!parse_double(fields[k], values[k]))
        throw FormatError("row " + std::to_string(row + 1) + ": field " + std::to_string(k + 1) +
                          " is not numeric: '" + std::string(detail::trim(fields[k])) + "'");
    ds.add(std::vector<double>(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n)),
           std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(n), values.end()));
  }
  return ds;
}

struct Model {
  Topology topology;
  Activations activations;
  WeightVector weights;
};

inline std::string save_model(const Topology& t, Activations phi, std::span<const double> w) {
  check_weights(t, w);
  std::ostringstream out;
  out << "layers:";
  for (std::size_t h : t.widths()) out << ' ' << h;
  out << "\nhidden_activation: " << to_string(phi.hidden) << "\noutput_activation: " << to_string(phi.output)
      << '\n';
  for (double v : w) out << format_double(v) << '\n';
  return out.str();
}

inline std::string save_model(const Model& model) {
  return save_model(model.topology, model.activations, model.weights);
}

namespace detail {

inline std::string_view header_value(std::string_view line, std::string_view key, std::size_t lineno) {
  line = trim(line);
  if (line.substr(0, key.size()) != key || line.size() <= key.size() || line[key.size()] != ':')
    throw FormatError("malformed header line " + std::to_string(lineno) + ": expected '" + std::string(key) +
                      ":'");
  return trim(line.substr(key.size() + 1));
}

inline Activation header_activation(std::string_view line, std::string_view key, std::size_t lineno) {
  const std::string_view token = header_value(line, key, lineno);
  try {
    return parse_activation(token);
  } catch (const std::invalid_argument&) {
    throw FormatError("unknown activation '" + std::string(token) + "' on line " + std::to_string(lineno));
  }
}

}  // namespace detail

inline Model load_model(std::string_view text) {
  const auto lines = detail::split_lines(text);
  if (lines.size() < 3) throw FormatError("malformed header: model file needs 3 header lines");

  std::vector<long long> widths;
  std::istringstream layer_fields{std::string(detail::header_value(lines[0], "layers", 1))};
  for (std::string token; layer_fields >> token;) {
    long long h = 0;
    if (!parse_integer(token, h)) throw FormatError("malformed header line 1: bad layer width '" + token + "'");
    widths.push_back(h);
  }
  Topology topology = [&] {
    try {
      return build_topology(widths);
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("malformed header line 1: ") + e.what());
    }
  }();

  Activations phi;
  phi.hidden = detail::header_activation(lines[1], "hidden_activation", 2);
  phi.output = detail::header_activation(lines[2], "output_activation", 3);

  WeightVector w;
  for (std::size_t k = 3; k < lines.size(); ++k) {
    const std::string_view line = detail::trim(lines[k]);
    if (line.empty()) continue;
    double v = 0;
    if (!parse_double(line, v))
      throw FormatError("line " + std::to_string(k + 1) + ": bad weight '" + std::string(line) + "'");
    w.push_back(v);
  }
  if (w.size() != topology.weight_count())
    throw FormatError("weight count mismatch: topology needs " + std::to_string(topology.weight_count()) +
                      ", file has " + std::to_string(w.size()));
  return {std::move(topology), phi, std::move(w)};
}

}  // namespace mlpgrad
