#pragma once

// File formats.
//
// Space (JSON), one of
//   {"points": ["a", "b", ...], "dist": [[0, 1, ...], ...]}
//   {"points_1d": [x0, x1, ...], "metric": "absolute", "labels": [...]?}
//   {"grid_1d": {"lo": -1, "hi": 1, "count": 201}}
// Field (CSV): one finite value per line in point order; blank lines and lines
// starting with '#' are skipped.
// Family (JSON): {"kind": "affine"|"abs_affine"|"shifted"|"norm_family"|"table", ...}
//   affine       "f"?, "b"                 per-point arrays or a single number
//   abs_affine   "a", "b"
//   shifted      "f"?, "h": "abs"|"square"|"max0"|"zero"|{"linear": c}|{"t": [...], "v": [...]}
//   norm_family  "A", "B" (one vector per point), "norm": "euclidean"|"p:<p>"|"max"
//   table        "t": [...], "values": [[p(x_i, t_k) for k] for i]
//   optional     "window": T, "modulus": {"lipschitz": L}
// Matrices (JSON): {"A": [[...]], "B": [[...]], "norm": "euclidean"|"p:<p>"|"max"}
// Envelope dump (CSV): header "t,g,argmax_index", one row per grid point.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "bjext/errors.hpp"
#include "bjext/extension.hpp"
#include "bjext/norms.hpp"
#include "bjext/operators.hpp"
#include "bjext/space.hpp"

namespace bjext::io {

using json = nlohmann::json;

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(origin + ": malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

inline json load_json(const std::string& path) { return parse_json(read_text(path), path); }

namespace detail {

inline double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) throw InputError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError(where + ": NaN/Inf rejected");
  return v;
}

inline std::vector<double> numbers_at(const json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number_at(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

inline std::vector<std::vector<double>> rows_at(const json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected an array of arrays");
  std::vector<std::vector<double>> out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(numbers_at(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

// Per-point values: an array of n numbers or one number broadcast to all points.
inline std::vector<double> per_point(const json& j, std::size_t n, const std::string& where) {
  if (j.is_number()) return std::vector<double>(n, number_at(j, where));
  auto v = numbers_at(j, where);
  if (v.size() != n) {
    throw InputError(where + ": has " + std::to_string(v.size()) + " values, space has " + std::to_string(n) + " points");
  }
  return v;
}

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw InputError(where + ": missing \"" + key + "\"");
  return j.at(key);
}

}  // namespace detail

inline DiscreteMetricSpace space_from_json(const json& j, const std::string& origin = "space") {
  if (!j.is_object()) throw InputError(origin + ": expected a JSON object");
  if (j.contains("points_1d")) {
    if (j.contains("metric") && j.at("metric") != "absolute") {
      throw InputError(origin + ".metric: only \"absolute\" is supported for points_1d");
    }
    auto xs = detail::numbers_at(j.at("points_1d"), origin + ".points_1d");
    std::vector<std::string> labels;
    if (j.contains("labels")) labels = j.at("labels").get<std::vector<std::string>>();
    return DiscreteMetricSpace::from_points_1d(std::move(xs), std::move(labels));
  }
  if (j.contains("grid_1d")) {
    const auto& g = j.at("grid_1d");
    const double lo = detail::number_at(detail::require(g, "lo", origin + ".grid_1d"), origin + ".grid_1d.lo");
    const double hi = detail::number_at(detail::require(g, "hi", origin + ".grid_1d"), origin + ".grid_1d.hi");
    const auto& count = detail::require(g, "count", origin + ".grid_1d");
    if (!count.is_number_unsigned()) throw InputError(origin + ".grid_1d.count: expected a positive integer");
    return DiscreteMetricSpace::interval_grid(lo, hi, count.get<std::size_t>());
  }
  const auto& pts = detail::require(j, "points", origin);
  const auto& dist = detail::require(j, "dist", origin);
  if (!pts.is_array()) throw InputError(origin + ".points: expected an array");
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (pts[k].is_string()) labels.push_back(pts[k].get<std::string>());
    else if (pts[k].is_number()) labels.push_back(pts[k].dump());
    else throw InputError(origin + ".points[" + std::to_string(k) + "]: expected a label or index");
  }
  const auto rows = detail::rows_at(dist, origin + ".dist");
  const std::size_t n = labels.size();
  if (rows.size() != n) throw InputError(origin + ".dist: expected " + std::to_string(n) + " rows");
  std::vector<double> flat;
  flat.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) {
      throw InputError(origin + ".dist[" + std::to_string(i) + "]: expected " + std::to_string(n) + " entries");
    }
    flat.insert(flat.end(), rows[i].begin(), rows[i].end());
  }
  return DiscreteMetricSpace(std::move(labels), std::move(flat));
}

inline DiscreteMetricSpace load_space(const std::string& path) { return space_from_json(load_json(path), path); }

inline std::vector<double> parse_field_csv(const std::string& text, const std::string& origin) {
  std::vector<double> values;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string cell = line.substr(first, last - first + 1);
    double v = 0.0;
    const char* begin = cell.data();
    const char* end = cell.data() + cell.size();
    if (*begin == '+') ++begin;
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end) {
      throw InputError(origin + ":" + std::to_string(line_no) + ": expected one number, got '" + cell + "'");
    }
    if (!std::isfinite(v)) throw InputError(origin + ":" + std::to_string(line_no) + ": NaN/Inf rejected");
    values.push_back(v);
  }
  return values;
}

inline ScalarField load_field(const std::string& path, const SpaceRef& space) {
  auto values = parse_field_csv(read_text(path), path);
  if (values.size() != space->size()) {
    throw InputError(path + ": has " + std::to_string(values.size()) + " values, space has " +
                     std::to_string(space->size()) + " points");
  }
  return ScalarField(space, std::move(values));
}

inline std::string field_csv(const ScalarField& field) {
  std::string out;
  for (double v : field.values()) out += format_number(v) + "\n";
  return out;
}

struct ParsedFamily {
  FamilySpec spec;
  std::optional<std::vector<double>> f;
  std::optional<double> window;
  std::optional<Modulus> modulus;
};

inline ShiftProfile shift_from_json(const json& h, const std::string& where) {
  if (h.is_string()) {
    const auto name = h.get<std::string>();
    if (name == "abs") return ShiftProfile::abs();
    if (name == "square") return ShiftProfile::square();
    if (name == "max0") return ShiftProfile::positive_part();
    if (name == "zero") return ShiftProfile::zero();
    throw InputError(where + ": unknown profile '" + name + "'");
  }
  if (h.is_object() && h.contains("linear")) return ShiftProfile::linear(detail::number_at(h.at("linear"), where + ".linear"));
  if (h.is_object() && h.contains("t") && h.contains("v")) {
    return ShiftProfile::piecewise_linear(detail::numbers_at(h.at("t"), where + ".t"),
                                          detail::numbers_at(h.at("v"), where + ".v"));
  }
  throw InputError(where + ": expected a profile name, {\"linear\": c} or {\"t\": [...], \"v\": [...]}");
}

inline ParsedFamily family_from_json(const json& j, std::size_t n, const std::string& origin = "family") {
  if (!j.is_object()) throw InputError(origin + ": expected a JSON object");
  const auto& kind_json = detail::require(j, "kind", origin);
  if (!kind_json.is_string()) throw InputError(origin + ".kind: expected a string");
  const std::string kind = kind_json.get<std::string>();

  ParsedFamily out{AffineFamily{}, std::nullopt, std::nullopt, std::nullopt};
  if (j.contains("f")) out.f = detail::per_point(j.at("f"), n, origin + ".f");
  if (j.contains("window")) out.window = detail::number_at(j.at("window"), origin + ".window");
  if (j.contains("modulus")) {
    const auto& m = j.at("modulus");
    out.modulus = Modulus::lipschitz(detail::number_at(detail::require(m, "lipschitz", origin + ".modulus"),
                                                       origin + ".modulus.lipschitz"));
  }

  if (kind == "affine") {
    out.spec = AffineFamily{detail::per_point(detail::require(j, "b", origin), n, origin + ".b")};
  } else if (kind == "abs_affine") {
    out.spec = AbsAffineFamily{detail::per_point(detail::require(j, "a", origin), n, origin + ".a"),
                               detail::per_point(detail::require(j, "b", origin), n, origin + ".b")};
  } else if (kind == "shifted") {
    out.spec = ShiftedFamily{shift_from_json(detail::require(j, "h", origin), origin + ".h")};
  } else if (kind == "norm_family") {
    NormFamily fam;
    fam.a = detail::rows_at(detail::require(j, "A", origin), origin + ".A");
    fam.b = detail::rows_at(detail::require(j, "B", origin), origin + ".B");
    fam.norm = NormTag::parse(j.value("norm", std::string("euclidean")));
    out.spec = std::move(fam);
  } else if (kind == "table") {
    out.spec = TableFamily{detail::numbers_at(detail::require(j, "t", origin), origin + ".t"),
                           detail::rows_at(detail::require(j, "values", origin), origin + ".values")};
  } else {
    throw InputError(origin + ".kind: unknown family '" + kind + "'");
  }
  return out;
}

inline MatrixPair matrices_from_json(const json& j, const std::string& origin = "matrices") {
  auto to_matrix = [&](const char* key) {
    const auto rows = detail::rows_at(detail::require(j, key, origin), origin + "." + key);
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      if (static_cast<Eigen::Index>(rows[r].size()) != n) {
        throw InputError(origin + "." + key + "[" + std::to_string(r) + "]: matrix must be square");
      }
      for (Eigen::Index c = 0; c < n; ++c) m(r, c) = rows[r][c];
    }
    return m;
  };
  return MatrixPair(to_matrix("A"), to_matrix("B"), NormTag::parse(j.value("norm", std::string("euclidean"))));
}

inline std::string envelope_csv(const Envelope& env) {
  std::string out = "t,g,argmax_index\n";
  for (std::size_t k = 0; k < env.t_grid.size(); ++k) {
    out += format_number(env.t_grid[k]) + "," + format_number(env.values[k]) + "," + std::to_string(env.argmax[k]) + "\n";
  }
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("write to '" + path + "' failed");
}

}  // namespace bjext::io
