#pragma once

// Finite metric spaces standing in for a compact X, scalar fields on them,
// sup-attaining sets, eps-graph connectivity and the unique-maximizer
// perturbation.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "bjext/errors.hpp"

namespace bjext {

inline constexpr double kTolMetric = 1e-9;

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Label for a point of a one-dimensional space: explicit sign and at least one
/// fractional digit ("+1.0", "-0.25", "+0.0").
inline std::string coordinate_label(double x) {
  std::string s = format_number(x == 0.0 ? 0.0 : x);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  if (s.front() != '-') s.insert(s.begin(), '+');
  return s;
}

class DiscreteMetricSpace {
 public:
  /// `dist` is row-major n x n. Only shape and finiteness are checked here;
  /// the metric axioms are checked by validate_space.
  DiscreteMetricSpace(std::vector<std::string> labels, std::vector<double> dist,
                      std::optional<std::vector<double>> coordinates = std::nullopt)
      : labels_(std::move(labels)), dist_(std::move(dist)), coords_(std::move(coordinates)) {
    const std::size_t n = labels_.size();
    if (n == 0) throw InputError("metric space needs at least one point");
    if (dist_.size() != n * n) {
      throw InputError("distance matrix has " + std::to_string(dist_.size()) + " entries, expected " +
                       std::to_string(n) + "x" + std::to_string(n));
    }
    for (std::size_t k = 0; k < dist_.size(); ++k) {
      if (!std::isfinite(dist_[k])) {
        throw InputError("distance[" + std::to_string(k / n) + "][" + std::to_string(k % n) + "] is not finite");
      }
    }
    if (coords_ && coords_->size() != n) throw InputError("coordinate count differs from point count");
  }

  /// Points x_1 < ... on the real line with d(x,y) = |x - y|.
  static DiscreteMetricSpace from_points_1d(std::vector<double> xs, std::vector<std::string> labels = {}) {
    const std::size_t n = xs.size();
    if (n == 0) throw InputError("points_1d is empty");
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(xs[i])) throw InputError("points_1d[" + std::to_string(i) + "] is not finite");
    }
    if (labels.empty()) {
      labels.reserve(n);
      for (double x : xs) labels.push_back(coordinate_label(x));
    } else if (labels.size() != n) {
      throw InputError("labels and points_1d differ in length");
    }
    std::vector<double> d(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i * n + j] = std::abs(xs[i] - xs[j]);
    return DiscreteMetricSpace(std::move(labels), std::move(d), std::move(xs));
  }

  /// Uniform grid of `count` points on [lo, hi]; endpoints are exact.
  static DiscreteMetricSpace interval_grid(double lo, double hi, std::size_t count) {
    if (count < 2 || !(lo < hi)) throw InputError("interval_grid: need count >= 2 and lo < hi");
    std::vector<double> xs(count);
    for (std::size_t i = 0; i < count; ++i) xs[i] = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
    xs.back() = hi;
    return from_points_1d(std::move(xs));
  }

  std::size_t size() const { return labels_.size(); }
  double distance(std::size_t i, std::size_t j) const { return dist_[i * size() + j]; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::optional<std::vector<double>>& coordinates() const { return coords_; }

  /// Largest nearest-neighbour distance: every point has a neighbour this close.
  /// Zero for a single point.
  double pitch() const {
    const std::size_t n = size();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) nearest = std::min(nearest, distance(i, j));
      if (n > 1) worst = std::max(worst, nearest);
    }
    return worst;
  }

 private:
  std::vector<std::string> labels_;
  std::vector<double> dist_;
  std::optional<std::vector<double>> coords_;
};

using SpaceRef = std::shared_ptr<const DiscreteMetricSpace>;

inline SpaceRef share(DiscreteMetricSpace space) {
  return std::make_shared<const DiscreteMetricSpace>(std::move(space));
}

struct MetricViolation {
  enum class Kind { negative, nonzero_diagonal, asymmetric, coincident, triangle };
  Kind kind;
  std::size_t i = 0, j = 0, k = 0;
  double excess = 0.0;

  std::string describe() const {
    const auto ij = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
    switch (kind) {
      case Kind::negative: return "negative distance at " + ij;
      case Kind::nonzero_diagonal: return "d(" + std::to_string(i) + "," + std::to_string(i) + ") != 0";
      case Kind::asymmetric: return "asymmetric pair " + ij;
      case Kind::coincident: return "distinct points " + ij + " at distance 0";
      case Kind::triangle:
        return "triangle inequality fails for d" + ij + " via " + std::to_string(k) + " by " + format_number(excess);
    }
    return "unknown";
  }
};

inline const char* to_string(MetricViolation::Kind k) {
  switch (k) {
    case MetricViolation::Kind::negative: return "negative";
    case MetricViolation::Kind::nonzero_diagonal: return "nonzero_diagonal";
    case MetricViolation::Kind::asymmetric: return "asymmetric";
    case MetricViolation::Kind::coincident: return "coincident";
    case MetricViolation::Kind::triangle: return "triangle";
  }
  return "unknown";
}

/// All metric-axiom defects within tol_metric. Pairs are reported once (i < j);
/// triangle checks are O(n^3).
inline std::vector<MetricViolation> validate_space(const DiscreteMetricSpace& space, double tol_metric = kTolMetric) {
  using K = MetricViolation::Kind;
  const std::size_t n = space.size();
  std::vector<MetricViolation> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(space.distance(i, i)) > tol_metric) out.push_back({K::nonzero_diagonal, i, i, i, space.distance(i, i)});
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dij = space.distance(i, j), dji = space.distance(j, i);
      if (dij < -tol_metric || dji < -tol_metric) out.push_back({K::negative, i, j, 0, -std::min(dij, dji)});
      if (std::abs(dij - dji) > tol_metric) out.push_back({K::asymmetric, i, j, 0, std::abs(dij - dji)});
      if (std::abs(dij) <= tol_metric && std::abs(dji) <= tol_metric) out.push_back({K::coincident, i, j, 0, 0.0});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dij = space.distance(i, j);
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        const double excess = dij - (space.distance(i, k) + space.distance(k, j));
        if (excess > tol_metric) out.push_back({K::triangle, i, j, k, excess});
      }
    }
  }
  return out;
}

/// Values of a function aligned to the points of a space. Holds the space by
/// shared reference.
class ScalarField {
 public:
  ScalarField(SpaceRef space, std::vector<double> values) : space_(std::move(space)), values_(std::move(values)) {
    if (!space_) throw InputError("ScalarField: null space");
    if (values_.size() != space_->size()) {
      throw InputError("field has " + std::to_string(values_.size()) + " values, space has " +
                       std::to_string(space_->size()) + " points");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) throw InputError("field value " + std::to_string(i) + " is not finite");
    }
  }

  const SpaceRef& space() const { return space_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  double sup() const { return *std::max_element(values_.begin(), values_.end()); }
  double sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  ScalarField abs() const {
    std::vector<double> a(values_.size());
    std::transform(values_.begin(), values_.end(), a.begin(), [](double v) { return std::abs(v); });
    return ScalarField(space_, std::move(a));
  }

  bool same_space(const ScalarField& other) const { return space_ == other.space_; }

 private:
  SpaceRef space_;
  std::vector<double> values_;
};

/// M_f = { i : f_i >= sup f - tol }.
struct SupSet {
  std::vector<std::size_t> indices;
  double sup_value = 0.0;
  double tol_used = 0.0;

  bool contains(std::size_t i) const { return std::binary_search(indices.begin(), indices.end(), i); }
};

inline double default_sup_tol(double sup_value) { return 1e-9 * (1.0 + std::abs(sup_value)); }

inline SupSet sup_attaining_set(const ScalarField& field, std::optional<double> tol = std::nullopt) {
  SupSet s;
  s.sup_value = field.sup();
  s.tol_used = tol.value_or(default_sup_tol(s.sup_value));
  if (!(s.tol_used >= 0.0)) throw InputError("sup_attaining_set: tolerance must be non-negative");
  for (std::size_t i = 0; i < field.size(); ++i)
    if (field[i] >= s.sup_value - s.tol_used) s.indices.push_back(i);
  return s;
}

/// Connectivity of the graph on `subset` with an edge whenever d(i,j) <= eps.
inline bool epsilon_connected(const DiscreteMetricSpace& space, const std::vector<std::size_t>& subset, double eps) {
  if (subset.empty()) throw InputError("epsilon_connected: empty subset");
  if (!(eps > 0.0)) throw InputError("epsilon_connected: eps must be positive");
  for (std::size_t i : subset)
    if (i >= space.size()) throw InputError("epsilon_connected: index " + std::to_string(i) + " out of range");

  std::vector<char> seen(subset.size(), 0);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t a = frontier.front();
    frontier.pop();
    for (std::size_t b = 0; b < subset.size(); ++b) {
      if (!seen[b] && space.distance(subset[a], subset[b]) <= eps) {
        seen[b] = 1;
        ++reached;
        frontier.push(b);
      }
    }
  }
  return reached == subset.size();
}

/// f_eps(x) = f(x) - eps d(x,x0) / (d(x,x0) + d(x,y0)).
///
/// x0 must attain the maximum of f exactly. On a valid metric space the result
/// satisfies |f - f_eps| <= eps, f_eps <= f, sup f_eps = sup f and, for
/// eps > 0, x0 is its only maximizer.
inline ScalarField density_perturbation(const ScalarField& field, std::size_t x0, std::size_t y0, double eps) {
  const auto& space = *field.space();
  if (x0 >= space.size() || y0 >= space.size()) throw InputError("density_perturbation: index out of range");
  if (x0 == y0) throw InputError("density_perturbation: x0 and y0 must differ");
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw InputError("density_perturbation: eps must be >= 0");
  if (field[x0] != field.sup()) {
    throw InputError("density_perturbation: x0 (" + space.label(x0) + ") does not attain the maximum");
  }
  if (!(space.distance(x0, y0) > 0.0)) throw InputError("density_perturbation: d(x0,y0) must be positive");

  std::vector<double> out(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double dx = space.distance(i, x0);
    const double dy = space.distance(i, y0);
    out[i] = field[i] - eps * dx / (dx + dy);
  }
  return ScalarField(field.space(), std::move(out));
}

}  // namespace bjext
