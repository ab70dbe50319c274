#pragma once

// Independent reference computations and random fixture generators shared by
// the unit tests and the acceptance binary. Nothing here calls the derivative
// or minimization code under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "bjext/space.hpp"

namespace oracle {

using Rng = std::mt19937_64;

struct GridMin {
  double t = 0.0;
  double value = 0.0;
};

/// Minimum of fn over `count` uniform points of [lo, hi].
inline GridMin dense_min(const std::function<double(double)>& fn, double lo, double hi, std::size_t count) {
  GridMin best{lo, fn(lo)};
  for (std::size_t k = 1; k < count; ++k) {
    const double t = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
    const double v = fn(t);
    if (v < best.value) best = {t, v};
  }
  return best;
}

/// min over lambda of max_i |f_i + lambda g_i| by a dense scan of [-span, span].
inline GridMin lambda_scan(const std::vector<double>& f, const std::vector<double>& g, double span, std::size_t count) {
  return dense_min(
      [&](double lambda) {
        double m = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f[i] + lambda * g[i]));
        return m;
      },
      -span, span, count);
}

/// phi convex with phi(0) = c: phi >= c everywhere iff phi(+d) >= c and
/// phi(-d) >= c for one d > 0. Exact for fixtures whose competing points stay
/// out of reach at t = d.
inline bool two_probe_minimum_at_zero(const std::function<double(double)>& phi, double d, double tol) {
  const double c = phi(0.0);
  return phi(d) >= c - tol && phi(-d) >= c - tol;
}

// ---------------------------------------------------------------------------
// Random metric spaces
// ---------------------------------------------------------------------------

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline bjext::DiscreteMetricSpace random_line(Rng& rng, std::size_t n) {
  std::vector<double> xs(n);
  for (auto& x : xs) x = uniform(rng, -5.0, 5.0);
  std::sort(xs.begin(), xs.end());
  for (std::size_t i = 1; i < n; ++i)
    if (xs[i] <= xs[i - 1]) xs[i] = std::nextafter(xs[i - 1], 10.0);
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = "x" + std::to_string(i);
  return bjext::DiscreteMetricSpace::from_points_1d(std::move(xs), std::move(labels));
}

inline bjext::DiscreteMetricSpace random_plane(Rng& rng, std::size_t n) {
  std::vector<std::pair<double, double>> p(n);
  for (auto& q : p) q = {uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)};
  std::vector<double> d(n * n);
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = "p" + std::to_string(i);
    for (std::size_t j = 0; j < n; ++j) d[i * n + j] = std::hypot(p[i].first - p[j].first, p[i].second - p[j].second);
  }
  return bjext::DiscreteMetricSpace(std::move(labels), std::move(d));
}

/// n equally spaced points on the unit circle with arc-length distance.
inline bjext::DiscreteMetricSpace circle(std::size_t n) {
  std::vector<double> d(n * n);
  std::vector<std::string> labels(n);
  const double pi = std::acos(-1.0);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = "c" + std::to_string(i);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = i > j ? i - j : j - i;
      d[i * n + j] = 2.0 * pi * static_cast<double>(std::min(k, n - k)) / static_cast<double>(n);
    }
  }
  return bjext::DiscreteMetricSpace(std::move(labels), std::move(d));
}

/// Random positive weights on the complete graph closed under shortest paths
/// (Floyd-Warshall), which always yields a metric.
inline bjext::DiscreteMetricSpace shortest_path_metric(Rng& rng, std::size_t n) {
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = uniform(rng, 0.5, 3.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i * n + j] = std::min(d[i * n + j], d[i * n + k] + d[k * n + j]);
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = "v" + std::to_string(i);
  return bjext::DiscreteMetricSpace(std::move(labels), std::move(d));
}

/// One of the generators above, chosen at random; shortest-path spaces are
/// kept small because closure is cubic.
inline bjext::DiscreteMetricSpace random_space(Rng& rng, std::size_t n) {
  switch (uniform_index(rng, 0, 3)) {
    case 0: return random_line(rng, n);
    case 1: return random_plane(rng, n);
    case 2: return circle(n);
    default: return shortest_path_metric(rng, std::min<std::size_t>(n, 120));
  }
}

// ---------------------------------------------------------------------------
// Random fields
// ---------------------------------------------------------------------------

/// Values on the lattice step * Z inside [lo, hi], with the maximum planted at
/// `ties` random points so that M_f has a known size.
inline std::vector<double> quantized_field(Rng& rng, std::size_t n, double lo, double hi, double step, std::size_t ties) {
  std::vector<double> v(n);
  const double top = std::floor(hi / step) * step;
  for (auto& x : v) x = std::min(top - step, std::round(uniform(rng, lo, hi) / step) * step);
  ties = std::clamp<std::size_t>(ties, 1, n);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t k = 0; k < ties; ++k) v[idx[k]] = top;
  return v;
}

/// Zero with probability p_zero, otherwise a magnitude in [lo, hi] with random sign.
inline double signed_away_from_zero(Rng& rng, double lo, double hi, double p_zero) {
  if (uniform(rng, 0.0, 1.0) < p_zero) return 0.0;
  const double m = uniform(rng, lo, hi);
  return uniform(rng, 0.0, 1.0) < 0.5 ? -m : m;
}

}  // namespace oracle
