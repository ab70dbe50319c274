#pragma once

// Named fixtures and randomized extension generators. Every random case
// carries its verdict computed directly from the generating data (slopes on
// M_f), which serves as a third reference next to brute force and criterion.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bjext/extension.hpp"
#include "bjext/space.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace bjext;

/// p(x,t) = |t + x| over the uniform grid of [-1, 1].
inline ConvexExtension abs_shift(std::size_t count = 201) {
  const auto s = share(DiscreteMetricSpace::interval_grid(-1, 1, count));
  std::vector<double> x = *s->coordinates(), f(count);
  for (std::size_t i = 0; i < count; ++i) f[i] = std::abs(x[i]);
  return build_extension(ScalarField(s, f), AbsAffineFamily{x, std::vector<double>(count, 1.0)});
}

/// p(x,t) = 1 + t e^{-x} over a uniform grid of [0, R].
inline ConvexExtension decaying_slopes(double R, std::size_t count) {
  const auto s = share(DiscreteMetricSpace::interval_grid(0, R, count));
  std::vector<double> b(count);
  for (std::size_t i = 0; i < count; ++i) b[i] = std::exp(-(*s->coordinates())[i]);
  return build_extension(ScalarField(s, std::vector<double>(count, 1.0)), AffineFamily{b});
}

/// Random (f, g) over a random space of 5 to 300 points: |f| on a 1e-3
/// lattice with ||f|| in [0.1, 2], and products f g on M_|f| either 0 or at
/// least 1e-2 ||f|| in size.
struct CxPair {
  ScalarField f, g;
};

inline CxPair random_cx_pair(oracle::Rng& rng) {
  const std::size_t n = oracle::uniform_index(rng, 5, 300);
  const auto s = share(oracle::random_space(rng, n));
  const std::size_t m = s->size();
  const double top = std::round(oracle::uniform(rng, 0.1, 2.0) * 1e3) / 1e3;
  auto f = oracle::quantized_field(rng, m, -top, top, 1e-3, oracle::uniform_index(rng, 1, 4));
  for (auto& v : f)
    if (v == top && oracle::uniform(rng, 0, 1) < 0.5) v = -top;
  std::vector<double> g(m);
  for (std::size_t i = 0; i < m; ++i) {
    g[i] = std::abs(f[i]) == top ? oracle::signed_away_from_zero(rng, 0.01, 1.0, 0.15) : oracle::uniform(rng, -1, 1);
  }
  return {ScalarField(s, f), ScalarField(s, g)};
}

inline ConvexExtension shifted(const ScalarField& f, ShiftProfile h, const ExtensionOptions& opts = {}) {
  return build_extension(f, ShiftedFamily{std::move(h)}, opts);
}

struct RandomCase {
  ConvexExtension ext;
  bool expected = false;  // from the slopes at t = 0 over M_f
  std::string kind;
  std::uint64_t seed = 0;
};

namespace detail {

inline bool slopes_bracket_zero(const std::vector<double>& right, const std::vector<double>& left) {
  return *std::max_element(right.begin(), right.end()) >= 0.0 && *std::min_element(left.begin(), left.end()) <= 0.0;
}

inline std::vector<std::size_t> argmax_set(const std::vector<double>& v) {
  const double top = *std::max_element(v.begin(), v.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] == top) out.push_back(i);
  return out;
}

}  // namespace detail

/// One random affine, abs_affine or shifted extension over a random space of
/// 50 to 500 points. Field values sit on a 1e-3 lattice and slopes are either
/// 0 or at least 1e-2 in size, so every verdict is far from the tolerance band.
inline RandomCase random_extension(std::uint64_t seed) {
  oracle::Rng rng(seed);
  const std::size_t n = oracle::uniform_index(rng, 50, 500);
  const auto space = share(oracle::random_space(rng, n));
  const std::size_t m = space->size();
  const std::size_t ties = oracle::uniform_index(rng, 1, 4);
  const int kind = static_cast<int>(oracle::uniform_index(rng, 0, 2));

  if (kind == 0) {
    auto f = oracle::quantized_field(rng, m, -1, 1, 1e-3, ties);
    std::vector<double> b(m);
    for (auto& v : b) v = oracle::signed_away_from_zero(rng, 0.01, 2.0, 0.15);
    std::vector<double> on_m;
    for (std::size_t i : detail::argmax_set(f)) on_m.push_back(b[i]);
    const bool expected = detail::slopes_bracket_zero(on_m, on_m);
    return {build_extension(ScalarField(space, f), AffineFamily{b}), expected, "affine", seed};
  }
  if (kind == 1) {
    auto a = oracle::quantized_field(rng, m, -1, 1, 1e-3, ties);
    for (auto& v : a)
      if (v == 1.0 && oracle::uniform(rng, 0, 1) < 0.5) v = -1.0;
    std::vector<double> b(m), f(m);
    for (auto& v : b) v = oracle::signed_away_from_zero(rng, 0.01, 2.0, 0.15);
    for (std::size_t i = 0; i < m; ++i) f[i] = std::abs(a[i]);
    std::vector<double> on_m;
    for (std::size_t i : detail::argmax_set(f)) on_m.push_back(a[i] > 0 ? b[i] : -b[i]);
    const bool expected = detail::slopes_bracket_zero(on_m, on_m);
    return {build_extension(ScalarField(space, f), AbsAffineFamily{a, b}), expected, "abs_affine", seed};
  }

  const auto f = oracle::quantized_field(rng, m, -1, 1, 1e-3, ties);
  ShiftProfile h = ShiftProfile::zero();
  double right = 0.0, left = 0.0;
  switch (oracle::uniform_index(rng, 0, 5)) {
    case 0: h = ShiftProfile::abs(), right = 1, left = -1; break;
    case 1: h = ShiftProfile::square(); break;
    case 2: h = ShiftProfile::positive_part(), right = 1; break;
    case 3: break;
    case 4: {
      const double c = oracle::signed_away_from_zero(rng, 0.01, 2.0, 0.0);
      h = ShiftProfile::linear(c), right = left = c;
      break;
    }
    default: {
      // knots -2, -1, 0, 1, 2 with non-decreasing slopes and h(0) = 0
      std::vector<double> s(4);
      for (auto& v : s) v = oracle::signed_away_from_zero(rng, 0.01, 2.0, 0.15);
      std::sort(s.begin(), s.end());
      left = s[1], right = s[2];
      h =ShiftProfile::piecewise_linear({-2, -1, 0, 1, 2}, {-s[1] - s[0], -s[1], 0.0, s[2], s[2] + s[3]});
    }
  }
  const bool expected = right >= 0.0 && left <= 0.0;
  return {build_extension(ScalarField(space, f), ShiftedFamily{h}), expected, "shifted:" + h.name, seed};
}

}  // namespace fixture
