#pragma once

/**
 * @file extension.hpp
 * @brief Convex extensions p(x,t) of a field f on a finite metric space, their
 *        sup envelope g(t) = max_x p(x,t), and the tests built on them.
 *
 * A convex extension satisfies p(x,0) = f(x) and has every section
 * t -> p(x,t) convex. It is a Birkhoff-James (BJ) extension when g attains its
 * minimum at t = 0. Two independent routes decide that:
 *
 *  - bj_extension_bruteforce: function values only. Scan g on a grid, then
 *    refine with a convex line search inside the bracket around the grid
 *    minimum.
 *  - bj_extension_criterion: one-sided derivatives at t = 0 only. BJ iff some
 *    x in M_f has p_{t+}(x,0) >= 0 and some y in M_f has p_{t-}(y,0) <= 0.
 *
 * A single point satisfying both inequalities is a Bhatia-Semrl witness. The
 * truncated non-compact tools (maximizing sequences, the pointwise-convergence
 * sufficiency check) live at the end of this header.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bjext/convex1d.hpp"
#include "bjext/errors.hpp"
#include "bjext/norms.hpp"
#include "bjext/parallel.hpp"
#include "bjext/space.hpp"

namespace bjext {

/// Sign tolerance applied to one-sided derivatives when deciding verdicts.
inline constexpr double kTolSlope = 1e-9;
inline constexpr std::size_t kDefaultTGridSize = 401;

// ---------------------------------------------------------------------------
// Family specifications
// ---------------------------------------------------------------------------

enum class FamilyKind { affine, abs_affine, shifted, norm_family, table };

inline const char* to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::affine: return "affine";
    case FamilyKind::abs_affine: return "abs_affine";
    case FamilyKind::shifted: return "shifted";
    case FamilyKind::norm_family: return "norm_family";
    case FamilyKind::table: return "table";
  }
  return "?";
}

/// Convex h with h(0) = 0 used by the shifted family p(x,t) = f(x) + h(t).
struct ShiftProfile {
  std::string name;
  std::function<double(double)> h;

  static ShiftProfile abs() { return {"abs", [](double t) { return std::abs(t); }}; }
  static ShiftProfile square() { return {"square", [](double t) { return t * t; }}; }
  static ShiftProfile positive_part() { return {"max0", [](double t) { return std::max(0.0, t); }}; }
  static ShiftProfile zero() { return {"zero", [](double) { return 0.0; }}; }
  static ShiftProfile linear(double slope) {
    return {"linear:" + format_number(slope), [slope](double t) { return slope * t; }};
  }

  /// Piecewise-linear through (ts[k], vs[k]), extended linearly past both ends.
  static ShiftProfile piecewise_linear(std::vector<double> ts, std::vector<double> vs) {
    if (ts.size() < 2 || ts.size() != vs.size()) throw InputError("shift profile: need >= 2 knots of equal length");
    for (std::size_t k = 0; k + 1 < ts.size(); ++k)
      if (!(ts[k] < ts[k + 1])) throw InputError("shift profile: knots must increase strictly");
    auto knots = std::make_shared<const std::pair<std::vector<double>, std::vector<double>>>(std::move(ts), std::move(vs));
    return {"pwl", [knots](double t) {
              const auto& [x, y] = *knots;
              std::size_t k = std::upper_bound(x.begin(), x.end(), t) - x.begin();
              k = std::clamp<std::size_t>(k, 1, x.size() - 1);
              const double w = (t - x[k - 1]) / (x[k] - x[k - 1]);
              return y[k - 1] + w * (y[k] - y[k - 1]);
            }};
  }
};

/// p(x,t) = f(x) + slope(x) t
struct AffineFamily {
  std::vector<double> slope;
};

/// p(x,t) = |offset(x) + slope(x) t|, requires |offset| = f
struct AbsAffineFamily {
  std::vector<double> offset;
  std::vector<double> slope;
};

/// p(x,t) = f(x) + h(t)
struct ShiftedFamily {
  ShiftProfile profile;
};

/// p(x,t) = ||a(x) + t b(x)||, requires ||a(x)|| = f(x)
struct NormFamily {
  std::vector<std::vector<double>> a;
  std::vector<std::vector<double>> b;
  NormTag norm = NormTag::euclidean();
};

/// Samples p(x_i, t_k) = values[i][k], linear in t between samples.
struct TableFamily {
  std::vector<double> t;
  std::vector<std::vector<double>> values;
};

using FamilySpec = std::variant<AffineFamily, AbsAffineFamily, ShiftedFamily, NormFamily, TableFamily>;

inline FamilyKind kind_of(const FamilySpec& spec) {
  return std::visit(
      [](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, AffineFamily>) return FamilyKind::affine;
        else if constexpr (std::is_same_v<F, AbsAffineFamily>) return FamilyKind::abs_affine;
        else if constexpr (std::is_same_v<F, ShiftedFamily>) return FamilyKind::shifted;
        else if constexpr (std::is_same_v<F, NormFamily>) return FamilyKind::norm_family;
        else return FamilyKind::table;
      },
      spec);
}

/// Continuity modulus: |p(x,t) - p(x,s)| <= |h(t) - h(s)| for all x, t, s.
struct Modulus {
  std::function<double(double)> h;
  std::string description;

  static Modulus lipschitz(double constant) {
    return {[constant](double t) { return constant * t; }, "lipschitz:" + format_number(constant)};
  }
};

struct ExtensionOptions {
  double window = 0.0;  // half-width T of the t-domain; 0 picks a default
  std::size_t convex_grid = 41;
  double tol_convex = kTolConvex;
  std::size_t modulus_samples = 9;
  std::optional<Modulus> modulus;  // overrides the modulus derived from the family
};

/// Default t-window: T = 2 (1 + spread of f).
inline double default_window(const ScalarField& base) {
  const auto [lo, hi] = std::minmax_element(base.values().begin(), base.values().end());
  return 2.0 * (1.0 + (*hi - *lo));
}

// ---------------------------------------------------------------------------
// ConvexExtension
// ---------------------------------------------------------------------------

class ConvexExtension {
 public:
  using Evaluator = std::function<double(std::size_t, double)>;

  const SpaceRef& space() const { return base_.space(); }
  const ScalarField& base() const { return base_; }
  FamilyKind kind() const { return kind_; }
  double window() const { return window_; }
  Interval t_domain() const { return {-window_, window_}; }
  std::size_t size() const { return base_.size(); }
  const std::optional<Modulus>& modulus() const { return modulus_; }

  double operator()(std::size_t i, double t) const { return eval_(i, t); }

  ConvexCurve section(std::size_t i) const {
    if (i >= size()) throw InputError("section index out of range");
    auto eval = eval_;
    return ConvexCurve([eval, i](double t) { return eval(i, t); }, t_domain(),
                       "p(" + space()->label(i) + ",.)");
  }

 private:
  friend ConvexExtension build_extension(const ScalarField&, const FamilySpec&, const ExtensionOptions&);

  ConvexExtension(ScalarField base, FamilyKind kind, Evaluator eval, double window, std::optional<Modulus> modulus)
      : base_(std::move(base)), kind_(kind), eval_(std::move(eval)), window_(window), modulus_(std::move(modulus)) {}

  ScalarField base_;
  FamilyKind kind_;
  Evaluator eval_;
  double window_;
  std::optional<Modulus> modulus_;
};

namespace detail {

inline void require_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw InputError(std::string(what) + " has " + std::to_string(got) + " entries, space has " +
                     std::to_string(want) + " points");
  }
}

inline void require_finite(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i])) throw InputError(std::string(what) + "[" + std::to_string(i) + "] is not finite");
}

struct Built {
  ConvexExtension::Evaluator eval;
  std::optional<Modulus> modulus;
  double max_window = std::numeric_limits<double>::infinity();
};

inline Built make_evaluator(const ScalarField& base, const FamilySpec& spec) {
  const std::size_t n = base.size();
  return std::visit(
      [&](const auto& fam) -> Built {
        using F = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<F, AffineFamily>) {
          require_length(fam.slope.size(), n, "affine slope");
          require_finite(fam.slope, "affine slope");
          auto f = std::make_shared<const std::vector<double>>(base.values());
          auto b = std::make_shared<const std::vector<double>>(fam.slope);
          double lip = 0.0;
          for (double s : *b) lip = std::max(lip, std::abs(s));
          return {[f, b](std::size_t i, double t) { return (*f)[i] + (*b)[i] * t; }, Modulus::lipschitz(lip)};
        } else if constexpr (std::is_same_v<F, AbsAffineFamily>) {
          require_length(fam.offset.size(), n, "abs_affine offset");
          require_length(fam.slope.size(), n, "abs_affine slope");
          require_finite(fam.offset, "abs_affine offset");
          require_finite(fam.slope, "abs_affine slope");
          auto a = std::make_shared<const std::vector<double>>(fam.offset);
          auto b = std::make_shared<const std::vector<double>>(fam.slope);
          double lip = 0.0;
          for (double s : *b) lip = std::max(lip, std::abs(s));
          return {[a, b](std::size_t i, double t) { return std::abs((*a)[i] + (*b)[i] * t); }, Modulus::lipschitz(lip)};
        } else if constexpr (std::is_same_v<F, ShiftedFamily>) {
          if (!fam.profile.h) throw InputError("shifted family: empty profile");
          auto f = std::make_shared<const std::vector<double>>(base.values());
          auto h = fam.profile.h;
          return {[f, h](std::size_t i, double t) { return (*f)[i] + h(t); }, Modulus{h, "shift:" + fam.profile.name}};
        } else if constexpr (std::is_same_v<F, NormFamily>) {
          require_length(fam.a.size(), n, "norm_family A");
          require_length(fam.b.size(), n, "norm_family B");
          const std::size_t dim = n ? fam.a.front().size() : 0;
          double lip = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            if (fam.a[i].size() != dim || fam.b[i].size() != dim) {
              throw InputError("norm_family: vector length differs at point " + std::to_string(i));
            }
            require_finite(fam.a[i], "norm_family A");
            require_finite(fam.b[i], "norm_family B");
            lip = std::max(lip, fam.norm(fam.b[i]));
          }
          auto data = std::make_shared<const NormFamily>(fam);
          return {[data](std::size_t i, double t) { return data->norm.of_combination(data->a[i], data->b[i], t); },
                  Modulus::lipschitz(lip)};
        } else {
          const auto& ts = fam.t;
          if (ts.size() < 3) throw InputError("table family: need at least 3 t samples");
          require_finite(ts, "table t");
          for (std::size_t k = 0; k + 1 < ts.size(); ++k)
            if (!(ts[k] < ts[k + 1])) throw InputError("table family: t samples must increase strictly");
          if (!(ts.front() < 0.0 && ts.back() > 0.0)) throw InputError("table family: t range must straddle 0");
          require_length(fam.values.size(), n, "table values");
          double lip = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            if (fam.values[i].size() != ts.size()) {
              throw InputError("table family: row " + std::to_string(i) + " length differs from t samples");
            }
            require_finite(fam.values[i], "table row");
            for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
              lip = std::max(lip, std::abs((fam.values[i][k + 1] - fam.values[i][k]) / (ts[k + 1] - ts[k])));
            }
          }
          auto data = std::make_shared<const TableFamily>(fam);
          Built built{[data](std::size_t i, double t) {
                        const auto& x = data->t;
                        const auto& y = data->values[i];
                        std::size_t k = std::upper_bound(x.begin(), x.end(), t) - x.begin();
                        k = std::clamp<std::size_t>(k, 1, x.size() - 1);
                        const double w = (t - x[k - 1]) / (x[k] - x[k - 1]);
                        return y[k - 1] + w * (y[k] - y[k - 1]);
                      },
                      Modulus::lipschitz(lip)};
          built.max_window = std::min(-ts.front(), ts.back());
          return built;
        }
      },
      spec);
}

inline void check_table_slopes(const ScalarField& base, const TableFamily& fam, double tol_convex) {
  const auto& ts = fam.t;
  for (std::size_t i = 0; i < fam.values.size(); ++i) {
    const auto& y = fam.values[i];
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
      const double slope = (y[k + 1] - y[k]) / (ts[k + 1] - ts[k]);
      if (slope < prev - tol_convex) {
        throw InputError("table family: slopes decrease at point " + base.space()->label(i) + " near t=" +
                         format_number(ts[k]) + " (section not convex)");
      }
      prev = slope;
    }
  }
}

inline std::vector<double> uniform_samples(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = lo + (hi - lo) * static_cast<double>(k) / (count - 1);
  out.back() = hi;
  return out;
}

}  // namespace detail

/// Base field implied by a family when it is not given separately:
/// |offset| for abs_affine, ||a(x)|| for norm_family and the t = 0 column of a
/// table. Affine and shifted families need an explicit f.
inline ScalarField implied_base(const SpaceRef& space, const FamilySpec& spec) {
  const std::size_t n = space->size();
  std::vector<double> f(n);
  if (const auto* fam = std::get_if<AbsAffineFamily>(&spec)) {
    detail::require_length(fam->offset.size(), n, "abs_affine offset");
    for (std::size_t i = 0; i < n; ++i) f[i] = std::abs(fam->offset[i]);
  } else if (const auto* fam = std::get_if<NormFamily>(&spec)) {
    detail::require_length(fam->a.size(), n, "norm_family A");
    for (std::size_t i = 0; i < n; ++i) f[i] = fam->norm(fam->a[i]);
  } else if (const auto* fam = std::get_if<TableFamily>(&spec)) {
    detail::require_length(fam->values.size(), n, "table values");
    const auto zero = std::find(fam->t.begin(), fam->t.end(), 0.0);
    if (zero == fam->t.end()) throw InputError("table family: t samples must contain 0 to imply the base field");
    const std::size_t k = zero - fam->t.begin();
    for (std::size_t i = 0; i < n; ++i) {
      if (fam->values[i].size() != fam->t.size()) throw InputError("table family: ragged rows");
      f[i] = fam->values[i][k];
    }
  } else {
    throw InputError(std::string(to_string(kind_of(spec))) + " family needs an explicit base field f");
  }
  return ScalarField(space, std::move(f));
}

/// Builds and validates p(x,t) over t in [-T, T]:
///  (i)   |p(x,0) - f(x)| <= tol_convex at every point,
///  (ii)  every section passes check_convex (tables: slopes non-decreasing),
///  (iii) the continuity modulus bounds |p(x,t) - p(x,s)| on sampled triples.
/// Violations throw InputError naming the point and t.
inline ConvexExtension build_extension(const ScalarField& base, const FamilySpec& spec,
                                       const ExtensionOptions& options = {}) {
  auto built = detail::make_evaluator(base, spec);
  double window = options.window > 0.0 ? options.window : default_window(base);
  if (options.window <= 0.0) window = std::min(window, built.max_window);
  if (!(window > 0.0) || !std::isfinite(window)) throw InputError("t-window must be a positive number");
  if (window > built.max_window) {
    throw InputError("t-window " + format_number(window) + " exceeds the table range " + format_number(built.max_window));
  }
  if (options.convex_grid < 3) throw InputError("convex_grid must be at least 3");

  const auto& space = *base.space();
  const std::size_t n = base.size();
  const auto& eval = built.eval;

  for (std::size_t i = 0; i < n; ++i) {
    const double p0 = eval(i, 0.0);
    if (!std::isfinite(p0) || std::abs(p0 - base[i]) > options.tol_convex) {
      throw InputError("p(x,0) != f(x) at point " + space.label(i) + ": p=" + format_number(p0) +
                       ", f=" + format_number(base[i]));
    }
  }

  if (const auto* table = std::get_if<TableFamily>(&spec)) detail::check_table_slopes(base, *table, options.tol_convex);

  std::vector<char> convex(n, 1);
  parallel_for(n, [&](std::size_t i) {
    ConvexCurve section([&eval, i](double t) { return eval(i, t); }, {-window, window});
    convex[i] = check_convex(section, options.convex_grid, options.tol_convex);
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!convex[i]) throw InputError("section at point " + space.label(i) + " is not convex on [-T, T]");
  }

  std::optional<Modulus> modulus = options.modulus ? options.modulus : built.modulus;
  if (modulus) {
    if (std::abs(modulus->h(0.0)) > options.tol_convex) throw InputError("continuity modulus must vanish at 0");
    const auto ts = detail::uniform_samples(-window, window, std::max<std::size_t>(options.modulus_samples, 3));
    const std::size_t stride = std::max<std::size_t>(1, n / 200);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t i = 0; i < n; i += stride) {
      for (double t : ts) {
        for (double s : ts) {
          const double pt = eval(i, t), ps = eval(i, s);
          const double ht = modulus->h(t), hs = modulus->h(s);
          const double slack = options.tol_convex + 8.0 * eps * (std::abs(pt) + std::abs(ps) + std::abs(ht) + std::abs(hs));
          if (std::abs(pt - ps) > std::abs(ht - hs) + slack) {
            throw InputError("continuity modulus (" + modulus->description + ") violated at point " + space.label(i) +
                             ", t=" + format_number(t) + ", s=" + format_number(s));
          }
        }
      }
    }
  }

  return ConvexExtension(base, kind_of(spec), built.eval, window, std::move(modulus));
}

// ---------------------------------------------------------------------------
// Envelope
// ---------------------------------------------------------------------------

/// `count` uniform points on [-T, T] (count forced odd) with exact 0 and ±T.
inline std::vector<double> symmetric_grid(double half_width, std::size_t count = kDefaultTGridSize) {
  if (!(half_width > 0.0)) throw InputError("symmetric_grid: half-width must be positive");
  if (count < 3) throw InputError("symmetric_grid: need at least 3 points");
  if (count % 2 == 0) ++count;
  const std::size_t m = count / 2;
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    out[k] = half_width * (static_cast<double>(k) - static_cast<double>(m)) / static_cast<double>(m);
  }
  out.front() = -half_width;
  out[m] = 0.0;
  out.back() = half_width;
  return out;
}

struct Envelope {
  std::vector<double> t_grid;
  std::vector<double> values;       // g(t_k) = max_x p(x, t_k)
  std::vector<std::size_t> argmax;  // lowest maximizing index at each t_k
  std::size_t zero_index = 0;

  double at_zero() const { return values[zero_index]; }
};

namespace detail {

inline std::pair<double, std::size_t> max_over_points(const ConvexExtension& ext, double t) {
  double best = ext(0, t);
  std::size_t arg = 0;
  for (std::size_t i = 1; i < ext.size(); ++i) {
    const double v = ext(i, t);
    if (v > best) {
      best = v;
      arg = i;
    }
  }
  return {best, arg};
}

inline void check_t_grid(const ConvexExtension& ext, std::span<const double> t_grid) {
  if (t_grid.size() < 3) throw InputError("t-grid needs at least 3 points");
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (!ext.t_domain().contains(t_grid[k])) throw InputError("t-grid leaves [-T, T] at t=" + format_number(t_grid[k]));
    if (k > 0 && !(t_grid[k - 1] < t_grid[k])) throw InputError("t-grid must increase strictly");
  }
  if (std::find(t_grid.begin(), t_grid.end(), 0.0) == t_grid.end()) throw InputError("t-grid must contain 0");
}

}  // namespace detail

inline Envelope envelope(const ConvexExtension& ext, std::span<const double> t_grid) {
  detail::check_t_grid(ext, t_grid);
  Envelope env;
  env.t_grid.assign(t_grid.begin(), t_grid.end());
  env.values.resize(t_grid.size());
  env.argmax.resize(t_grid.size());
  parallel_for(
      t_grid.size(),
      [&](std::size_t k) {
        const auto [v, i] = detail::max_over_points(ext, t_grid[k]);
        env.values[k] = v;
        env.argmax[k] = i;
      },
      std::max<std::size_t>(1, 4096 / std::max<std::size_t>(1, ext.size())));
  env.zero_index = std::find(t_grid.begin(), t_grid.end(), 0.0) - t_grid.begin();
  return env;
}

/// g(t) = max_x p(x,t) as an evaluator-backed curve on [-T, T].
inline ConvexCurve envelope_curve(const ConvexExtension& ext) {
  return ConvexCurve([ext](double t) { return detail::max_over_points(ext, t).first; }, ext.t_domain(), "g");
}

/// Midpoint convexity on the grid: g(t_k) <= chord through t_{k-1}, t_{k+1}.
inline bool is_midpoint_convex(const Envelope& env, double tol_convex = kTolConvex) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t k = 1; k + 1 < env.values.size(); ++k) {
    const double tl = env.t_grid[k - 1], tm = env.t_grid[k], tr = env.t_grid[k + 1];
    const double chord = env.values[k - 1] + (env.values[k + 1] - env.values[k - 1]) * (tm - tl) / (tr - tl);
    const double noise = 8.0 * eps * (std::abs(env.values[k - 1]) + std::abs(env.values[k]) + std::abs(env.values[k + 1]));
    if (env.values[k] > chord + tol_convex + noise) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Birkhoff-James extension tests
// ---------------------------------------------------------------------------

struct BruteForceReport {
  bool is_bj = false;
  double g0 = 0.0;
  double grid_min = 0.0;
  double t_grid_min = 0.0;
  double refined_min = 0.0;  // convex line search inside the bracket around the grid minimum
  double t_refined = 0.0;
  double resolution_bound = 0.0;  // max |grid slope| * max grid spacing
  double tol = 0.0;
};

/// Decides min_t g(t) >= g(0) - tol from function values alone. The grid scan
/// is followed by a golden-section search over [t_{k-1}, t_{k+1}] around the
/// grid minimizer t_k, which contains the true minimizer because g is convex.
/// A minimum inside [-T, T] is global for a convex g, so the window only
/// affects resolution. tol defaults to 1e-9 (1 + |g(0)|).
inline BruteForceReport bj_extension_bruteforce(const ConvexExtension& ext, std::span<const double> t_grid,
                                                std::optional<double> tol = std::nullopt, double tol_t = 1e-12) {
  const Envelope env = envelope(ext, t_grid);
  BruteForceReport r;
  r.g0 = env.at_zero();
  r.tol = tol.value_or(1e-9 * (1.0 + std::abs(r.g0)));

  const std::size_t k = std::min_element(env.values.begin(), env.values.end()) - env.values.begin();
  r.grid_min = env.values[k];
  r.t_grid_min = env.t_grid[k];

  double max_slope = 0.0, max_gap = 0.0;
  for (std::size_t j = 0; j + 1 < env.values.size(); ++j) {
    const double gap = env.t_grid[j + 1] - env.t_grid[j];
    max_gap = std::max(max_gap, gap);
    max_slope = std::max(max_slope, std::abs(env.values[j + 1] - env.values[j]) / gap);
  }
  r.resolution_bound = max_slope * max_gap;

  const std::size_t lo = k == 0 ? 0 : k - 1;
  const std::size_t hi = std::min(k + 1, env.t_grid.size() - 1);
  const Minimum m = minimize_convex(envelope_curve(ext).restricted({env.t_grid[lo], env.t_grid[hi]}), tol_t);
  if (m.value < r.grid_min) {
    r.refined_min = m.value;
    r.t_refined = m.t;
  } else {
    r.refined_min = r.grid_min;
    r.t_refined = r.t_grid_min;
  }
  r.is_bj = r.refined_min >= r.g0 - r.tol;
  return r;
}

struct SideWitness {
  std::size_t index = 0;
  double derivative = 0.0;
};

struct WitnessReport {
  bool verdict = false;
  std::optional<SideWitness> right_witness;  // x in M_f with p_{t+}(x,0) >= -tol
  std::optional<SideWitness> left_witness;   // y in M_f with p_{t-}(y,0) <= +tol
  SupSet sup_set;
  double best_right = 0.0;  // max over M_f of p_{t+}(x,0)
  double best_left = 0.0;   // min over M_f of p_{t-}(y,0)
  bool derivatives_converged = true;
};

struct CriterionOptions {
  double slope_tol = kTolSlope;
  std::optional<double> sup_tol;  // M_f membership; default 1e-9 (1 + |sup f|)
  DerivSchedule schedule{};
};

/// Derivative criterion at t = 0 over M_f. The witnesses reported are the
/// extremal ones (largest right derivative, smallest left derivative, lowest
/// index on ties), so best_right is the envelope's right derivative g'(0+) on
/// a finite space.
inline WitnessReport bj_extension_criterion(const ConvexExtension& ext, const CriterionOptions& options = {}) {
  WitnessReport r;
  r.sup_set = sup_attaining_set(ext.base(), options.sup_tol);
  const auto& idx = r.sup_set.indices;
  std::vector<DerivPair> d(idx.size());
  parallel_for(
      idx.size(), [&](std::size_t m) { d[m] = one_sided_derivatives(ext.section(idx[m]), 0.0, options.schedule); }, 16);

  r.best_right = -std::numeric_limits<double>::infinity();
  r.best_left = std::numeric_limits<double>::infinity();
  SideWitness right{}, left{};
  for (std::size_t m = 0; m < idx.size(); ++m) {
    r.derivatives_converged = r.derivatives_converged && d[m].right_converged && d[m].left_converged;
    if (d[m].right > r.best_right) {
      r.best_right = d[m].right;
      right = {idx[m], d[m].right};
    }
    if (d[m].left < r.best_left) {
      r.best_left = d[m].left;
      left = {idx[m], d[m].left};
    }
  }
  if (r.best_right >= -options.slope_tol) r.right_witness = right;
  if (r.best_left <= options.slope_tol) r.left_witness = left;
  r.verdict = r.right_witness.has_value() && r.left_witness.has_value();
  return r;
}

struct BsWitnessReport {
  std::optional<std::size_t> witness;
  std::size_t candidates = 0;     // |M_f|
  std::size_t disagreements = 0;  // points where the grid and derivative checks differ

  bool checks_agree() const { return disagreements == 0; }
};

/// Searches M_f for a single x with p(x,t) >= p(x,0) for all t. Two checks run
/// at every candidate and must agree: the grid check
/// p(x,t) >= p(x,0) - slope_tol |t| on every grid t, and the derivative check
/// p_{t+}(x,0) >= -slope_tol and p_{t-}(x,0) <= slope_tol. The lowest index
/// passing both is returned.
inline BsWitnessReport bhatia_semrl_witness(const ConvexExtension& ext, std::span<const double> t_grid,
                                            const CriterionOptions& options = {}) {
  detail::check_t_grid(ext, t_grid);
  const SupSet mf = sup_attaining_set(ext.base(), options.sup_tol);
  BsWitnessReport r;
  r.candidates = mf.indices.size();
  constexpr double eps = std::numeric_limits<double>::epsilon();
  std::vector<char> grid_ok(mf.indices.size()), deriv_ok(mf.indices.size());
  parallel_for(
      mf.indices.size(),
      [&](std::size_t m) {
        const std::size_t i = mf.indices[m];
        const double p0 = ext(i, 0.0);
        bool ok = true;
        for (double t : t_grid) {
          const double pt = ext(i, t);
          if (pt < p0 - options.slope_tol * std::abs(t) - 4.0 * eps * (std::abs(pt) + std::abs(p0))) {
            ok = false;
            break;
          }
        }
        grid_ok[m] = ok;
        const DerivPair d = one_sided_derivatives(ext.section(i), 0.0, options.schedule);
        deriv_ok[m] = d.right >= -options.slope_tol && d.left <= options.slope_tol;
      },
      16);
  for (std::size_t m = 0; m < mf.indices.size(); ++m) {
    if (grid_ok[m] != deriv_ok[m]) ++r.disagreements;
    if (!r.witness && grid_ok[m] && deriv_ok[m]) r.witness = mf.indices[m];
  }
  return r;
}

// ---------------------------------------------------------------------------
// Truncated non-compact machinery
// ---------------------------------------------------------------------------

enum class Side { plus, minus };

inline const char* to_string(Side s) { return s == Side::plus ? "plus" : "minus"; }

struct MaximizingSequence {
  Side side = Side::plus;
  std::vector<std::size_t> indices;  // x_n = argmax_x p(x, t_n)
  std::vector<double> t_values;      // t_n, strictly monotone towards 0
  std::vector<double> right_derivs;  // p_{t+}(x_n, t_n)
  std::vector<double> left_derivs;   // p_{t-}(x_n, t_n)
  std::vector<double> base_values;   // f(x_n)
  double limit_estimate = 0.0;       // g'(0+) for plus, g'(0-) for minus
  std::size_t skipped = 0;           // candidate t_n rejected as points of non-differentiability of g
  bool tail_converged = false;
  double tail_error = 0.0;  // |derivative - limit_estimate| at the last term, worst of both sides
  bool maximizing = false;
  double sup_gap = 0.0;  // sup f - f(x_n) at the last term
  bool truncated = false;  // fewer than n_terms: the noise floor on |t_n| was reached
};

struct MaxSeqOptions {
  double first_step = 0.0;  // t_1; 0 picks T/8
  double tol = 1e-6;
  double kink_tol = 10.0 * kTolDeriv;  // |g'(t+) - g'(t-)| above this marks a kink of g
  std::optional<double> sup_tol;
  DerivSchedule schedule{};
  std::size_t candidate_factor = 4;  // at most candidate_factor * n_terms candidates
};

namespace detail {

// Error sequence converges: the last term is within tol and no later term
// exceeds an earlier one by more than tol (over the second half).
inline bool tail_settles(const std::vector<double>& err, double tol) {
  if (err.empty() || err.back() > tol) return false;
  for (std::size_t k = err.size() / 2 + 1; k < err.size(); ++k)
    if (err[k] > err[k - 1] + tol) return false;
  return true;
}

}  // namespace detail

/// Builds t_n = ±t_1 2^{-(n-1)}, skipping t_n where g is numerically not
/// differentiable, picks x_n maximizing p(., t_n) and records the one-sided
/// section derivatives there. The derivative lists should converge to g'(0+)
/// (plus) or g'(0-) (minus); that postcondition is reported in tail_converged.
inline MaximizingSequence extract_maximizing_sequence(const ConvexExtension& ext, Side side, std::size_t n_terms,
                                                      const MaxSeqOptions& options = {}) {
  if (n_terms < 3) throw InputError("maximizing sequence needs at least 3 terms");
  const double window = ext.window();
  const double t1 = options.first_step > 0.0 ? options.first_step : window / 8.0;
  if (!(t1 < window)) throw InputError("maximizing sequence: first step must lie inside the t-window");
  const double sign = side == Side::plus ? 1.0 : -1.0;

  const ConvexCurve g = envelope_curve(ext);
  MaximizingSequence seq;
  seq.side = side;
  seq.limit_estimate = side == Side::plus ? right_derivative(g, 0.0, options.schedule).value
                                          : left_derivative(g, 0.0, options.schedule).value;

  // Below t_floor the quotients at step t/4 carry rounding noise of order tol,
  // so the sequence stops there even if it is shorter than n_terms.
  const double t_floor = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(g(0.0))) / options.tol;
  const std::size_t max_candidates = options.candidate_factor * n_terms;
  double t = t1;
  for (std::size_t m = 0; m < max_candidates && seq.indices.size() < n_terms && t >= t_floor; ++m, t *= 0.5) {
    const double tn = sign * t;
    // keep every quotient on one side of 0
    const DerivSchedule local = options.schedule.capped(t / 4.0);
    const DerivEstimate gr = right_derivative(g, tn, local);
    const DerivEstimate gl = left_derivative(g, tn, local);
    if (!gr.converged || !gl.converged || std::abs(gr.value - gl.value) > options.kink_tol) {
      ++seq.skipped;
      continue;
    }
    const std::size_t xn = detail::max_over_points(ext, tn).second;
    const DerivPair d = one_sided_derivatives(ext.section(xn), tn, local);
    seq.indices.push_back(xn);
    seq.t_values.push_back(tn);
    seq.right_derivs.push_back(d.right);
    seq.left_derivs.push_back(d.left);
    seq.base_values.push_back(ext.base()[xn]);
  }
  if (seq.indices.empty()) {
    throw NumericalError("maximizing sequence: every candidate t_n was rejected as a kink of the envelope");
  }
  seq.truncated = seq.indices.size() < n_terms;

  std::vector<double> err(seq.indices.size()), gap(seq.indices.size());
  const double sup = ext.base().sup();
  for (std::size_t k = 0; k < err.size(); ++k) {
    err[k] = std::max(std::abs(seq.right_derivs[k] - seq.limit_estimate), std::abs(seq.left_derivs[k] - seq.limit_estimate));
    gap[k] = sup - seq.base_values[k];
  }
  seq.tail_error = err.back();
  seq.tail_converged = seq.indices.size() >= 3 && detail::tail_settles(err, options.tol);
  seq.sup_gap = gap.back();
  seq.maximizing = detail::tail_settles(gap, options.sup_tol.value_or(default_sup_tol(sup)));
  return seq;
}

struct NcSufficiencyReport {
  bool xs_converge = false;  // p(x_n, .) -> g on (-delta, delta)
  bool ys_converge = false;
  bool right_limsup_ok = false;  // limsup p_{t+}(x_n, t_n) >= -tol
  bool left_liminf_ok = false;   // liminf p_{t-}(y_n, s_n) <= tol
  double xs_deviation = 0.0;
  double ys_deviation = 0.0;
  double right_limsup = 0.0;
  double left_liminf = 0.0;
  bool holds = false;
};

/// Checks the three hypotheses of the non-compact sufficient condition on
/// finite sequences: the last section of each sequence lies within tol of g on
/// `samples` points of (-delta, delta); the max of the right derivatives over
/// the second half of (x_n, t_n) is >= -tol; the min of the left derivatives
/// over the second half of (y_n, s_n) is <= tol. holds is their conjunction.
inline NcSufficiencyReport nc_sufficiency_check(const ConvexExtension& ext, std::span<const std::size_t> xs,
                                                std::span<const std::size_t> ys, std::span<const double> t_seq,
                                                std::span<const double> s_seq, double delta, double tol,
                                                std::size_t samples = 21, const DerivSchedule& schedule = {}) {
  if (xs.size() != t_seq.size() || ys.size() != s_seq.size()) {
    throw InputError("nc_sufficiency_check: sequence length mismatch");
  }
  if (xs.empty() || ys.empty()) throw InputError("nc_sufficiency_check: empty sequences");
  if (!(delta > 0.0 && delta <= ext.window())) throw InputError("nc_sufficiency_check: delta must lie in (0, T]");
  for (std::size_t k = 0; k < t_seq.size(); ++k) {
    if (!(t_seq[k] > 0.0) || (k > 0 && !(t_seq[k] < t_seq[k - 1]))) {
      throw InputError("nc_sufficiency_check: t_n must be positive and decreasing");
    }
  }
  for (std::size_t k = 0; k < s_seq.size(); ++k) {
    if (!(s_seq[k] < 0.0) || (k > 0 && !(s_seq[k] > s_seq[k - 1]))) {
      throw InputError("nc_sufficiency_check: s_n must be negative and increasing");
    }
  }
  for (std::size_t i : xs)
    if (i >= ext.size()) throw InputError("nc_sufficiency_check: index out of range");
  for (std::size_t i : ys)
    if (i >= ext.size()) throw InputError("nc_sufficiency_check: index out of range");

  // open interval (-delta, delta)
  std::vector<double> probe(samples);
  for (std::size_t k = 0; k < samples; ++k) probe[k] = -delta + 2.0 * delta * static_cast<double>(k + 1) / (samples + 1);
  std::vector<double> g(samples);
  for (std::size_t k = 0; k < samples; ++k) g[k] = detail::max_over_points(ext, probe[k]).first;
  auto deviation = [&](std::size_t i) {
    double worst = 0.0;
    for (std::size_t k = 0; k < samples; ++k) worst = std::max(worst, std::abs(ext(i, probe[k]) - g[k]));
    return worst;
  };

  NcSufficiencyReport r;
  r.xs_deviation = deviation(xs.back());
  r.ys_deviation = deviation(ys.back());
  r.xs_converge = r.xs_deviation <= tol;
  r.ys_converge = r.ys_deviation <= tol;

  r.right_limsup = -std::numeric_limits<double>::infinity();
  for (std::size_t k = xs.size() / 2; k < xs.size(); ++k) {
    const auto local = schedule.capped(t_seq[k] / 4.0);
    r.right_limsup = std::max(r.right_limsup, right_derivative(ext.section(xs[k]), t_seq[k], local).value);
  }
  r.left_liminf = std::numeric_limits<double>::infinity();
  for (std::size_t k = ys.size() / 2; k < ys.size(); ++k) {
    const auto local = schedule.capped(-s_seq[k] / 4.0);
    r.left_liminf = std::min(r.left_liminf, left_derivative(ext.section(ys[k]), s_seq[k], local).value);
  }
  r.right_limsup_ok = r.right_limsup >= -tol;
  r.left_liminf_ok = r.left_liminf <= tol;
  r.holds = r.xs_converge && r.ys_converge && r.right_limsup_ok && r.left_liminf_ok;
  return r;
}

}  // namespace bjext
