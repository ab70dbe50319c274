#pragma once

/**
 * @file convex1d.hpp
 * @brief One-dimensional convex curves: evaluation, one-sided derivatives,
 *        convexity validation and scalar minimization.
 *
 * Every criterion in this library reduces to questions about convex functions
 * of one real variable t: the per-point sections t -> p(x,t) and the sup
 * envelope g(t) = max_x p(x,t). Curves are always backed by an evaluator and
 * never by stored samples.
 *
 * One-sided derivatives are limits of difference quotients. For a convex v the
 * forward quotient (v(t+d)-v(t))/d is non-increasing as d shrinks and the
 * backward quotient (v(t)-v(t-d))/d is non-decreasing, so both sequences are
 * monotone and converge to v'(t+) and v'(t-). A quotient sequence that moves
 * the wrong way by more than rounding plus tol_convex means the evaluator is
 * not convex, and is reported as a NumericalError.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bjext/errors.hpp"

namespace bjext {

inline constexpr double kTolConvex = 1e-9;
inline constexpr double kTolDeriv = 1e-7;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double t) const { return t >= lo && t <= hi; }
};

class ConvexCurve {
 public:
  using Evaluator = std::function<double(double)>;

  ConvexCurve(Evaluator eval, Interval domain, std::string label = {})
      : eval_(std::move(eval)), domain_(domain), label_(std::move(label)) {
    if (!eval_) throw InputError("ConvexCurve: empty evaluator");
    if (!(std::isfinite(domain_.lo) && std::isfinite(domain_.hi)) || !(domain_.lo < domain_.hi)) {
      throw InputError("ConvexCurve '" + label_ + "': domain must be a finite interval with lo < hi");
    }
  }

  double operator()(double t) const {
    if (!domain_.contains(t)) {
      throw InputError("ConvexCurve '" + label_ + "': t=" + std::to_string(t) + " outside [" +
                       std::to_string(domain_.lo) + ", " + std::to_string(domain_.hi) + "]");
    }
    const double v = eval_(t);
    if (!std::isfinite(v)) {
      throw NumericalError("ConvexCurve '" + label_ + "': non-finite value at t=" + std::to_string(t));
    }
    return v;
  }

  const Interval& domain() const { return domain_; }
  const std::string& label() const { return label_; }

  /// Same evaluator restricted to a sub-interval.
  ConvexCurve restricted(Interval sub) const {
    if (sub.lo < domain_.lo || sub.hi > domain_.hi) {
      throw InputError("ConvexCurve '" + label_ + "': restriction leaves the domain");
    }
    return ConvexCurve(eval_, sub, label_);
  }

 private:
  Evaluator eval_;
  Interval domain_;
  std::string label_;
};

/// Difference-quotient schedule for one-sided derivatives.
struct DerivSchedule {
  double initial_step = 0.0;  // 0 selects 1e-2 * domain width
  double shrink = 0.5;
  int max_steps = 30;
  double tol_deriv = kTolDeriv;
  double tol_convex = kTolConvex;

  double step_for(const Interval& domain) const {
    return initial_step > 0.0 ? initial_step : 1e-2 * domain.width();
  }

  /// Copy with the initial step capped at `cap` (used when t sits close to a
  /// point the quotients must not straddle).
  DerivSchedule capped(double cap) const {
    DerivSchedule s = *this;
    s.initial_step = initial_step > 0.0 ? std::min(initial_step, cap) : cap;
    return s;
  }
};

struct DerivEstimate {
  double value = 0.0;
  bool converged = false;
  int steps = 0;
};

struct DerivPair {
  double right = 0.0;
  double left = 0.0;
  bool right_converged = false;
  bool left_converged = false;
};

namespace detail {

// Rounding noise of a quotient built from values of magnitude ~|a|,|b| over a step.
inline double quotient_noise(double a, double b, double c, double step) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  return 4.0 * eps * (std::abs(a) + std::abs(b) + std::abs(c)) / step;
}

// direction = +1 for the right derivative, -1 for the left one.
inline DerivEstimate one_sided_derivative(const ConvexCurve& curve, double t, const DerivSchedule& schedule,
                                          int direction) {
  if (!(schedule.shrink > 0.0 && schedule.shrink < 1.0) || schedule.max_steps < 3 ||
      !(schedule.tol_deriv > 0.0) || !(schedule.tol_convex >= 0.0)) {
    throw InputError("DerivSchedule: need shrink in (0,1), max_steps >= 3, tol_deriv > 0, tol_convex >= 0");
  }
  const Interval& dom = curve.domain();
  const char* side = direction > 0 ? "right" : "left";
  if (!dom.contains(t)) {
    throw InputError(std::string(side) + " derivative: t outside the domain of '" + curve.label() + "'");
  }
  double step = schedule.step_for(dom);
  if (!(step > 0.0)) throw InputError(std::string(side) + " derivative: initial step must be positive");
  const double far = t + direction * step;
  if (far > dom.hi || far < dom.lo) {
    throw InputError(std::string(side) + " derivative of '" + curve.label() + "' at t=" + std::to_string(t) +
                     ": first step leaves the domain; shrink the initial step");
  }

  // Convergence is judged on Richardson-extrapolated quotients
  // r_k = (q_k - s q_{k-1}) / (1 - s), which cancel the O(step) term of smooth
  // curves and equal q_k once the quotients are constant (kinked curves).
  const double s = schedule.shrink;
  const double v0 = curve(t);
  double prev_q = 0.0, prev_r = 0.0;
  double prev_v = v0;
  int stable = 0;
  for (int k = 0; k < schedule.max_steps; ++k, step *= s) {
    const double v = curve(t + direction * step);
    const double q = direction * (v - v0) / step;
    if (k > 0) {
      const double slack = schedule.tol_convex + detail::quotient_noise(v0, v, prev_v, step);
      // right quotients must not grow as the step shrinks, left ones must not fall
      if (direction * (q - prev_q) > slack) {
        throw NumericalError(std::string(side) + " difference quotients of '" + curve.label() +
                             "' are not monotone at t=" + std::to_string(t) + ": evaluator is not convex");
      }
      const double r = (q - s * prev_q) / (1.0 - s);
      // differences below the rounding level of r cannot be resolved further
      const double r_noise = 3.0 * detail::quotient_noise(v0, v, prev_v, step);
      if (k > 1 && std::abs(r - prev_r) <= schedule.tol_deriv + r_noise) {
        if (++stable >= 2) return {r, true, k + 1};
      } else {
        stable = 0;
      }
      prev_r = r;
    }
    prev_q = q;
    prev_v = v;
  }
  return {prev_q, false, schedule.max_steps};
}

}  // namespace detail

inline DerivEstimate right_derivative(const ConvexCurve& curve, double t, const DerivSchedule& schedule = {}) {
  return detail::one_sided_derivative(curve, t, schedule, +1);
}

inline DerivEstimate left_derivative(const ConvexCurve& curve, double t, const DerivSchedule& schedule = {}) {
  return detail::one_sided_derivative(curve, t, schedule, -1);
}

inline DerivPair one_sided_derivatives(const ConvexCurve& curve, double t, const DerivSchedule& schedule = {}) {
  const DerivEstimate r = right_derivative(curve, t, schedule);
  const DerivEstimate l = left_derivative(curve, t, schedule);
  return {r.value, l.value, r.converged, l.converged};
}

/// True iff all second differences on a uniform grid of `grid_size` points are
/// >= -tol_convex (plus rounding noise of the three values involved).
inline bool check_convex(const ConvexCurve& curve, std::size_t grid_size, double tol_convex = kTolConvex) {
  if (grid_size < 3) throw InputError("check_convex: grid_size must be at least 3");
  const Interval& dom = curve.domain();
  std::vector<double> v(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double t = i + 1 == grid_size ? dom.hi : dom.lo + dom.width() * static_cast<double>(i) / (grid_size - 1);
    v[i] = curve(t);
  }
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t i = 1; i + 1 < grid_size; ++i) {
    const double second = v[i - 1] - 2.0 * v[i] + v[i + 1];
    const double noise = 8.0 * eps * (std::abs(v[i - 1]) + 2.0 * std::abs(v[i]) + std::abs(v[i + 1]));
    if (second < -(tol_convex + noise)) return false;
  }
  return true;
}

struct Minimum {
  double t = 0.0;
  double value = 0.0;
};

/// Golden-section minimization over the whole domain. Every step checks that
/// the interior probe lies below the chord of its neighbours; a violation
/// beyond tol_convex means the curve is not convex.
inline Minimum minimize_convex(const ConvexCurve& curve, double tol_t, double tol_convex = kTolConvex) {
  if (!(tol_t > 0.0)) throw InputError("minimize_convex: tol_t must be positive");
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const Interval& dom = curve.domain();
  const double floor_t = 16.0 * eps * std::max({1.0, std::abs(dom.lo), std::abs(dom.hi)});
  const double stop = std::max(tol_t, floor_t);

  double a = dom.lo, b = dom.hi;
  double fa = curve(a), fb = curve(b);
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = curve(x1), f2 = curve(x2);

  auto below_chord = [&](double xl, double fl, double xm, double fm, double xr, double fr) {
    if (!(xl < xm && xm < xr)) return;
    const double chord = fl + (fr - fl) * (xm - xl) / (xr - xl);
    const double noise = 8.0 * eps * (std::abs(fl) + std::abs(fm) + std::abs(fr));
    if (fm > chord + tol_convex + noise) {
      throw NumericalError("minimize_convex: '" + curve.label() + "' is not convex near t=" + std::to_string(xm));
    }
  };

  while (b - a > stop) {
    below_chord(a, fa, x1, f1, x2, f2);
    below_chord(x1, f1, x2, f2, b, fb);
    if (f1 <= f2) {
      b = x2;
      fb = f2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = curve(x1);
    } else {
      a = x1;
      fa = f1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = curve(x2);
    }
  }

  Minimum best{a, fa};
  for (const auto& [t, v] : {std::pair{x1, f1}, std::pair{x2, f2}, std::pair{b, fb}}) {
    if (v < best.value) best = {t, v};
  }
  return best;
}

struct LimsupCheck {
  bool holds = false;
  double limsup = 0.0;          // max right derivative over the tail of the sequence
  double limit_right = 0.0;     // right derivative of the limit curve
  double final_deviation = 0.0;  // sup-distance of the last curve to the limit on the sample grid
};

/// Numerical check that limsup_n f_n'(t+) <= f'(t+) for a sequence of convex
/// curves converging pointwise to `limit`. The tail is the second half of the
/// sequence. Pointwise convergence is validated on `sample_count` points of the
/// limit's domain: the last curve must lie within tol_pointwise of the limit
/// and no closer curve may precede a farther one by more than tol_pointwise.
inline LimsupCheck limsup_derivative_check(std::span<const ConvexCurve> curves, const ConvexCurve& limit, double t,
                                           const DerivSchedule& schedule = {}, double tol_pointwise = 1e-2,
                                           std::size_t sample_count = 21) {
  if (curves.empty()) throw InputError("limsup_derivative_check: empty sequence");
  if (sample_count < 2) throw InputError("limsup_derivative_check: need at least two sample points");
  const Interval& dom = limit.domain();
  std::vector<double> deviation(curves.size(), 0.0);
  for (std::size_t n = 0; n < curves.size(); ++n) {
    for (std::size_t k = 0; k < sample_count; ++k) {
      const double s = dom.lo + dom.width() * static_cast<double>(k) / (sample_count - 1);
      deviation[n] = std::max(deviation[n], std::abs(curves[n](s) - limit(s)));
    }
  }
  if (deviation.back() > tol_pointwise) {
    throw InputError("limsup_derivative_check: sequence does not approach the limit (final deviation " +
                     std::to_string(deviation.back()) + ")");
  }
  for (std::size_t n = 1; n < curves.size(); ++n) {
    if (deviation[n] > deviation[n - 1] + tol_pointwise) {
      throw InputError("limsup_derivative_check: deviation grows along the sequence at term " + std::to_string(n));
    }
  }

  LimsupCheck out;
  out.final_deviation = deviation.back();
  out.limit_right = right_derivative(limit, t, schedule).value;
  out.limsup = -std::numeric_limits<double>::infinity();
  for (std::size_t n = curves.size() / 2; n < curves.size(); ++n) {
    out.limsup = std::max(out.limsup, right_derivative(curves[n], t, schedule).value);
  }
  out.holds = out.limsup <= out.limit_right + schedule.tol_deriv;
  return out;
}

}  // namespace bjext
