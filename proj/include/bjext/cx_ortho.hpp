#pragma once

// Birkhoff-James orthogonality f ⊥_B g in C(X) with the supremum norm.
//
// Three routes are available and decide() runs all of them:
//   sign test   x, y in M_|f| with f(x)g(x) >= 0 and f(y)g(y) <= 0
//   oracle      min over lambda of ||f + lambda g||_inf compared with ||f||_inf
//   criterion   the extension p(x,t) = |f(x) + t g(x)| of |f| is a BJ extension

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bjext/convex1d.hpp"
#include "bjext/errors.hpp"
#include "bjext/extension.hpp"
#include "bjext/space.hpp"

namespace bjext {

struct SignTest {
  bool orthogonal = false;
  std::optional<std::size_t> pos_witness;  // argmax of f g over M_|f|, kept when >= -tol
  std::optional<std::size_t> neg_witness;  // argmin of f g over M_|f|, kept when <= tol
  SupSet norm_set;                         // M_|f|
  double norm_f = 0.0;
  double tol = 0.0;
};

struct OrthogonalityVerdict {
  bool orthogonal = false;  // sign-test verdict
  std::optional<std::size_t> pos_witness;
  std::optional<std::size_t> neg_witness;
  double oracle_min = 0.0;
  double oracle_argmin = 0.0;
  bool methods_agree = false;  // sign test == (oracle_min >= ||f|| - tol)
  bool criterion_verdict = false;
  bool criterion_agrees = false;  // derivative criterion on |f + t g| == sign test
  double norm_f = 0.0;
  double tol = 0.0;
  std::size_t norm_set_size = 0;
};

namespace detail {

inline void require_same_space(const ScalarField& f, const ScalarField& g) {
  if (!f.same_space(g) && f.space()->labels() != g.space()->labels()) {
    throw InputError("f and g live on different spaces");
  }
  if (f.size() != g.size()) throw InputError("f and g differ in length");
}

inline void require_nonzero(const ScalarField& f, const ScalarField& g) {
  const double scale = std::max(f.sup_norm(), g.sup_norm());
  if (!(f.sup_norm() > 1e-12 * (1.0 + scale))) {
    throw InputError("f is identically zero; orthogonality to it is not characterized");
  }
}

}  // namespace detail

/// Sign tolerance 1e-9 (1 + ||f|| ||g||).
inline double default_sign_tol(const ScalarField& f, const ScalarField& g) {
  return 1e-9 * (1.0 + f.sup_norm() * g.sup_norm());
}

inline SignTest sign_test(const ScalarField& f, const ScalarField& g, std::optional<double> tol = std::nullopt) {
  detail::require_same_space(f, g);
  detail::require_nonzero(f, g);
  SignTest r;
  r.tol = tol.value_or(default_sign_tol(f, g));
  r.norm_f = f.sup_norm();
  r.norm_set = sup_attaining_set(f.abs());

  std::size_t hi = r.norm_set.indices.front(), lo = hi;
  for (std::size_t i : r.norm_set.indices) {
    if (f[i] * g[i] > f[hi] * g[hi]) hi = i;
    if (f[i] * g[i] < f[lo] * g[lo]) lo = i;
  }
  if (f[hi] * g[hi] >= -r.tol) r.pos_witness = hi;
  if (f[lo] * g[lo] <= r.tol) r.neg_witness = lo;
  r.orthogonal = r.pos_witness && r.neg_witness;
  return r;
}

/// min over lambda of ||f + lambda g||_inf. The bracket starts at [-1, 1] and
/// doubles until both ends exceed the value at 0; g = 0 returns (||f||, 0).
inline Minimum cx_oracle(const ScalarField& f, const ScalarField& g, double tol_t = 1e-10) {
  detail::require_same_space(f, g);
  const double norm_f = f.sup_norm();
  if (g.sup_norm() == 0.0) return {0.0, norm_f};

  auto phi = [&f, &g](double lambda) {
    double m = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f[i] + lambda * g[i]));
    return m;
  };
  const double center = phi(0.0);
  double half = 1.0;
  int doublings = 0;
  while (!(phi(half) > center && phi(-half) > center)) {
    half *= 2.0;
    if (++doublings > 200) throw NumericalError("cx_oracle: bracket expansion did not terminate");
  }
  Minimum m = minimize_convex(ConvexCurve(phi, {-half, half}, "||f + lambda g||"), tol_t);
  if (center <= m.value) m = {0.0, center};
  return m;
}

/// The extension p(x,t) = |f(x) + t g(x)| of |f|.
inline ConvexExtension abs_combination_extension(const ScalarField& f, const ScalarField& g,
                                                 const ExtensionOptions& options = {}) {
  detail::require_same_space(f, g);
  return build_extension(f.abs(), AbsAffineFamily{f.values(), g.values()}, options);
}

inline OrthogonalityVerdict decide(const ScalarField& f, const ScalarField& g, std::optional<double> tol = std::nullopt,
                                   double tol_t = 1e-10) {
  const SignTest s = sign_test(f, g, tol);
  const Minimum m = cx_oracle(f, g, tol_t);

  OrthogonalityVerdict v;
  v.orthogonal = s.orthogonal;
  v.pos_witness = s.pos_witness;
  v.neg_witness = s.neg_witness;
  v.oracle_min = m.value;
  v.oracle_argmin = m.t;
  v.norm_f = s.norm_f;
  v.tol = s.tol;
  v.norm_set_size = s.norm_set.indices.size();
  v.methods_agree = s.orthogonal == (m.value >= s.norm_f - s.tol);

  // on M_|f| the right derivative of |f + t g| at 0 is g sgn f = f g / |f|
  const ConvexExtension ext = abs_combination_extension(f, g);
  CriterionOptions copts;
  copts.slope_tol = s.tol / s.norm_f;
  v.criterion_verdict = bj_extension_criterion(ext, copts).verdict;
  v.criterion_agrees = v.criterion_verdict == s.orthogonal;
  return v;
}

}  // namespace bjext
