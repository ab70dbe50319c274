#pragma once

/**
 * @file operators.hpp
 * @brief Birkhoff-James orthogonality A ⊥_B B of real n x n matrices.
 *
 * The operator question is realized as a convex extension over a sampled unit
 * sphere: p(x,t) = ||Ax + tBx|| extends x -> ||Ax||, and it is a BJ extension
 * iff ||A + lambda B|| >= ||A|| for all lambda. Alongside that:
 *
 *  - bj_operator_oracle minimizes lambda -> ||A + lambda B|| directly. The
 *    Euclidean operator norm comes from power iteration on the normal matrix
 *    with a trace bound certifying the result;
 *    other norms use the max over the sphere sample (a lower bound, flagged as
 *    an approximation).
 *  - bhatia_semrl_euclidean looks for a unit x in the top right-singular
 *    subspace of A with <Ax, Bx> = 0, solving the quadratic form exactly.
 */

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bjext/convex1d.hpp"
#include "bjext/errors.hpp"
#include "bjext/extension.hpp"
#include "bjext/norms.hpp"
#include "bjext/parallel.hpp"
#include "bjext/space.hpp"

namespace bjext {

struct MatrixPair {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  NormTag norm = NormTag::euclidean();

  MatrixPair(Eigen::MatrixXd a, Eigen::MatrixXd b, NormTag tag = NormTag::euclidean())
      : A(std::move(a)), B(std::move(b)), norm(tag) {
    if (A.rows() == 0 || A.rows() != A.cols()) throw InputError("A must be a non-empty square matrix");
    if (B.rows() != A.rows() || B.cols() != A.cols()) throw InputError("A and B must have the same shape");
    if (!A.allFinite() || !B.allFinite()) throw InputError("matrix entries must be finite");
  }

  std::size_t dim() const { return static_cast<std::size_t>(A.rows()); }
};

struct SphereSample {
  std::vector<Eigen::VectorXd> points;  // unit vectors under `norm`
  NormTag norm = NormTag::euclidean();
  std::uint64_t seed = 0;
  SpaceRef as_space;  // d(x,y) = min(||x - y||, ||x + y||)
};

inline double vector_norm(const NormTag& norm, const Eigen::VectorXd& v) {
  return norm(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

/// The 2n coordinate directions ±e_i followed by count - 2n Gaussian directions
/// normalized under `norm`. Deterministic for a fixed seed on a given standard
/// library.
inline SphereSample sample_sphere(std::size_t dim, NormTag norm, std::size_t count, std::uint64_t seed) {
  if (dim == 0) throw InputError("sample_sphere: dimension must be positive");
  if (count < 2 * dim) throw InputError("sample_sphere: need count >= 2n to include the coordinate directions");
  SphereSample s;
  s.norm = norm;
  s.seed = seed;
  s.points.reserve(count);
  for (std::size_t i = 0; i < dim; ++i) {
    for (double sign : {1.0, -1.0}) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
      e[static_cast<Eigen::Index>(i)] = sign;
      s.points.push_back(std::move(e));
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  while (s.points.size() < count) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = normal(rng);
    const double len = vector_norm(norm, v);
    if (!(len > 1e-8)) continue;
    s.points.push_back(v / len);
  }

  const std::size_t n = s.points.size();
  std::vector<std::string> labels(n);
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) labels[i] = "s" + std::to_string(i);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      dist[i * n + j] = std::min(vector_norm(norm, s.points[i] - s.points[j]), vector_norm(norm, s.points[i] + s.points[j]));
    }
  });
  s.as_space = share(DiscreteMetricSpace(std::move(labels), std::move(dist)));
  return s;
}

/// Largest singular value of C by power iteration on M = C^T C, with the
/// iterate M^k v0 (k = 2^s) formed by repeated squaring. The Rayleigh quotient
/// of the iterate is a lower bound on lambda_max(M); tr(M^k) gives
/// lambda_max^k <= tr <= n lambda_max^k. Iteration stops once these bounds
/// pin sigma = sqrt(lambda_max) to rel_tol; the Rayleigh value is returned.
/// Clustered spectra cannot stop it early. A start vector missing the dominant
/// eigenspace, or an overflow, triggers a restart with a perturbed vector; the
/// third failure throws.
inline double spectral_norm(const Eigen::MatrixXd& C, double rel_tol = 1e-10) {
  if (C.size() == 0) return 0.0;
  Eigen::MatrixXd M = C.transpose() * C;
  const double scale = M.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  M /= scale;
  const Eigen::Index n = M.rows();
  const double log_n = std::log(static_cast<double>(n));

  for (int restart = 0; restart <= 3; ++restart) {
    Eigen::VectorXd v0(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      v0[i] = 1.0 + 0.6180339887498949 * std::sin(1.0 + static_cast<double>(i) * (2.0 + restart) + 0.37 * restart);
    }
    v0.normalize();
    Eigen::MatrixXd P = M;  // M^k / exp(log_shift)
    double log_shift = 0.0, k = 1.0;
    for (int step = 0; step < 64; ++step) {
      Eigen::VectorXd v = P * v0;
      const double len = v.norm();
      if (!(len > 1e-10) || !v.allFinite()) break;  // v0 missed the dominant eigenspace
      v /= len;
      const double rayleigh = v.dot(M * v);
      const double log_tr = std::log(P.trace()) + log_shift;
      const double hi = log_tr / k;
      const double lo = std::max(std::log(rayleigh), (log_tr - log_n) / k);
      if (hi - lo <= 2.0 * rel_tol) return std::sqrt(scale * rayleigh);
      P = P * P;
      log_shift *= 2.0;
      k *= 2.0;
      const double pmax = P.cwiseAbs().maxCoeff();
      if (!(pmax > 0.0) || !std::isfinite(pmax)) break;
      P /= pmax;
      log_shift += std::log(pmax);
    }
  }
  throw NumericalError("power iteration stagnated after 3 restarts");
}

struct OperatorOracle {
  double min = 0.0;     // min over lambda of ||A + lambda B||
  double argmin = 0.0;  // lambda attaining it
  double norm_a = 0.0;  // ||A|| by the same norm routine
  bool approximate = false;

  bool orthogonal(double tol) const { return min >= norm_a - tol; }
};

namespace detail {

inline double sampled_operator_norm(const Eigen::MatrixXd& C, const SphereSample& sample) {
  double m = 0.0;
  for (const auto& x : sample.points) m = std::max(m, vector_norm(sample.norm, C * x));
  return m;
}

}  // namespace detail

/// Convex minimization of lambda -> ||A + lambda B|| with the same bracket rule
/// as the C(X) oracle. Non-Euclidean norms need `sample`.
inline OperatorOracle bj_operator_oracle(const MatrixPair& pair, double tol_t = 1e-10,
                                         const SphereSample* sample = nullptr) {
  const bool euclid = pair.norm.kind() == NormTag::Kind::euclidean;
  if (!euclid && (sample == nullptr || !(sample->norm == pair.norm))) {
    throw InputError("non-Euclidean operator norms need a sphere sample under the same norm");
  }
  auto op_norm = [&](double lambda) {
    const Eigen::MatrixXd C = pair.A + lambda * pair.B;
    return euclid ? spectral_norm(C) : detail::sampled_operator_norm(C, *sample);
  };

  OperatorOracle out;
  out.approximate = !euclid;
  out.norm_a = op_norm(0.0);
  if (pair.B.cwiseAbs().maxCoeff() == 0.0) {
    out.min = out.norm_a;
    return out;
  }
  double half = 1.0;
  int doublings = 0;
  while (!(op_norm(half) > out.norm_a && op_norm(-half) > out.norm_a)) {
    half *= 2.0;
    if (++doublings > 200) throw NumericalError("operator oracle: bracket expansion did not terminate");
  }
  // norms are only accurate to 1e-10 relative, so the chord check needs that much slack
  const double slack = kTolConvex + 4e-10 * std::max(op_norm(half), op_norm(-half));
  const Minimum m = minimize_convex(ConvexCurve(op_norm, {-half, half}, "||A + lambda B||"), tol_t, slack);
  if (m.value < out.norm_a) {
    out.min = m.value;
    out.argmin = m.t;
  } else {
    out.min = out.norm_a;
  }
  return out;
}

/// The extension p(x,t) = ||Ax + tBx|| of x -> ||Ax|| over the sample.
inline ConvexExtension operator_extension(const MatrixPair& pair, const SphereSample& sample,
                                          const ExtensionOptions& options = {}) {
  if (!(sample.norm == pair.norm)) throw InputError("sphere sample and matrix pair use different norms");
  if (sample.points.empty() || static_cast<std::size_t>(sample.points.front().size()) != pair.dim()) {
    throw InputError("sphere sample dimension differs from the matrices");
  }
  NormFamily fam;
  fam.norm = pair.norm;
  fam.a.reserve(sample.points.size());
  fam.b.reserve(sample.points.size());
  for (const auto& x : sample.points) {
    const Eigen::VectorXd ax = pair.A * x, bx = pair.B * x;
    fam.a.emplace_back(ax.data(), ax.data() + ax.size());
    fam.b.emplace_back(bx.data(), bx.data() + bx.size());
  }
  ScalarField base = implied_base(sample.as_space, fam);
  return build_extension(base, fam, options);
}

struct OperatorCriterionReport {
  WitnessReport report;
  double sampled_norm = 0.0;  // max over the sample of ||Ax||
  bool approximate = false;   // true for non-Euclidean norms
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  double pitch = 0.0;       // largest nearest-neighbour distance of the sample (antipodal metric)
  double sup_tol = 0.0;     // M_f membership tolerance actually used
  double slope_band = 0.0;  // 2 ||B|| pitch: derivatives this close to 0 are below sampling resolution
};

/// Derivative criterion on the sampled sphere. Unless options.sup_tol is set,
/// M_f collects samples with ||Ax|| >= max - max * pitch^2, so that it reaches
/// past the nearest samples on either side of a true maximizer instead of
/// collapsing to the single best sample.
inline OperatorCriterionReport bj_operator_criterion(const MatrixPair& pair, const SphereSample& sample,
                                                     const CriterionOptions& options = {}) {
  if (pair.A.cwiseAbs().maxCoeff() == 0.0) throw InputError("A must not be the zero matrix");
  const ConvexExtension ext = operator_extension(pair, sample);
  OperatorCriterionReport r;
  r.sampled_norm = ext.base().sup();
  r.pitch = sample.as_space->pitch();
  r.sup_tol = options.sup_tol.value_or(r.sampled_norm * r.pitch * r.pitch + default_sup_tol(r.sampled_norm));
  r.slope_band = 2.0 * detail::sampled_operator_norm(pair.B, sample) * r.pitch;
  CriterionOptions opts = options;
  opts.sup_tol = r.sup_tol;
  r.report = bj_extension_criterion(ext, opts);
  r.approximate = pair.norm.kind() != NormTag::Kind::euclidean;
  r.seed = sample.seed;
  r.samples = sample.points.size();
  return r;
}

/// Unit x with ||Ax|| = ||A|| and |<Ax, Bx>| <= tol ||A|| ||B||, Euclidean only.
///
/// The top right-singular subspace V collects singular values within 1e-8
/// (relative) of the largest. On it <AVy, BVy> = y^T S y with S the symmetric
/// part of (AV)^T (BV). A zero on the unit sphere exists iff S has eigenvalues
/// of both signs or one within tolerance of 0; with extreme eigenpairs
/// (mu_min, u), (mu_max, w) of opposite sign the witness is
/// y = sqrt(mu_max / (mu_max - mu_min)) u + sqrt(-mu_min / (mu_max - mu_min)) w.
inline std::optional<Eigen::VectorXd> bhatia_semrl_euclidean(const MatrixPair& pair, double tol = 1e-8,
                                                             double cluster_tol = 1e-8) {
  if (pair.norm.kind() != NormTag::Kind::euclidean) throw InputError("bhatia_semrl_euclidean needs the euclidean norm");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_a(pair.A, Eigen::ComputeFullV);
  const Eigen::VectorXd sigma = svd_a.singularValues();
  const double norm_a = sigma[0];
  if (norm_a == 0.0) throw InputError("A must not be the zero matrix");
  Eigen::Index k = 1;
  while (k < sigma.size() && sigma[k] >= norm_a * (1.0 - cluster_tol)) ++k;
  const Eigen::MatrixXd V = svd_a.matrixV().leftCols(k);

  const double norm_b = pair.B.size() ? Eigen::JacobiSVD<Eigen::MatrixXd>(pair.B).singularValues()[0] : 0.0;
  const double threshold = tol * norm_a * std::max(norm_b, std::numeric_limits<double>::min());

  const Eigen::MatrixXd Q = (pair.A * V).transpose() * (pair.B * V);
  const Eigen::MatrixXd S = 0.5 * (Q + Q.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  const Eigen::VectorXd mu = eig.eigenvalues();
  const double mu_min = mu[0], mu_max = mu[mu.size() - 1];

  auto inner = [&](const Eigen::VectorXd& x) { return (pair.A * x).dot(pair.B * x); };

  Eigen::VectorXd x;
  Eigen::Index closest = 0;
  for (Eigen::Index i = 1; i < mu.size(); ++i)
    if (std::abs(mu[i]) < std::abs(mu[closest])) closest = i;
  if (std::abs(mu[closest]) <= threshold) {
    x = V * eig.eigenvectors().col(closest);
  } else if (mu_min < 0.0 && mu_max > 0.0) {
    const double span = mu_max - mu_min;
    const Eigen::VectorXd y = std::sqrt(mu_max / span) * eig.eigenvectors().col(0) +
                              std::sqrt(-mu_min / span) * eig.eigenvectors().col(mu.size() - 1);
    x = V * y;
  } else {
    return std::nullopt;
  }
  x.normalize();
  if (std::abs(inner(x)) > threshold) return std::nullopt;
  return x;
}

}  // namespace bjext
