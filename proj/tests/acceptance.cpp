// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Random inputs come from fixed seeds, printed with every failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bjext/convex1d.hpp"
#include "bjext/cx_ortho.hpp"
#include "bjext/extension.hpp"
#include "bjext/operators.hpp"
#include "bjext/space.hpp"
#include "fixtures.hpp"
#include "operator_cases.hpp"
#include "oracles.hpp"

using namespace bjext;

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Collects failed checks; the first few are printed under the criterion line.
struct Checks {
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& text) { notes.push_back(text); }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds, 0 = none
  std::function<void(Checks&)> body;
};

// ---------------------------------------------------------------------------

void abs_shift_end_to_end(Checks& c) {
  const ConvexExtension ext = fixture::abs_shift(201);
  const auto t = symmetric_grid(ext.window());
  c.expect(bj_extension_bruteforce(ext, t).is_bj, "brute force should report a BJ extension");
  const WitnessReport r = bj_extension_criterion(ext);
  c.expect(r.verdict, "criterion should report a BJ extension");
  if (r.right_witness && r.left_witness) {
    c.expect(std::abs(r.right_witness->derivative - 1.0) <= 1e-6,
             "right-witness derivative " + fmt(r.right_witness->derivative) + " != +1");
    c.expect(std::abs(r.left_witness->derivative + 1.0) <= 1e-6,
             "left-witness derivative " + fmt(r.left_witness->derivative) + " != -1");
  } else {
    c.expect(false, "missing criterion witness");
  }
  c.expect(!bhatia_semrl_witness(ext, t).witness.has_value(), "unexpected single-point witness");
  const double eps = 1.5 * ext.space()->pitch();
  c.expect(!epsilon_connected(*ext.space(), r.sup_set.indices, eps), "M_f should not be 1.5 pitch-connected");
}

void truncated_decaying_slopes(Checks& c) {
  for (double R : {5.0, 10.0, 20.0}) {
    const std::string tag = "R=" + fmt(R) + ": ";
    const ConvexExtension ext = fixture::decaying_slopes(R, 201);
    const double defect = std::exp(-R);

    const Envelope env = envelope(ext, symmetric_grid(1.0, 2001));
    double worst = 0.0, excess = 0.0;
    for (std::size_t k = 0; k < env.t_grid.size(); ++k) {
      const double d = std::abs(env.values[k] - std::max(1.0, 1.0 + env.t_grid[k]));
      worst = std::max(worst, d);
      // g is a double near 1: its own rounding (one ulp) is not part of the defect
      excess = std::max(excess, d - defect - kEps * env.values[k]);
    }
    c.expect(excess <= 0.0, tag + "envelope defect " + fmt(worst) + " exceeds e^-R = " + fmt(defect));

    c.expect(!bhatia_semrl_witness(ext, symmetric_grid(ext.window())).witness.has_value(),
             tag + "unexpected single-point witness");

    const MaximizingSequence plus = extract_maximizing_sequence(ext, Side::plus, 12);
    c.expect(plus.tail_converged && std::abs(plus.limit_estimate - 1.0) <= 1e-6,
             tag + "plus-side limit " + fmt(plus.limit_estimate) + " not within 1e-6 of 1");
    for (double d : plus.right_derivs) c.expect(std::abs(d - 1.0) <= 1e-6, tag + "plus-side derivative " + fmt(d));

    const MaximizingSequence minus = extract_maximizing_sequence(ext, Side::minus, 12);
    c.expect(minus.tail_converged && std::abs(minus.limit_estimate) <= defect + 1e-6,
             tag + "minus-side limit " + fmt(minus.limit_estimate) + " not within e^-R + 1e-6 of 0");
    for (double d : minus.left_derivs) c.expect(std::abs(d) <= defect + 1e-6, tag + "minus-side derivative " + fmt(d));
  }
}

void criterion_vs_bruteforce(Checks& c) {
  constexpr std::uint64_t first = 20000, count = 600;
  std::size_t disagreements = 0, positives = 0;
  for (std::uint64_t seed = first; seed < first + count; ++seed) {
    const auto rc = fixture::random_extension(seed);
    const bool brute = bj_extension_bruteforce(rc.ext, symmetric_grid(rc.ext.window())).is_bj;
    const bool crit = bj_extension_criterion(rc.ext).verdict;
    positives += crit;
    if (crit != brute || crit != rc.expected) {
      ++disagreements;
      c.expect(false, "seed " + std::to_string(seed) + " (" + rc.kind + "): criterion " + std::to_string(crit) +
                          ", brute force " + std::to_string(brute) + ", generator " + std::to_string(rc.expected));
    }
  }
  c.note(std::to_string(count) + " extensions, seeds " + std::to_string(first) + ".." + std::to_string(first + count - 1) +
         ", " + std::to_string(positives) + " BJ, " + std::to_string(disagreements) + " disagreements");
}

ScalarField on_grid(const SpaceRef& s, const std::function<double(double)>& fn) {
  std::vector<double> v;
  for (double x : *s->coordinates()) v.push_back(fn(x));
  return ScalarField(s, v);
}

void cx_three_way(Checks& c) {
  // tabulated fixtures
  const auto unit = share(DiscreteMetricSpace::interval_grid(0, 1, 101));
  const auto sym = share(DiscreteMetricSpace::interval_grid(-1, 1, 201));
  const auto one = on_grid(unit, [](double) { return 1.0; });
  const auto ramp = on_grid(unit, [](double x) { return 2 * x - 1; });

  const SignTest st = sign_test(one, ramp);
  c.expect(st.orthogonal && st.pos_witness && st.neg_witness && unit->label(*st.pos_witness) == "+1.0" &&
               unit->label(*st.neg_witness) == "+0.0",
           "f=1, g=2x-1: expected orthogonal with witnesses x=1 and x=0");
  const auto wavy = on_grid(sym, [](double x) { return std::sin(3 * x) + 0.2; });
  c.expect(sign_test(wavy, on_grid(sym, [](double) { return 0.0; })).orthogonal, "g=0 should be orthogonal");
  const SignTest self = sign_test(wavy, wavy);
  c.expect(!self.orthogonal && !self.neg_witness, "g=f should not be orthogonal and has no negative witness");

  const Minimum o1 = cx_oracle(one, ramp);
  c.expect(std::abs(o1.value - 1.0) <= 1e-9 && std::abs(o1.t) <= 1e-9, "oracle(1, 2x-1) should be (1, 0)");
  const Minimum o2 = cx_oracle(wavy, wavy);
  c.expect(std::abs(o2.value) <= 1e-9 && std::abs(o2.t + 1.0) <= 1e-9, "oracle(f, f) should be (0, -1)");
  const Minimum o3 = cx_oracle(wavy, on_grid(sym, [](double) { return 0.0; }));
  c.expect(o3.value == wavy.sup_norm() && o3.t == 0.0, "oracle(f, 0) should be (||f||, 0)");

  const auto d1 = decide(one, ramp);
  c.expect(d1.orthogonal && d1.methods_agree && d1.criterion_agrees, "decide(1, 2x-1)");
  const auto absx = on_grid(sym, [](double x) { return std::abs(x); });
  const auto cst = on_grid(sym, [](double) { return 1.0; });
  const auto d2 = decide(absx, cst);
  const auto scan2 = oracle::lambda_scan(absx.values(), cst.values(), 3.0, 60001);
  c.expect(!d2.orthogonal && d2.norm_set_size == 2 && d2.pos_witness && !d2.neg_witness && d2.methods_agree &&
               d2.criterion_agrees && scan2.value < 1.0 && std::abs(d2.oracle_min - scan2.value) <= 1e-4,
           "decide(|x|, 1)");
  const auto idx = on_grid(sym, [](double x) { return x; });
  const auto d3 = decide(idx, cst);
  const auto scan3 = oracle::lambda_scan(idx.values(), cst.values(), 3.0, 60001);
  c.expect(d3.orthogonal && d3.norm_set_size == 2 && sym->label(*d3.pos_witness) == "+1.0" &&
               sym->label(*d3.neg_witness) == "-1.0" && d3.methods_agree && d3.criterion_agrees &&
               std::abs(scan3.value - 1.0) <= 1e-12 && std::abs(d3.oracle_min - 1.0) <= 1e-9,
           "decide(x, 1)");

  // random pairs
  oracle::Rng rng(31415);
  constexpr int pairs = 1200;
  std::size_t disagreements = 0, positives = 0;
  for (int k = 0; k < pairs; ++k) {
    const auto p = fixture::random_cx_pair(rng);
    const auto v = decide(p.f, p.g);
    positives += v.orthogonal;
    if (!v.methods_agree || !v.criterion_agrees || p.f.sup_norm() < 0.1) {
      ++disagreements;
      c.expect(false, "pair " + std::to_string(k) + ": sign test " + std::to_string(v.orthogonal) + ", oracle min " +
                          fmt(v.oracle_min) + ", criterion agrees " + std::to_string(v.criterion_agrees));
    }
  }
  c.note(std::to_string(pairs) + " pairs (seed 31415), " + std::to_string(positives) + " orthogonal, " +
         std::to_string(disagreements) + " disagreements");
}

void operator_witness(Checks& c) {
  Eigen::MatrixXd reflection = Eigen::MatrixXd::Identity(2, 2);
  reflection(1, 1) = -1.0;
  const MatrixPair fixed(Eigen::MatrixXd::Identity(2, 2), reflection);
  const auto w = bhatia_semrl_euclidean(fixed);
  c.expect(w.has_value(), "A=I, B=diag(1,-1): no witness");
  if (w) {
    const double inner = (fixed.A * *w).dot(fixed.B * *w);
    c.expect(std::abs(inner) <= 1e-10, "A=I, B=diag(1,-1): |<Ax,Bx>| = " + fmt(std::abs(inner)));
  }

  oracle::Rng rng(27182);
  constexpr int pairs = 300;
  std::size_t disagreements = 0, positives = 0;
  for (int k = 0; k < pairs; ++k) {
    const auto mc = fixture::random_matrix_case(rng, 2 + k % 3);
    const bool has_witness = bhatia_semrl_euclidean(mc.pair).has_value();
    const OperatorOracle o = bj_operator_oracle(mc.pair);
    const bool oracle_says = o.min >= o.norm_a - 1e-8;
    positives += oracle_says;
    if (has_witness != oracle_says || oracle_says != mc.expected) {
      ++disagreements;
      c.expect(false, "pair " + std::to_string(k) + " (" + mc.kind + ", n=" + std::to_string(2 + k % 3) +
                          "): witness " + std::to_string(has_witness) + ", oracle " + std::to_string(oracle_says));
    }
  }
  c.note(std::to_string(pairs) + " pairs (seed 27182), " + std::to_string(positives) + " orthogonal, " +
         std::to_string(disagreements) + " disagreements");
}

void density_postconditions(Checks& c) {
  oracle::Rng rng(1618);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = oracle::uniform_index(rng, 2, 120);
    const auto s = share(oracle::random_space(rng, n));
    const std::size_t m = s->size();
    const ScalarField f(s, oracle::quantized_field(rng, m, -3, 3, 0.25, oracle::uniform_index(rng, 1, 4)));
    const auto top = sup_attaining_set(f, 0.0).indices;
    const std::size_t x0 = top[oracle::uniform_index(rng, 0, top.size() - 1)];
    std::size_t y0 = oracle::uniform_index(rng, 0, m - 1);
    if (y0 == x0) y0 = (x0 + 1) % m;
    const double eps = oracle::uniform(rng, 1e-6, 2.0);
    const ScalarField fe = density_perturbation(f, x0, y0, eps);
    const std::string tag = "field " + std::to_string(k) + ": ";
    for (std::size_t i = 0; i < m; ++i) {
      // f - (f - eps r) may differ from eps r by the rounding of the subtraction
      c.expect(std::abs(f[i] - fe[i]) <= eps + 2 * kEps * (std::abs(f[i]) + eps), tag + "|f - f_eps| > eps");
      c.expect(fe[i] <= f[i], tag + "f_eps > f");
    }
    c.expect(fe.sup() == f.sup(), tag + "sup changed");
    c.expect(sup_attaining_set(fe, 0.0).indices == std::vector<std::size_t>{x0}, tag + "M_{f_eps} != {x0}");
  }
  c.note("100 fields (seed 1618)");
}

void smoothed_abs_limsup(Checks& c) {
  std::vector<ConvexCurve> fs;
  double last_right = 0.0;
  for (int k = 1; k <= 6; ++k) {
    const double inv = std::pow(10.0, -k);
    fs.emplace_back([inv](double t) { return std::sqrt(t * t + inv); }, Interval{-1, 1});
    last_right = right_derivative(fs.back(), 0.0).value;
  }
  c.expect(last_right <= 1e-3, "f_n'(0+) at n=1e6 is " + fmt(last_right));
  const ConvexCurve limit([](double t) { return std::abs(t); }, Interval{-1, 1});
  const LimsupCheck r = limsup_derivative_check(fs, limit, 0.0);
  const double margin = r.limit_right - r.limsup;
  c.expect(r.holds, "limsup bound does not hold");
  c.expect(margin >= 0.99, "margin " + fmt(margin) + " < 0.99");
  c.note("f'(0+) at n=1e6: " + fmt(last_right) + ", limsup " + fmt(r.limsup) + ", margin " + fmt(margin));
}

// Random convex curves whose minimizer c sits on the dense grid, so the grid
// search finds it exactly.
void minimize_vs_grid(Checks& c) {
  constexpr double lo = -2.0, hi = 2.0, tol_t = 1e-6;
  constexpr std::size_t count = 100001;
  oracle::Rng rng(4711);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t at = oracle::uniform_index(rng, count / 10, count - count / 10);
    const double cmin = lo + (hi - lo) * static_cast<double>(at) / static_cast<double>(count - 1);
    const bool smooth = k % 3 == 0;
    const double wl = smooth ? 0.0 : oracle::uniform(rng, 0.01, 2.0), wr = smooth ? 0.0 : oracle::uniform(rng, 0.01, 2.0);
    const double q = oracle::uniform(rng, smooth ? 0.05 : 0.0, 2.0), off = oracle::uniform(rng, -1, 1);
    const double a = oracle::uniform(rng, -2, 2), s = oracle::uniform(rng, 0, 1);
    const double r1 = oracle::uniform(rng, 0.1, 1.5), v1 = oracle::uniform(rng, 0, 2);
    auto fn = [=](double t) {
      const double u = t - cmin;
      return off + wl * std::max(0.0, -u) + wr * std::max(0.0, u) + q * u * u + s * (std::exp(a * u) - 1.0 - a * u) +
             v1 * std::max(0.0, std::abs(u) - r1);
    };
    const Minimum m = minimize_convex(ConvexCurve(fn, {lo, hi}), tol_t);
    const auto grid = oracle::dense_min(fn, lo, hi, count);
    const std::string tag = "curve " + std::to_string(k) + ": ";
    c.expect(grid.t == cmin, tag + "grid search missed the planted minimizer");
    c.expect(std::abs(m.t - grid.t) <= tol_t, tag + "argmin off by " + fmt(std::abs(m.t - grid.t)));
    c.expect(m.value <= std::max(fn(grid.t - tol_t), fn(grid.t + tol_t)) && m.value >= grid.value - 4 * kEps,
             tag + "value " + fmt(m.value) + " vs grid " + fmt(grid.value));
    worst = std::max(worst, std::abs(m.t - grid.t));
  }
  c.note("100 curves (seed 4711), worst |t - t_grid| = " + fmt(worst));
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "abs-shift extension end to end", 1.0, abs_shift_end_to_end},
      {2, "truncated decaying-slope extension", 5.0, truncated_decaying_slopes},
      {3, "derivative criterion vs brute force on random extensions", 60.0, criterion_vs_bruteforce},
      {4, "C(X) sign test vs oracle vs extension criterion", 60.0, cx_three_way},
      {5, "Euclidean operator witness vs oracle", 120.0, operator_witness},
      {6, "density perturbation postconditions", 0.0, density_postconditions},
      {7, "smoothed absolute value limsup bound", 0.0, smoothed_abs_limsup},
      {8, "minimize_convex vs dense grid", 0.0, minimize_vs_grid},
  };

  int failed = 0;
  for (const auto& cr : criteria) {
    Checks checks;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.body(checks);
    } catch (const std::exception& e) {
      checks.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.time_limit > 0.0 && secs >= cr.time_limit) {
      checks.failures.push_back("runtime " + fmt(secs) + " s exceeds " + fmt(cr.time_limit) + " s");
    }
    const bool pass = checks.failures.empty();
    failed += !pass;
    std::printf("criterion %d: %s  %s (%.2f s)\n", cr.id, pass ? "PASS" : "FAIL", cr.name, secs);
    for (const auto& n : checks.notes) std::printf("    %s\n", n.c_str());
    for (std::size_t i = 0; i < checks.failures.size() && i < 10; ++i) std::printf("    ! %s\n", checks.failures[i].c_str());
    if (checks.failures.size() > 10) std::printf("    ! ... %zu more\n", checks.failures.size() - 10);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
