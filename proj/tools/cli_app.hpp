#pragma once

// Command-line front end. parse() turns argv into a RunConfig, run() executes
// it and returns the process exit code: 0 verdict computed, 1 input or
// validation error, 2 numerical failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bjext/cx_ortho.hpp"
#include "bjext/errors.hpp"
#include "bjext/extension.hpp"
#include "bjext/io.hpp"
#include "bjext/operators.hpp"
#include "bjext/space.hpp"

namespace bjext::cli {

using ojson = nlohmann::ordered_json;

struct RunConfig {
  std::string command;
  std::string space, family, f, g, matrices;
  std::optional<double> tol_metric, tol_deriv, tol_convex, tol_verdict;
  double t_window = 0.0;  // 0: default from the base field
  std::size_t t_grid = kDefaultTGridSize;
  std::uint64_t seed = 20240901;
  std::size_t samples = 0;  // 0: 500 n
  std::string output, dump_envelope;
  std::string x0, y0;
  double eps = 0.1;
  std::string side = "plus";
  std::size_t terms = 12;
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"validate-space", "bj-extension",  "bs-witness",    "cx-ortho",
                                              "op-ortho",       "density-perturb", "maximizing-seq"};
  return names;
}

inline std::string describe(const std::string& name) {
  if (name == "validate-space") return "check metric axioms of a space file";
  if (name == "bj-extension") return "decide whether a convex extension is a BJ extension";
  if (name == "bs-witness") return "search for a single-point witness of a BJ extension";
  if (name == "cx-ortho") return "Birkhoff-James orthogonality of f and g under the sup norm";
  if (name == "op-ortho") return "Birkhoff-James orthogonality of matrices A and B";
  if (name == "density-perturb") return "perturb f so that a chosen maximizer becomes the only one";
  return "extract a maximizing sequence and its one-sided derivatives";
}

struct ParseResult {
  std::optional<RunConfig> config;
  int exit_code = 0;
};

inline ParseResult parse(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Birkhoff-James orthogonality and extension checks on discretized metric spaces", "bjext"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto positive = CLI::PositiveNumber;
  for (const auto& name : commands()) {
    CLI::App* sub = app.add_subcommand(name, describe(name));
    const bool needs_space = name != "op-ortho";
    const bool needs_family = name == "bj-extension" || name == "bs-witness" || name == "maximizing-seq";
    if (needs_space) sub->add_option("--space", cfg.space, "space JSON")->required()->check(CLI::ExistingFile);
    if (needs_family) {
      sub->add_option("--family", cfg.family, "family_spec JSON")->required()->check(CLI::ExistingFile);
      sub->add_option("--f", cfg.f, "base field CSV (overrides the family's f)")->check(CLI::ExistingFile);
      sub->add_option("--t-window", cfg.t_window, "half-width T of the t-domain")->check(positive);
      sub->add_option("--t-grid", cfg.t_grid, "odd number of t-grid points")->check(CLI::Range(3, 1 << 24));
      sub->add_option("--dump-envelope", cfg.dump_envelope, "write t,g,argmax_index CSV here");
    }
    if (name == "cx-ortho") {
      sub->add_option("--f", cfg.f, "field f CSV")->required()->check(CLI::ExistingFile);
      sub->add_option("--g", cfg.g, "field g CSV")->required()->check(CLI::ExistingFile);
    }
    if (name == "density-perturb") {
      sub->add_option("--f", cfg.f, "field CSV")->required()->check(CLI::ExistingFile);
      sub->add_option("--x0", cfg.x0, "label (or index) of the kept maximizer; default first maximizer");
      sub->add_option("--y0", cfg.y0, "label (or index) of the anchor; default farthest point from x0");
      sub->add_option("--eps", cfg.eps, "perturbation size")->check(CLI::NonNegativeNumber);
    }
    if (name == "op-ortho") {
      sub->add_option("--matrices", cfg.matrices, "matrix pair JSON")->required()->check(CLI::ExistingFile);
      sub->add_option("--samples", cfg.samples, "sphere sample count (default 500 n)");
      sub->add_option("--seed", cfg.seed, "sphere sampling seed");
    }
    if (name == "maximizing-seq") {
      sub->add_option("--side", cfg.side, "plus or minus")->check(CLI::IsMember({"plus", "minus"}));
      sub->add_option("--terms", cfg.terms, "number of sequence terms")->check(CLI::Range(3, 60));
    }
    sub->add_option("--tol-metric", cfg.tol_metric)->check(positive);
    sub->add_option("--tol-deriv", cfg.tol_deriv)->check(positive);
    sub->add_option("--tol-convex", cfg.tol_convex)->check(positive);
    sub->add_option("--tol-verdict", cfg.tol_verdict)->check(positive);
    sub->add_option("--output", cfg.output, "write the JSON report here instead of stdout");
    sub->callback([&cfg, name] { cfg.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return {std::nullopt, code == 0 ? 0 : 1};
  }
  if (cfg.t_grid % 2 == 0) {
    err << "--t-grid must be odd so that the grid contains t = 0\n";
    return {std::nullopt, 1};
  }
  return {cfg, 0};
}

namespace detail {

inline ojson label_or_null(const DiscreteMetricSpace& s, const std::optional<std::size_t>& i) {
  return i ? ojson(s.label(*i)) : ojson(nullptr);
}

inline std::size_t resolve_point(const DiscreteMetricSpace& s, const std::string& key, const char* flag) {
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.label(i) == key) return i;
  std::size_t idx = 0;
  const auto res = std::from_chars(key.data(), key.data() + key.size(), idx);
  if (res.ec == std::errc() && res.ptr == key.data() + key.size() && idx < s.size()) return idx;
  throw InputError(std::string(flag) + ": no point labelled '" + key + "'");
}

inline ojson numbers(const std::vector<double>& v) { return ojson(v); }

// Tolerances with defaults resolved; tol_verdict is a relative factor.
struct Resolved {
  double tol_metric, tol_deriv, tol_convex, tol_verdict;
};

inline Resolved resolve(const RunConfig& c) {
  return {c.tol_metric.value_or(kTolMetric), c.tol_deriv.value_or(kTolDeriv), c.tol_convex.value_or(kTolConvex),
          c.tol_verdict.value_or(kTolSlope)};
}

inline DerivSchedule schedule_for(const Resolved& r) {
  DerivSchedule s;
  s.tol_deriv = r.tol_deriv;
  s.tol_convex = r.tol_convex;
  return s;
}

inline ojson config_json(const RunConfig& c, const Resolved& r) {
  ojson j;
  j["command"] = c.command;
  auto path = [&](const char* key, const std::string& v) {
    if (!v.empty()) j[key] = v;
  };
  path("space", c.space);
  path("family", c.family);
  path("f", c.f);
  path("g", c.g);
  path("matrices", c.matrices);
  j["tol_metric"] = r.tol_metric;
  j["tol_deriv"] = r.tol_deriv;
  j["tol_convex"] = r.tol_convex;
  j["tol_verdict"] = r.tol_verdict;
  return j;
}

struct Loaded {
  ConvexExtension ext;
  std::vector<double> grid;
};

inline Loaded load_extension(const RunConfig& c, const Resolved& r, ojson& config) {
  const SpaceRef space = share(io::load_space(c.space));
  const io::ParsedFamily fam = io::family_from_json(io::load_json(c.family), space->size(), c.family);
  std::optional<ScalarField> base;
  if (!c.f.empty()) base = io::load_field(c.f, space);
  else if (fam.f) base = ScalarField(space, *fam.f);
  else base = implied_base(space, fam.spec);

  ExtensionOptions opts;
  opts.tol_convex = r.tol_convex;
  opts.window = c.t_window > 0.0 ? c.t_window : fam.window.value_or(0.0);
  opts.modulus = fam.modulus;
  ConvexExtension ext = build_extension(*base, fam.spec, opts);
  config["family_kind"] = to_string(ext.kind());
  config["t_window"] = ext.window();
  config["t_grid"] = c.t_grid;
  if (!c.dump_envelope.empty()) config["dump_envelope"] = c.dump_envelope;
  std::vector<double> grid = symmetric_grid(ext.window(), c.t_grid);
  return {std::move(ext), std::move(grid)};
}

inline void maybe_dump(const RunConfig& c, const ConvexExtension& ext, const std::vector<double>& grid) {
  if (!c.dump_envelope.empty()) io::write_text(c.dump_envelope, io::envelope_csv(envelope(ext, grid)));
}

inline ojson run_validate(const RunConfig& c, const Resolved& r, ojson& config, bool& invalid) {
  const DiscreteMetricSpace space = io::load_space(c.space);
  const auto violations = validate_space(space, r.tol_metric);
  ojson j;
  j["points"] = space.size();
  j["valid"] = violations.empty();
  ojson list = ojson::array();
  for (const auto& v : violations) {
    ojson e;
    e["kind"] = to_string(v.kind);
    e["i"] = space.label(v.i);
    e["j"] = space.label(v.j);
    if (v.kind == MetricViolation::Kind::triangle) {
      e["k"] = space.label(v.k);
      e["excess"] = v.excess;
    }
    e["message"] = v.describe();
    list.push_back(std::move(e));
  }
  j["violations"] = std::move(list);
  if (violations.empty()) j["pitch"] = space.pitch();
  invalid = !violations.empty();
  (void)config;
  return j;
}

inline ojson run_bj_extension(const RunConfig& c, const Resolved& r, ojson& config) {
  const auto [ext, grid] = load_extension(c, r, config);
  const auto& space = *ext.space();
  CriterionOptions copts;
  copts.slope_tol = r.tol_verdict;
  copts.schedule = schedule_for(r);

  const BruteForceReport bf = bj_extension_bruteforce(ext, grid, r.tol_verdict * (1.0 + std::abs(ext.base().sup())));
  const WitnessReport wr = bj_extension_criterion(ext, copts);
  const BsWitnessReport bs = bhatia_semrl_witness(ext, grid, copts);
  maybe_dump(c, ext, grid);

  ojson j;
  j["bj_extension"] = bf.is_bj;
  j["criterion_verdict"] = wr.verdict;
  j["methods_agree"] = bf.is_bj == wr.verdict;
  j["criterion_witnesses"] = ojson::array({detail::label_or_null(space, wr.right_witness ? std::optional(wr.right_witness->index) : std::nullopt),
                                           detail::label_or_null(space, wr.left_witness ? std::optional(wr.left_witness->index) : std::nullopt)});
  j["right_derivative"] = wr.best_right;
  j["left_derivative"] = wr.best_left;
  j["derivatives_converged"] = wr.derivatives_converged;
  j["bs_witness"] = detail::label_or_null(space, bs.witness);
  j["sup_set_size"] = wr.sup_set.indices.size();
  if (space.size() > 1) {
    const double eps = 1.5 * space.pitch();
    config["connectivity_eps"] = eps;
    j["sup_set_connected"] = eps > 0.0 ? ojson(epsilon_connected(space, wr.sup_set.indices, eps)) : ojson(nullptr);
  }
  ojson b;
  b["g0"] = bf.g0;
  b["grid_min"] = bf.grid_min;
  b["t_grid_min"] = bf.t_grid_min;
  b["refined_min"] = bf.refined_min;
  b["t_refined"] = bf.t_refined;
  b["resolution_bound"] = bf.resolution_bound;
  b["tol"] = bf.tol;
  j["bruteforce"] = std::move(b);
  return j;
}

inline ojson run_bs_witness(const RunConfig& c, const Resolved& r, ojson& config) {
  const auto [ext, grid] = load_extension(c, r, config);
  CriterionOptions copts;
  copts.slope_tol = r.tol_verdict;
  copts.schedule = schedule_for(r);
  const BsWitnessReport bs = bhatia_semrl_witness(ext, grid, copts);
  const BruteForceReport bf = bj_extension_bruteforce(ext, grid, r.tol_verdict * (1.0 + std::abs(ext.base().sup())));
  maybe_dump(c, ext, grid);

  ojson j;
  j["bs_witness"] = detail::label_or_null(*ext.space(), bs.witness);
  j["candidates"] = bs.candidates;
  j["checks_agree"] = bs.checks_agree();
  j["disagreements"] = bs.disagreements;
  j["bj_extension"] = bf.is_bj;
  return j;
}

inline ojson run_cx_ortho(const RunConfig& c, const Resolved& r, ojson&) {
  const SpaceRef space = share(io::load_space(c.space));
  const ScalarField f = io::load_field(c.f, space);
  const ScalarField g = io::load_field(c.g, space);
  const double tol = r.tol_verdict * (1.0 + f.sup_norm() * g.sup_norm());
  const OrthogonalityVerdict v = decide(f, g, tol);

  ojson j;
  j["orthogonal"] = v.orthogonal;
  j["pos_witness"] = detail::label_or_null(*space, v.pos_witness);
  j["neg_witness"] = detail::label_or_null(*space, v.neg_witness);
  j["oracle_min"] = v.oracle_min;
  j["oracle_argmin"] = v.oracle_argmin;
  j["methods_agree"] = v.methods_agree;
  j["criterion_verdict"] = v.criterion_verdict;
  j["criterion_agrees"] = v.criterion_agrees;
  j["norm_f"] = v.norm_f;
  j["norm_set_size"] = v.norm_set_size;
  j["tol"] = v.tol;
  return j;
}

inline ojson run_op_ortho(const RunConfig& c, const Resolved& r, ojson& config) {
  const MatrixPair pair = io::matrices_from_json(io::load_json(c.matrices), c.matrices);
  const std::size_t count = c.samples > 0 ? c.samples : 500 * pair.dim();
  config["norm"] = pair.norm.name();
  config["samples"] = count;
  config["seed"] = c.seed;
  const SphereSample sample = sample_sphere(pair.dim(), pair.norm, count, c.seed);
  const bool euclid = pair.norm.kind() == NormTag::Kind::euclidean;

  // operator verdicts use an absolute tolerance scaled by ||A||, floored at 1e-8
  const OperatorOracle oracle = bj_operator_oracle(pair, 1e-10, &sample);
  const double tol = std::max(1e-8, r.tol_verdict) * std::max(1.0, oracle.norm_a);
  config["op_tol"] = tol;
  CriterionOptions copts;
  copts.slope_tol = r.tol_verdict;
  copts.schedule = schedule_for(r);
  const OperatorCriterionReport crit = bj_operator_criterion(pair, sample, copts);

  ojson j;
  j["orthogonal"] = oracle.orthogonal(tol);
  const auto& space = *sample.as_space;
  const auto& w = crit.report;
  j["pos_witness"] = detail::label_or_null(space, w.right_witness ? std::optional(w.right_witness->index) : std::nullopt);
  j["neg_witness"] = detail::label_or_null(space, w.left_witness ? std::optional(w.left_witness->index) : std::nullopt);
  j["oracle_min"] = oracle.min;
  j["oracle_argmin"] = oracle.argmin;
  j["methods_agree"] = w.verdict == oracle.orthogonal(tol);
  j["criterion_verdict"] = w.verdict;
  j["norm_a"] = oracle.norm_a;
  j["sampled_norm_a"] = crit.sampled_norm;
  j["approximate"] = oracle.approximate;
  j["sample_pitch"] = crit.pitch;
  j["sup_set_tol"] = crit.sup_tol;
  j["slope_band"] = crit.slope_band;
  // a disagreement whose deciding derivative lies inside the slope band is
  // below what the sphere sample can resolve
  bool below_resolution = false;
  if (w.verdict != oracle.orthogonal(tol)) {
    const double deciding = oracle.orthogonal(tol) ? std::max(-w.best_right, w.best_left)
                                                   : std::min(w.best_right, -w.best_left);
    below_resolution = deciding <= crit.slope_band;
  }
  j["disagreement_below_resolution"] = below_resolution;
  // heuristic only: connectivity of M_A under antipodal identification
  j["sup_set_size"] = w.sup_set.indices.size();
  j["sup_set_connected"] = crit.pitch > 0.0 ? ojson(epsilon_connected(space, w.sup_set.indices, 1.5 * crit.pitch))
                                            : ojson(nullptr);
  if (euclid) {
    const auto x = bhatia_semrl_euclidean(pair, tol / std::max(1.0, oracle.norm_a));
    j["witness_vector"] = x ? ojson(std::vector<double>(x->data(), x->data() + x->size())) : ojson(nullptr);
  } else {
    j["witness_vector"] = nullptr;
  }
  return j;
}

inline ojson run_density(const RunConfig& c, const Resolved&, ojson& config) {
  const SpaceRef space = share(io::load_space(c.space));
  const ScalarField f = io::load_field(c.f, space);
  std::size_t x0 = 0, y0 = 0;
  if (!c.x0.empty()) {
    x0 = resolve_point(*space, c.x0, "--x0");
  } else {
    const double sup = f.sup();
    while (f[x0] != sup) ++x0;
  }
  if (!c.y0.empty()) {
    y0 = resolve_point(*space, c.y0, "--y0");
  } else {
    if (space->size() < 2) throw InputError("density-perturb needs at least two points");
    y0 = x0 == 0 ? 1 : 0;
    for (std::size_t i = 0; i < space->size(); ++i)
      if (i != x0 && space->distance(x0, i) > space->distance(x0, y0)) y0 = i;
  }
  config["x0"] = space->label(x0);
  config["y0"] = space->label(y0);
  config["eps"] = c.eps;

  const ScalarField fe = density_perturbation(f, x0, y0, c.eps);
  const SupSet top = sup_attaining_set(fe, 0.0);
  double dev = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) dev = std::max(dev, f[i] - fe[i]);

  ojson j;
  j["sup_before"] = f.sup();
  j["sup_after"] = fe.sup();
  ojson labels = ojson::array();
  for (std::size_t i : top.indices) labels.push_back(space->label(i));
  j["argmax"] = std::move(labels);
  j["unique_max"] = top.indices.size() == 1 && top.indices.front() == x0;
  j["max_deviation"] = dev;
  j["values"] = numbers(fe.values());
  return j;
}

inline ojson run_maxseq(const RunConfig& c, const Resolved& r, ojson& config) {
  const auto [ext, grid] = load_extension(c, r, config);
  config["side"] = c.side;
  config["terms"] = c.terms;
  MaxSeqOptions opts;
  opts.schedule = schedule_for(r);
  opts.kink_tol = 10.0 * r.tol_deriv;
  const Side side = c.side == "minus" ? Side::minus : Side::plus;
  const MaximizingSequence seq = extract_maximizing_sequence(ext, side, c.terms, opts);
  const BruteForceReport bf = bj_extension_bruteforce(ext, grid, r.tol_verdict * (1.0 + std::abs(ext.base().sup())));
  maybe_dump(c, ext, grid);

  ojson j;
  j["bj_extension"] = bf.is_bj;
  ojson labels = ojson::array();
  for (std::size_t i : seq.indices) labels.push_back(ext.space()->label(i));
  j["points"] = std::move(labels);
  j["t_values"] = numbers(seq.t_values);
  j["right_derivs"] = numbers(seq.right_derivs);
  j["left_derivs"] = numbers(seq.left_derivs);
  j["limit_estimate"] = seq.limit_estimate;
  j["skipped"] = seq.skipped;
  j["tail_converged"] = seq.tail_converged;
  j["tail_error"] = seq.tail_error;
  j["maximizing"] = seq.maximizing;
  j["sup_gap"] = seq.sup_gap;
  return j;
}

}  // namespace detail

inline int run(const RunConfig& c, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const detail::Resolved r = detail::resolve(c);
    ojson config = detail::config_json(c, r);
    ojson result;
    bool invalid = false;
    if (c.command == "validate-space") result = detail::run_validate(c, r, config, invalid);
    else if (c.command == "bj-extension") result = detail::run_bj_extension(c, r, config);
    else if (c.command == "bs-witness") result = detail::run_bs_witness(c, r, config);
    else if (c.command == "cx-ortho") result = detail::run_cx_ortho(c, r, config);
    else if (c.command == "op-ortho") result = detail::run_op_ortho(c, r, config);
    else if (c.command == "density-perturb") result = detail::run_density(c, r, config);
    else if (c.command == "maximizing-seq") result = detail::run_maxseq(c, r, config);
    else throw InputError("unknown command '" + c.command + "'");

    ojson report;
    report["config"] = std::move(config);
    for (auto& [key, value] : result.items()) report[key] = value;
    const std::string text = report.dump(2) + "\n";
    if (c.output.empty()) out << text;
    else io::write_text(c.output, text);

    if (invalid) {
      for (const auto& v : result["violations"]) err << "metric violation: " << v["message"].get<std::string>() << "\n";
      return 1;
    }
    return 0;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "input error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace bjext::cli
