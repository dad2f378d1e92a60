#include "cli.hpp"

#include "varsketch/bounds.hpp"
#include "varsketch/calibrate.hpp"
#include "varsketch/errors.hpp"
#include "varsketch/harness.hpp"
#include "varsketch/io.hpp"
#include "varsketch/polyapprox.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace varsketch::cli {

namespace {

using nlohmann::json;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  std::string format = "json";
};

// Writes either to --out or to the given stream.
void emit(const Globals& g, std::ostream& out, const std::string& text) {
  if (g.out.empty()) {
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    return;
  }
  std::ofstream f(g.out);
  if (!f) throw ValidationError("cannot write output file: " + g.out);
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
}

void emit_json(const Globals& g, std::ostream& out, const json& j) { emit(g, out, j.dump(2)); }

json require_config(const Globals& g) {
  if (g.config.empty()) throw ValidationError("this subcommand needs --config <path>");
  return read_json_file(g.config);
}

ExperimentConfig experiment(const Globals& g) {
  ExperimentConfig c = config_from_json(require_config(g));
  if (g.seed) c.seed = *g.seed;
  return c;
}

// Output path from --out, otherwise the config's own output entry.
Globals with_config_output(Globals g, const std::optional<std::string>& report,
                           const std::optional<std::string>& csv) {
  if (g.out.empty()) {
    if (g.format == "csv" && csv) g.out = *csv;
    if (g.format == "json" && report) g.out = *report;
  }
  return g;
}

Point point_from_json(const json& j) {
  if (j.is_object()) return cp_from_json(j);
  return vector_from_json(j);
}

std::string vector_csv(const DenseVector& v) {
  std::ostringstream s;
  s.precision(17);
  s << "index,value\n";
  for (std::size_t i = 0; i < v.size(); ++i) s << i << "," << v[i] << "\n";
  return s.str();
}

void cmd_sketch(const Globals& g, std::ostream& out) {
  const json cfg = require_config(g);
  try {
    OperatorSpec spec = spec_from_json(cfg.at("operator"));
    if (g.seed) spec = reseeded(spec, *g.seed);
    const Point x = point_from_json(cfg.at("input"));
    const std::size_t k = cfg.value("committee_k", std::size_t{0});
    const Committee c(spec, k, spec.seed);
    const MedianSelection sel = median_sketch_select(c, x);
    if (g.format == "csv") {
      emit(g, out, vector_csv(sel.value));
    } else {
      emit_json(g, out, {{"operator", spec_to_json(spec)},
                         {"committee_size", c.size()},
                         {"selected_member", sel.index},
                         {"sketch", vector_to_json(sel.value)}});
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("sketch config: ") + e.what());
  }
}

void cmd_distort(const Globals& g0, std::ostream& out) {
  const ExperimentConfig c = experiment(g0);
  const Globals g = with_config_output(g0, c.report_path, c.csv_path);
  const DistortionReport r = run_distortion(c);
  if (g.format == "csv")
    emit(g, out, report_to_csv(r));
  else
    emit_json(g, out, report_to_json(c, r));
}

void cmd_compare(const Globals& g0, std::ostream& out) {
  const ExperimentConfig c = experiment(g0);
  const Globals g = with_config_output(g0, c.report_path, c.csv_path);
  const CompareReport r = run_committee_compare(c);
  if (g.format == "csv")
    emit(g, out, report_to_csv(r));
  else
    emit_json(g, out, report_to_json(c, r));
}

void cmd_pairwise(const Globals& g0, std::ostream& out, const std::string& profiles_out) {
  const ExperimentConfig c = experiment(g0);
  const Globals g = with_config_output(g0, c.report_path, c.csv_path);
  const PairwiseReport r = run_pairwise(c);
  if (!profiles_out.empty()) {
    const auto pts = sample_points(c);
    compute_profiles(trial_committee(c, 0), pts)
        .save(profiles_out);
  }
  if (g.format == "csv")
    emit(g, out, distance_csv(r.estimated));
  else
    emit_json(g, out, report_to_json(c, r));
}

void cmd_bounds(const Globals& g, std::ostream& out, const std::map<std::string, double>& overrides) {
  const json cfg = require_config(g);
  const BudgetProblem p = budget_problem_from_json(cfg.contains("problem") ? cfg["problem"] : cfg);
  json cj = cfg.value("constants", json::object());
  for (const auto& [key, value] : overrides) cj[key] = value;
  const ConstantSet k = constants_from_json(cj);
  const BudgetReport r = budget_report(p, k);
  if (g.format == "csv")
    emit(g, out, report_to_csv(r));
  else
    emit_json(g, out, report_to_json(r));
}

void cmd_mom(const Globals& g, std::ostream& out, double p, std::uint64_t k, std::uint64_t trials) {
  const MomResult r = mom_monte_carlo(p, k, trials, g.seed.value_or(0));
  if (g.format == "csv") {
    std::ostringstream s;
    s.precision(17);
    s << "p,k,trials,failures,rate,ci99_lo,ci99_hi,bound,exact\n"
      << p << "," << k << "," << r.trials << "," << r.failures << "," << r.rate << "," << r.ci.lo << ","
      << r.ci.hi << "," << r.bound << "," << r.exact << "\n";
    emit(g, out, s.str());
    return;
  }
  const double half = (r.ci.hi - r.ci.lo) / 2.0;
  emit_json(g, out, {{"p", p}, {"k", k}, {"trials", r.trials}, {"failures", r.failures},
                     {"rate", r.rate}, {"ci99", {r.ci.lo, r.ci.hi}}, {"bound", r.bound},
                     {"exact", r.exact}, {"within_bound", r.rate <= r.bound + half}});
}

json grid_json(const CountingPoly& c) {
  return {{"degree", c.p.degree()},
          {"degree_bound", c.degree_bound},
          {"range_violation", c.check.range_violation},
          {"low_violation", c.check.low_violation},
          {"high_violation", c.check.high_violation},
          {"pass", c.check.pass}};
}

void cmd_polycert(const Globals& g, std::ostream& out, double eps, double M, double eta, std::size_t grid) {
  json j{{"epsilon", eps}, {"M", M}, {"eta", eta}, {"grid", grid},
         {"degree_constant", kCountingConstant}};
  bool pass = true;
  auto one = [&](const char* name, auto build) {
    try {
      j[name] = grid_json(build(eps, M, eta, grid));
    } catch (const CertificationError& e) {
      j[name] = {{"pass", false}, {"witness", e.point()}, {"error", e.what()}};
      pass = false;
    }
  };
  one("upper", counting_poly_upper);
  one("lower", counting_poly_lower);
  j["pass"] = pass;
  if (g.format == "csv") {
    std::ostringstream s;
    s << "polynomial,degree,degree_bound,pass\n";
    for (const char* name : {"upper", "lower"})
      s << name << "," << j[name].value("degree", 0) << "," << j[name].value("degree_bound", 0) << ","
        << j[name]["pass"].get<bool>() << "\n";
    emit(g, out, s.str());
  } else {
    emit_json(g, out, j);
  }
  if (!pass) throw std::runtime_error("counting polynomial failed grid verification");
}

void cmd_calibrate(const Globals& g, std::ostream& out, std::optional<double> eps,
                   std::optional<std::uint64_t> trials, std::vector<std::size_t> grid) {
  const json cfg = require_config(g);
  try {
    const OperatorSpec spec = spec_from_json(cfg.at("operator"));
    const double e = eps.value_or(cfg.value("epsilon", 0.3));
    const std::uint64_t t = trials.value_or(cfg.value("trials", std::uint64_t{2000}));
    if (grid.empty()) grid = cfg.at("m_grid").get<std::vector<std::size_t>>();
    const std::uint64_t seed = g.seed.value_or(cfg.value("seed", std::uint64_t{0}));
    const CalibrationResult r = calibrate_phi(spec, e, grid, t, seed);
    if (g.format == "csv") {
      std::ostringstream s;
      s.precision(17);
      s << "m,failures,trials,rate\n";
      for (const auto& p : r.points) s << p.m << "," << p.failures << "," << p.trials << "," << p.rate << "\n";
      emit(g, out, s.str());
    } else {
      emit_json(g, out, calibration_to_json(r));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("calibration config: ") + e.what());
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Randomized sketching of low-rank tensor sets", "varsketch"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--config", g.config, "JSON input for the subcommand");
  app.add_option("--out", g.out, "Write the result here instead of stdout");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));

  auto* sketch = app.add_subcommand("sketch", "Sketch one point with an operator or committee");
  auto* distort = app.add_subcommand("distort", "Sampled distortion experiment");
  auto* compare = app.add_subcommand("compare", "Single sketch vs median committee at equal measurements");
  auto* pairwise = app.add_subcommand("pairwise", "Median-sketch pairwise distances");
  std::string profiles_out;
  pairwise->add_option("--profiles-out", profiles_out, "Dump sketch profiles (binary vectors)");

  auto* bounds = app.add_subcommand("bounds", "Sketching-dimension budget report");
  std::map<std::string, double> overrides;
  std::map<std::string, std::optional<double>> flags;
  for (const char* name : {"C1", "C2", "C3", "C4", "C1d", "C2d", "Cd", "K", "M"})
    bounds->add_option(std::string("--") + name, flags[name], std::string("Override constant ") + name);

  auto* mom = app.add_subcommand("mom", "Median-of-means tail experiment");
  double p = 0.2;
  std::uint64_t k = 5, trials = 100000;
  mom->add_option("--p", p, "Per-draw tail mass")->required();
  mom->add_option("--k", k, "Committee half-size")->required();
  mom->add_option("--trials", trials, "Monte Carlo trials");

  auto* polycert = app.add_subcommand("polycert", "Counting-polynomial grid certificate");
  double eps = 0.5, M = 3.0, eta = 0.25;
  std::size_t grid = kDefaultGrid;
  polycert->add_option("--eps", eps, "Transition width");
  polycert->add_option("--M", M, "Interval end");
  polycert->add_option("--eta", eta, "Approximation slack");
  polycert->add_option("--grid", grid, "Grid resolution");

  auto* calibrate = app.add_subcommand("calibrate", "Fit the tail function by Monte Carlo");
  std::optional<double> cal_eps;
  std::optional<std::uint64_t> cal_trials;
  std::vector<std::size_t> cal_grid;
  calibrate->add_option("--eps", cal_eps, "Distortion level");
  calibrate->add_option("--trials", cal_trials, "Trials per grid point");
  calibrate->add_option("--m-grid", cal_grid, "Output dimensions to sample");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*sketch) cmd_sketch(g, out);
    if (*distort) cmd_distort(g, out);
    if (*compare) cmd_compare(g, out);
    if (*pairwise) cmd_pairwise(g, out, profiles_out);
    if (*bounds) {
      for (const auto& [name, v] : flags)
        if (v) overrides[name] = *v;
      cmd_bounds(g, out, overrides);
    }
    if (*mom) cmd_mom(g, out, p, k, trials);
    if (*polycert) cmd_polycert(g, out, eps, M, eta, grid);
    if (*calibrate) cmd_calibrate(g, out, cal_eps, cal_trials, cal_grid);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace varsketch::cli
