#include "varsketch/harness.hpp"

#include "varsketch/errors.hpp"
#include "varsketch/parallel.hpp"
#include "varsketch/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <sstream>

namespace varsketch {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

bool is_structured(SketchKind k) {
  return k == SketchKind::khatri_rao || k == SketchKind::kronecker || k == SketchKind::kfjlt;
}

std::uint64_t trial_seed(const ExperimentConfig& c, std::uint64_t t) {
  return derive_seed(c.seed, Role::trial, t);
}

CPTensor unit_cp(const ExperimentConfig& c, std::uint64_t seed) {
  return normalize_cp(random_cp(c.mode_lengths, c.rank, c.factor_distribution, seed));
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

json interval_json(const Interval& i) { return json::array({i.lo, i.hi}); }

}  // namespace

std::string_view to_string(PointFamily f) noexcept {
  switch (f) {
    case PointFamily::random_unit_cp: return "random_unit_cp";
    case PointFamily::cp_differences: return "cp_differences";
    case PointFamily::fixed_target_residuals: return "fixed_target_residuals";
  }
  return "random_unit_cp";
}

PointFamily parse_family(std::string_view name) {
  if (name == "random_unit_cp") return PointFamily::random_unit_cp;
  if (name == "cp_differences") return PointFamily::cp_differences;
  if (name == "fixed_target_residuals") return PointFamily::fixed_target_residuals;
  throw ValidationError("unknown point family '" + std::string(name) + "'");
}

void validate(const ExperimentConfig& c) {
  require(!c.mode_lengths.empty(), "problem needs at least one mode");
  for (std::size_t n : c.mode_lengths) require(n >= 1, "mode lengths must be positive");
  require(c.rank >= 1, "point rank must be at least 1");
  require(c.points >= 1, "point count must be at least 1");
  require(c.eps > 0.0 && c.eps < 1.0, "epsilon must lie in (0, 1)");
  require(c.trials >= 1, "trials must be at least 1");
  const std::uint64_t N = shape_size(c.mode_lengths);
  if (is_structured(c.op.kind)) {
    require(c.op.input_shape == c.mode_lengths, "operator input shape must equal the problem mode lengths");
  } else {
    require(c.op.input_shape.size() == 1 && c.op.input_shape[0] == N,
            "flat operator input size must equal the product of the mode lengths");
  }
}

ExperimentConfig config_from_json(const json& j) {
  try {
    require(j.is_object(), "config must be a JSON object");
    const int version = j.value("schema_version", kSchemaVersion);
    require(version == kSchemaVersion, "unsupported schema_version " + std::to_string(version));
    ExperimentConfig c;
    const json& p = j.at("problem");
    c.mode_lengths = p.at("mode_lengths").get<Shape>();
    c.rank = p.value("rank", c.rank);
    c.points = p.value("points", c.points);
    if (p.contains("family")) c.family = parse_family(p["family"].get<std::string>());
    if (p.contains("factor_distribution"))
      c.factor_distribution = parse_distribution(p["factor_distribution"].get<std::string>());
    c.resample_points = p.value("resample_points", false);

    json op = j.at("operator");
    if (op.value("kind", std::string()) != "kronecker" && !op.contains("input_shape")) {
      const bool structured = op.value("kind", std::string()) == "khatri_rao" || op.value("kind", std::string()) == "kfjlt";
      op["input_shape"] = structured ? json(c.mode_lengths) : json(Shape{shape_size(c.mode_lengths)});
    }
    if (op.value("kind", std::string()) == "identity" && !op.contains("m"))
      op["m"] = shape_size(c.mode_lengths);
    c.op = spec_from_json(op);

    c.k = j.value("committee_k", c.k);
    c.eps = j.value("epsilon", c.eps);
    c.trials = j.value("trials", c.trials);
    c.seed = j.value("seed", c.seed);
    if (j.contains("output")) {
      const json& o = j["output"];
      if (o.contains("report")) c.report_path = o["report"].get<std::string>();
      if (o.contains("csv")) c.csv_path = o["csv"].get<std::string>();
    }
    validate(c);
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("experiment config: ") + e.what());
  }
}

json config_to_json(const ExperimentConfig& c) {
  json j{{"schema_version", kSchemaVersion},
         {"problem",
          {{"mode_lengths", c.mode_lengths},
           {"rank", c.rank},
           {"points", c.points},
           {"family", to_string(c.family)},
           {"factor_distribution", to_string(c.factor_distribution)},
           {"resample_points", c.resample_points}}},
         {"operator", spec_to_json(c.op)},
         {"committee_k", c.k},
         {"epsilon", c.eps},
         {"trials", c.trials},
         {"seed", c.seed}};
  if (c.report_path || c.csv_path) {
    json o = json::object();
    if (c.report_path) o["report"] = *c.report_path;
    if (c.csv_path) o["csv"] = *c.csv_path;
    j["output"] = o;
  }
  return j;
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_to_json(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Committee trial_committee(const ExperimentConfig& c, std::uint64_t trial) {
  return Committee(c.op, c.k, derive_seed(trial_seed(c, trial), Role::committee));
}

std::vector<Point> sample_points(const ExperimentConfig& c, std::uint64_t trial) {
  const std::uint64_t base = c.resample_points ? derive_seed(c.seed, Role::points, trial + 1)
                                               : derive_seed(c.seed, Role::points, 0);
  std::vector<Point> pts;
  pts.reserve(c.points);
  std::optional<CPTensor> target;
  if (c.family == PointFamily::fixed_target_residuals)
    target = unit_cp(c, derive_seed(base, Role::target));
  for (std::size_t i = 0; i < c.points; ++i) {
    switch (c.family) {
      case PointFamily::random_unit_cp:
        pts.emplace_back(unit_cp(c, derive_seed(base, Role::points, i)));
        break;
      case PointFamily::cp_differences:
        pts.emplace_back(cp_difference(unit_cp(c, derive_seed(base, Role::points, 2 * i)),
                                       unit_cp(c, derive_seed(base, Role::points, 2 * i + 1))));
        break;
      case PointFamily::fixed_target_residuals:
        pts.emplace_back(cp_difference(*target, unit_cp(c, derive_seed(base, Role::points, i))));
        break;
    }
  }
  return pts;
}

DistortionReport run_distortion(const ExperimentConfig& c) {
  validate(c);
  DistortionReport r;
  r.trials = c.trials;
  r.max_distortion.assign(c.trials, 0.0);
  r.median_distortion.assign(c.trials, 0.0);
  const std::vector<Point> shared = c.resample_points ? std::vector<Point>{} : sample_points(c);
  parallel_for(c.trials, [&](std::size_t t) {
    const std::vector<Point> pts = c.resample_points ? sample_points(c, t) : shared;
    const Committee committee = trial_committee(c, t);
    const auto d = distortion(committee, pts);
    r.max_distortion[t] = *std::max_element(d.begin(), d.end());
    r.median_distortion[t] = quantile(d, 0.5);
  });
  r.failed.reserve(c.trials);
  for (double m : r.max_distortion) r.failed.push_back(m > c.eps);
  r.failures = static_cast<std::uint64_t>(std::count(r.failed.begin(), r.failed.end(), true));
  r.failure_rate = static_cast<double>(r.failures) / static_cast<double>(r.trials);
  r.failure_ci = wilson_interval(r.failures, r.trials, 0.95);
  r.q50 = quantile(r.max_distortion, 0.5);
  r.q90 = quantile(r.max_distortion, 0.9);
  r.q99 = quantile(r.max_distortion, 0.99);
  r.q_max = *std::max_element(r.max_distortion.begin(), r.max_distortion.end());

  const Committee committee = trial_committee(c, 0);
  if (committee.member(0).has_factored_path() && shape_size(c.mode_lengths) <= kDefaultMaterializationCap) {
    const std::vector<Point> pts = c.resample_points ? sample_points(c, 0) : shared;
    auto start = std::chrono::steady_clock::now();
    for (const auto& op : committee.members())
      for (const auto& p : pts) (void)apply(op, p);
    r.factored_seconds = seconds_since(start);
    start = std::chrono::steady_clock::now();
    for (const auto& op : committee.members())
      for (const auto& p : pts) (void)op.apply(materialize(std::get<CPTensor>(p)));
    r.dense_seconds = seconds_since(start);
  }
  return r;
}

CompareReport run_committee_compare(const ExperimentConfig& c) {
  validate(c);
  CompareReport r;
  r.trials = c.trials;
  r.m0 = c.op.m;
  r.committee_size = 2 * c.k + 1;
  require(c.op.kind != SketchKind::kronecker && c.op.kind != SketchKind::identity,
          "compare needs a kind whose output dimension is a free parameter");
  OperatorSpec single_spec = c.op;
  single_spec.m = c.op.m * r.committee_size;

  std::vector<unsigned char> single(c.trials, 0), comm(c.trials, 0);
  const std::vector<Point> shared = c.resample_points ? std::vector<Point>{} : sample_points(c);
  parallel_for(c.trials, [&](std::size_t t) {
    const std::vector<Point> pts = c.resample_points ? sample_points(c, t) : shared;
    const std::uint64_t master = derive_seed(trial_seed(c, t), Role::committee);
    const Committee committee(c.op, c.k, master);
    const std::uint64_t single_seed =
        c.k == 0 ? member_seed(master, 0) : derive_seed(trial_seed(c, t), Role::single);
    const Committee lone({make_operator(reseeded(single_spec, single_seed))});
    const auto dc = distortion(committee, pts);
    const auto ds = distortion(lone, pts);
    comm[t] = *std::max_element(dc.begin(), dc.end()) > c.eps;
    single[t] = *std::max_element(ds.begin(), ds.end()) > c.eps;
  });
  r.single_failed.assign(single.begin(), single.end());
  r.committee_failed.assign(comm.begin(), comm.end());
  for (std::size_t t = 0; t < c.trials; ++t) {
    r.single_failures += single[t];
    r.committee_failures += comm[t];
  }
  r.single_ci = wilson_interval(r.single_failures, c.trials, 0.95);
  r.committee_ci = wilson_interval(r.committee_failures, c.trials, 0.95);
  r.mcnemar = mcnemar_one_sided(r.single_failed, r.committee_failed);
  return r;
}

PairwiseReport run_pairwise(const ExperimentConfig& c) {
  validate(c);
  require(c.points >= 2, "pairwise needs at least two points");
  const std::vector<Point> pts = sample_points(c);
  const Committee committee = trial_committee(c, 0);
  PairwiseReport r;
  r.estimated = median_jlt_pairwise(committee, pts);
  const auto P = static_cast<Eigen::Index>(pts.size());
  Matrix exact = Matrix::Zero(P, P);
  double worst = 0.0;
  bool any = false;
  for (Eigen::Index i = 0; i < P; ++i) {
    for (Eigen::Index j = i + 1; j < P; ++j) {
      const double d = std::sqrt(std::max(0.0, norm_sq(difference(pts[i], pts[j]))));
      exact(i, j) = exact(j, i) = d;
      if (d > 0.0) {
        worst = std::max(worst, std::abs(r.estimated(i, j) / d - 1.0));
        any = true;
      }
    }
  }
  r.exact = exact;
  if (any) r.max_relative_error = worst;
  return r;
}

std::string distance_csv(const Matrix& d) {
  std::ostringstream out;
  out.precision(17);
  out << "id";
  for (Eigen::Index j = 0; j < d.cols(); ++j) out << ",p" << j;
  out << "\n";
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    out << "p" << i;
    for (Eigen::Index j = 0; j < d.cols(); ++j) out << "," << d(i, j);
    out << "\n";
  }
  return out.str();
}

json provenance(const ExperimentConfig& c) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(c)));
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return {{"config_hash", hash}, {"seed", c.seed}, {"version", kVersion}, {"timestamp", stamp},
          {"threads", thread_count()}};
}

json report_to_json(const ExperimentConfig& c, const DistortionReport& r) {
  json prov = provenance(c);
  if (r.factored_seconds) prov["timing"] = {{"factored_seconds", *r.factored_seconds}, {"dense_seconds", *r.dense_seconds}};
  return {{"schema_version", kSchemaVersion},
          {"experiment", "distortion"},
          {"measure", "sampled distortion"},
          {"config", config_to_json(c)},
          {"trials", r.trials},
          {"failures", r.failures},
          {"failure_rate", r.failure_rate},
          {"failure_ci95", interval_json(r.failure_ci)},
          {"max_distortion_quantiles", {{"q50", r.q50}, {"q90", r.q90}, {"q99", r.q99}, {"max", r.q_max}}},
          {"per_trial_max_distortion", r.max_distortion},
          {"per_trial_median_distortion", r.median_distortion},
          {"provenance", prov}};
}

json report_to_json(const ExperimentConfig& c, const CompareReport& r) {
  return {{"schema_version", kSchemaVersion},
          {"experiment", "committee_compare"},
          {"measure", "sampled distortion"},
          {"config", config_to_json(c)},
          {"trials", r.trials},
          {"m0", r.m0},
          {"committee_size", r.committee_size},
          {"total_measurements", r.m0 * r.committee_size},
          {"single", {{"m", r.m0 * r.committee_size}, {"failures", r.single_failures},
                      {"failure_rate", static_cast<double>(r.single_failures) / static_cast<double>(r.trials)},
                      {"ci95", interval_json(r.single_ci)}}},
          {"committee", {{"m", r.m0}, {"failures", r.committee_failures},
                         {"failure_rate", static_cast<double>(r.committee_failures) / static_cast<double>(r.trials)},
                         {"ci95", interval_json(r.committee_ci)}}},
          {"mcnemar", {{"single_only", r.mcnemar.only_a}, {"committee_only", r.mcnemar.only_b},
                       {"p_value_one_sided", r.mcnemar.p_value}}},
          {"provenance", provenance(c)}};
}

json report_to_json(const ExperimentConfig& c, const PairwiseReport& r) {
  json j{{"schema_version", kSchemaVersion},
         {"experiment", "pairwise"},
         {"config", config_to_json(c)},
         {"points", r.estimated.rows()},
         {"provenance", provenance(c)}};
  j["max_relative_error"] = r.max_relative_error ? json(*r.max_relative_error) : json(nullptr);
  return j;
}

std::string report_to_csv(const DistortionReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "trial,max_distortion,median_distortion,failed\n";
  for (std::size_t t = 0; t < r.max_distortion.size(); ++t)
    out << t << "," << r.max_distortion[t] << "," << r.median_distortion[t] << ","
        << r.failed[t] << "\n";
  return out.str();
}

std::string report_to_csv(const CompareReport& r) {
  std::ostringstream out;
  out << "trial,single_failed,committee_failed\n";
  for (std::size_t t = 0; t < r.single_failed.size(); ++t)
    out << t << "," << r.single_failed[t] << "," << r.committee_failed[t] << "\n";
  return out.str();
}

}  // namespace varsketch
