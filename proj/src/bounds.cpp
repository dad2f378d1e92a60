#include "varsketch/bounds.hpp"

#include "varsketch/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace varsketch {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

void require_unit_open(double v, const char* name) {
  require(v > 0.0 && v < 1.0, std::string(name) + " must lie in (0, 1)");
}

// Ceiling of a real-valued bound, tolerant of the last-ulp noise from
// transcendental evaluation (e.g. log(e^-4) landing just above 4).
double ceil_bound(double x) { return std::ceil(x - 1e-12 * std::max(1.0, std::abs(x))); }

std::uint64_t to_count(double x, std::uint64_t floor_value) {
  require(std::isfinite(x), "bound evaluated to a non-finite value");
  const double c = std::max(ceil_bound(x), static_cast<double>(floor_value));
  require(c < 0x1p63, "bound exceeds the representable range");
  return static_cast<std::uint64_t>(c);
}

// n·log(c·n) with the n = 0 limit taken as 0.
double n_log_cn(double n, double c) { return n > 0.0 ? n * std::log(c * n) : 0.0; }

double component_log_card(double log_degree, double n, const ConstantSet& k) {
  return k.c1 * log_degree + k.c1 * n_log_cn(n, k.c2);
}

}  // namespace

void ConstantSet::validate() const {
  for (double v : {c1, c2, c3, c4, c1d, c2d, tensor_c, K})
    require(v > 0.0 && std::isfinite(v), "constants must be strictly positive");
  if (M) require(*M > 0.0, "M must be strictly positive");
}

json constants_to_json(const ConstantSet& c) {
  json j{{"C1", c.c1}, {"C2", c.c2}, {"C3", c.c3}, {"C4", c.c4}, {"C1d", c.c1d},
         {"C2d", c.c2d}, {"Cd", c.tensor_c}, {"K", c.K}};
  j["M"] = c.M ? json(*c.M) : json("N");
  return j;
}

ConstantSet constants_from_json(const json& j, ConstantSet base) {
  auto get = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = j[key].get<double>();
  };
  get("C1", base.c1);
  get("C2", base.c2);
  get("C3", base.c3);
  get("C4", base.c4);
  get("C1d", base.c1d);
  get("C2d", base.c2d);
  get("Cd", base.tensor_c);
  get("K", base.K);
  if (j.contains("M") && j["M"].is_number()) base.M = j["M"].get<double>();
  base.validate();
  return base;
}

VarietyParams VarietyParams::variety(double n, double degree) {
  require(degree >= 1.0, "degree D must be at least 1");
  return variety_log(n, std::log(degree));
}

VarietyParams VarietyParams::variety_log(double n, double log_degree) {
  VarietyParams vp;
  vp.mode = Mode::variety;
  vp.n = n;
  vp.log_degree = log_degree;
  vp.validate();
  return vp;
}

VarietyParams VarietyParams::polymap(double n, double d_poly) {
  VarietyParams vp;
  vp.mode = Mode::polymap;
  vp.n = n;
  vp.d_poly = d_poly;
  vp.validate();
  return vp;
}

VarietyParams VarietyParams::reducible(std::vector<VarietyComponent> components) {
  VarietyParams vp;
  vp.mode = Mode::reducible;
  vp.components = std::move(components);
  for (const auto& c : vp.components) vp.n = std::max(vp.n, c.dim);
  vp.validate();
  return vp;
}

VarietyParams VarietyParams::cp_tensor(double n, double d, double r) {
  return polymap(n * d * r, d);
}

void VarietyParams::validate() const {
  require(n >= 0.0, "dimension n must be nonnegative");
  switch (mode) {
    case Mode::variety:
      require(log_degree >= 0.0, "degree D must be at least 1");
      break;
    case Mode::polymap:
      require(d_poly >= 1.0, "polynomial degree must be at least 1");
      break;
    case Mode::reducible:
      require(!components.empty(), "reducible variety needs at least one component");
      for (const auto& c : components) {
        require(c.log_degree >= 0.0, "component degree must be at least 1");
        require(c.dim >= 0.0, "component dimension must be nonnegative");
      }
      break;
  }
}

json variety_to_json(const VarietyParams& vp) {
  switch (vp.mode) {
    case VarietyParams::Mode::variety:
      return {{"mode", "variety"}, {"n", vp.n}, {"log_D", vp.log_degree}};
    case VarietyParams::Mode::polymap:
      return {{"mode", "polymap"}, {"n", vp.n}, {"d", vp.d_poly}};
    case VarietyParams::Mode::reducible: {
      json comps = json::array();
      for (const auto& c : vp.components) comps.push_back({{"log_D", c.log_degree}, {"n", c.dim}});
      return {{"mode", "reducible"}, {"components", comps}};
    }
  }
  return {};
}

VarietyParams variety_from_json(const json& j) {
  try {
    const auto mode = j.value("mode", std::string("variety"));
    auto log_deg = [](const json& o) {
      if (o.contains("log_D")) return o["log_D"].get<double>();
      const double D = o.value("D", 1.0);
      require(D >= 1.0, "degree D must be at least 1");
      return std::log(D);
    };
    if (mode == "variety") return VarietyParams::variety_log(j.at("n").get<double>(), log_deg(j));
    if (mode == "polymap") return VarietyParams::polymap(j.at("n").get<double>(), j.at("d").get<double>());
    if (mode == "cp") {
      return VarietyParams::cp_tensor(j.at("n").get<double>(), j.at("d").get<double>(),
                                      j.at("r").get<double>());
    }
    if (mode == "reducible") {
      std::vector<VarietyComponent> comps;
      for (const auto& c : j.at("components")) comps.push_back({log_deg(c), c.at("n").get<double>()});
      return VarietyParams::reducible(std::move(comps));
    }
    throw ValidationError("unknown variety mode '" + mode + "'");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("variety params: ") + e.what());
  }
}

double norming_log_card(double log_degree, double n, double d, double omega, const ConstantSet& k) {
  k.validate();
  require(omega > 1.0, "norming factor omega must exceed 1");
  require(log_degree >= 0.0, "degree D must be at least 1");
  require(n >= 0.0, "dimension n must be nonnegative");
  require(d >= 1.0, "polynomial degree d must be at least 1");
  if (n == 0.0) return k.c1 * log_degree;
  return k.c1 * log_degree + k.c1 * n * (std::log(k.c2 * n * d) - std::log(std::log(omega)));
}

double required_phi(const VarietyParams& vp, double delta, const ConstantSet& k) {
  k.validate();
  vp.validate();
  require_unit_open(delta, "delta");
  const double tail = -std::log(delta);
  switch (vp.mode) {
    case VarietyParams::Mode::variety:
      return component_log_card(vp.log_degree, vp.n, k) + tail;
    case VarietyParams::Mode::polymap:
      // Bézout: log D ≤ n log d, then the variety expression verbatim
      return component_log_card(vp.n * std::log(vp.d_poly), vp.n, k) + tail;
    case VarietyParams::Mode::reducible: {
      std::vector<double> terms;
      for (const auto& c : vp.components) terms.push_back(component_log_card(c.log_degree, c.dim, k));
      const double hi = *std::max_element(terms.begin(), terms.end());
      double s = 0.0;
      for (double t : terms) s += std::exp(t - hi);
      return hi + std::log(s) + tail;
    }
  }
  return tail;
}

PhiFunction::PhiFunction(Model model) : model_(std::move(model)) {
  if (const auto* t = std::get_if<Table>(&model_)) {
    require(!t->points.empty(), "phi table must be nonempty");
    for (std::size_t i = 1; i < t->points.size(); ++i) {
      require(t->points[i].first > t->points[i - 1].first, "phi table m values must increase");
      require(t->points[i].second >= t->points[i - 1].second, "phi table values must be nondecreasing");
    }
  }
}

double PhiFunction::operator()(double m, double eps) const {
  struct Eval {
    double m, eps;
    double operator()(const SubGaussian& s) const { return s.c * m * eps * eps / (s.K * s.K); }
    double operator()(const TensorOrder& t) const {
      return std::min(std::pow(m * eps / t.c1d, 1.0 / t.d), m * eps * eps / t.c2d);
    }
    double operator()(const Table& t) const {
      double v = 0.0;
      for (const auto& [mi, phi] : t.points) {
        if (mi > m) break;
        v = phi;
      }
      return v;
    }
    double operator()(const PowerLaw& p) const {
      const double lg = m > 0.0 ? p.log_weight * std::log(m) : 0.0;
      return std::max(0.0, p.intercept + lg + p.scale * std::pow(m, p.exponent));
    }
  };
  return std::max(0.0, std::visit(Eval{m, eps}, model_));
}

std::uint64_t required_dim(const PhiFunction& phi, double eps, double delta, const VarietyParams& vp,
                           const ConstantSet& consts) {
  require_unit_open(eps, "epsilon");
  const double target = required_phi(vp, delta, consts);
  const double e = eps / std::sqrt(2.0);
  std::uint64_t hi = 1;
  while (phi(static_cast<double>(hi), e) < target) {
    require(hi < (std::uint64_t{1} << 53), "tail function never reaches the required value");
    hi *= 2;
  }
  std::uint64_t lo = hi / 2;  // phi(lo) < target unless hi == 1
  if (hi == 1) return 1;
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (phi(static_cast<double>(mid), e) >= target)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

std::uint64_t subgaussian_dim(double eps, double delta, const VarietyParams& vp, double K,
                              const ConstantSet& consts) {
  require_unit_open(eps, "epsilon");
  require(K > 0.0, "K must be positive");
  const double t = required_phi(vp, delta, consts);
  return to_count(2.0 * K * K * t / (consts.c3 * eps * eps), 1);
}

std::uint64_t tensor_sufficient_dim(double eps, double delta, double d, const ConstantSet& k) {
  k.validate();
  require_unit_open(eps, "epsilon");
  require_unit_open(delta, "delta");
  require(d >= 1.0, "tensor order must be at least 1");
  const double L = -std::log(delta);
  const double a = k.c1d / eps * std::pow(L, d);
  const double b = k.c2d / (eps * eps) * L;
  return to_count(std::max(a, b), 1);
}

double tensor_phi(double m, double /*eps*/, double d, const ConstantSet& k) {
  require(d >= 1.0, "tensor order must be at least 1");
  require(m >= 0.0, "m must be nonnegative");
  return k.tensor_c * std::pow(m, 1.0 / d);
}

std::uint64_t fjlt_dim(double eps, double delta, const VarietyParams& vp, double N, const ConstantSet& k) {
  require_unit_open(eps, "epsilon");
  require(N >= 2.0, "ambient dimension N must be at least 2");
  const double big_delta = required_phi(vp, delta, k);
  const double lg = std::log(big_delta / eps);
  const double m = k.c3 / (eps * eps) * big_delta * (lg * lg * std::log(N) - std::log(delta));
  return to_count(m, 1);
}

CommitteeBound median_committee_k(double n_v, double M, double eps, double delta, const ConstantSet& k) {
  k.validate();
  require_unit_open(eps, "epsilon");
  require_unit_open(delta, "delta");
  require(n_v >= 0.0, "n_v must be nonnegative");
  require(M > 0.0, "M must be positive");
  CommitteeBound out;
  const double raw = k.c4 * (n_v * std::log(M / eps) - std::log(delta));
  out.k = to_count(raw, 0);
  out.committee_size = 2 * out.k + 1;
  if (M < n_v)
    out.warning = "M < n_v: the simplified committee bound assumes M >= n_v";
  return out;
}

std::uint64_t total_measurements(std::uint64_t m, std::uint64_t k) { return m * (2 * k + 1); }

std::uint64_t median_member_dim(double eps, double K, const ConstantSet& k) {
  k.validate();
  require_unit_open(eps, "epsilon");
  const double theta = 1.0 + std::log(4.0);
  const double half = eps / 2.0;
  return to_count(theta * K * K / (k.c3 * half * half), 1);
}

json budget_problem_to_json(const BudgetProblem& p) {
  json j{{"variety", variety_to_json(p.vp)}, {"epsilon", p.eps}, {"delta", p.delta}, {"N", p.N}};
  if (p.tensor_order) j["tensor_order"] = *p.tensor_order;
  return j;
}

BudgetProblem budget_problem_from_json(const json& j) {
  try {
    BudgetProblem p;
    p.vp = variety_from_json(j.at("variety"));
    p.eps = j.at("epsilon").get<double>();
    p.delta = j.at("delta").get<double>();
    p.N = j.at("N").get<double>();
    if (j.contains("tensor_order")) p.tensor_order = j["tensor_order"].get<double>();
    require_unit_open(p.eps, "epsilon");
    require_unit_open(p.delta, "delta");
    require(p.N >= 2.0, "ambient dimension N must be at least 2");
    return p;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("budget problem: ") + e.what());
  }
}

BudgetReport budget_report(const BudgetProblem& p, const ConstantSet& consts) {
  BudgetReport r;
  r.problem = p;
  r.constants = consts;
  r.threshold = required_phi(p.vp, p.delta, consts);
  r.subgaussian_m = subgaussian_dim(p.eps, p.delta, p.vp, consts.K, consts);
  r.fjlt_m = fjlt_dim(p.eps, p.delta, p.vp, p.N, consts);
  if (p.tensor_order) r.tensor_m = tensor_sufficient_dim(p.eps, p.delta, *p.tensor_order, consts);
  r.M = consts.M.value_or(p.N);
  r.committee = median_committee_k(p.vp.n, r.M, p.eps, p.delta, consts);
  r.median_member_m = median_member_dim(p.eps, consts.K, consts);
  r.median_total = total_measurements(r.median_member_m, r.committee.k);
  return r;
}

json report_to_json(const BudgetReport& r) {
  json j{{"problem", budget_problem_to_json(r.problem)},
         {"constants", constants_to_json(r.constants)},
         {"required_phi", r.threshold},
         {"subgaussian_m", r.subgaussian_m},
         {"fjlt_m", r.fjlt_m},
         {"M", r.M},
         {"median_k", r.committee.k},
         {"committee_size", r.committee.committee_size},
         {"median_member_m", r.median_member_m},
         {"median_total_measurements", r.median_total}};
  j["tensor_m"] = r.tensor_m ? json(*r.tensor_m) : json(nullptr);
  j["warnings"] = json::array();
  if (r.committee.warning) j["warnings"].push_back(*r.committee.warning);
  return j;
}

std::string report_to_csv(const BudgetReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "quantity,value\n";
  out << "required_phi," << r.threshold << "\n";
  out << "subgaussian_m," << r.subgaussian_m << "\n";
  out << "fjlt_m," << r.fjlt_m << "\n";
  if (r.tensor_m) out << "tensor_m," << *r.tensor_m << "\n";
  out << "M," << r.M << "\n";
  out << "median_k," << r.committee.k << "\n";
  out << "committee_size," << r.committee.committee_size << "\n";
  out << "median_member_m," << r.median_member_m << "\n";
  out << "median_total_measurements," << r.median_total << "\n";
  return out.str();
}

}  // namespace varsketch
