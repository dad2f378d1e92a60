#pragma once

// Closed-form sketching-dimension calculators.
//
// None of the universal constants behind these bounds has a known value.
// Every one is threaded explicitly through ConstantSet and defaults to 1;
// calibrate_phi (calibrate.hpp) estimates the tail constants empirically.
//
// Constant roles:
//   c1, c2   norming-set cardinality constants (log D, n log(c2 n) terms)
//   c3       ensemble prefactor: sub-Gaussian φ = c3·m·ε²/K², FJLT m prefactor
//   c4       median committee size, k ≥ c4·(n_v log(M/ε) + log(1/δ))
//   c1d,c2d  order-d tensor moment constants (m = max{c1d ε⁻¹ Lᵈ, c2d ε⁻² L})
//   tensor_c scale of the order-d tail φ = tensor_c·m^{1/d}
//   K        sub-Gaussian ψ₂ bound of the entries
//   M        bound on ‖Sx‖² over unit x; unset means "use N"
//
// Degrees are accepted as log D so that Bézout-sized degrees like d^n never
// overflow.

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace varsketch {

struct ConstantSet {
  double c1 = 1.0;
  double c2 = 1.0;
  double c3 = 1.0;
  double c4 = 1.0;
  double c1d = 1.0;
  double c2d = 1.0;
  double tensor_c = 1.0;
  double K = 1.0;
  std::optional<double> M;

  /// Throws ValidationError unless every constant is strictly positive.
  void validate() const;
};

nlohmann::json constants_to_json(const ConstantSet& c);
ConstantSet constants_from_json(const nlohmann::json& j, ConstantSet base = {});

struct VarietyComponent {
  double log_degree = 0.0;
  double dim = 0.0;
};

/// (dimension, degree) description of the set being sketched.
struct VarietyParams {
  enum class Mode { variety, polymap, reducible };

  Mode mode = Mode::variety;
  double n = 0.0;           ///< intrinsic dimension n (n_v)
  double log_degree = 0.0;  ///< log D (variety mode)
  double d_poly = 1.0;      ///< max coordinate degree (polymap mode)
  std::vector<VarietyComponent> components;  ///< reducible mode

  static VarietyParams variety(double n, double degree);
  static VarietyParams variety_log(double n, double log_degree);
  static VarietyParams polymap(double n, double d_poly);
  static VarietyParams reducible(std::vector<VarietyComponent> components);
  /// CP tensors of order d, mode length n, rank ≤ r: a polynomial image of
  /// n·d·r parameters with coordinate degree d.
  static VarietyParams cp_tensor(double n, double d, double r);

  void validate() const;
};

nlohmann::json variety_to_json(const VarietyParams& vp);
VarietyParams variety_from_json(const nlohmann::json& j);

/// log |Q| ≤ c1 log D + c1 n (log(c2 n d) − log log ω); c1 log D at n = 0.
double norming_log_card(double log_degree, double n, double d, double omega,
                        const ConstantSet& consts = {});

/// Right-hand side the tail function must reach at (m, ε/√2):
/// c1 log D + c1 n log(c2 n) + log(1/δ), with log D ← n log d for polynomial
/// images and a log-sum-exp over components for reducible varieties.
double required_phi(const VarietyParams& vp, double delta, const ConstantSet& consts = {});

/// Tail function φ(m, ε) of an ensemble with the eRIP.
class PhiFunction {
 public:
  struct SubGaussian {
    double K = 1.0;
    double c = 1.0;
  };
  /// Inverse of m = max{c1d ε⁻¹ φᵈ, c2d ε⁻² φ}: min{(mε/c1d)^{1/d}, mε²/c2d}.
  struct TensorOrder {
    double d = 1.0;
    double c1d = 1.0;
    double c2d = 1.0;
  };
  /// Step function through (m_i, φ_i) pairs sorted by m; φ nondecreasing.
  struct Table {
    std::vector<std::pair<double, double>> points;
  };
  /// intercept + log_weight·log m + scale·m^exponent, clamped at 0.
  /// Produced by calibration and valid at the ε it was calibrated for (the ε
  /// argument is ignored).
  struct PowerLaw {
    double intercept = 0.0;
    double scale = 0.0;
    double exponent = 1.0;
    double log_weight = 0.0;
  };
  using Model = std::variant<SubGaussian, TensorOrder, Table, PowerLaw>;

  explicit PhiFunction(Model model);
  double operator()(double m, double eps) const;
  const Model& model() const noexcept { return model_; }

 private:
  Model model_;
};

/// Smallest integer m ≥ 1 with phi(m, ε/√2) ≥ required_phi(vp, δ).
/// Throws ValidationError when no m up to 2^53 qualifies.
std::uint64_t required_dim(const PhiFunction& phi, double eps, double delta,
                           const VarietyParams& vp, const ConstantSet& consts = {});

/// ⌈2K²·required_phi / (c3 ε²)⌉.
std::uint64_t subgaussian_dim(double eps, double delta, const VarietyParams& vp, double K,
                              const ConstantSet& consts = {});

/// ⌈max{c1d ε⁻¹ logᵈ(1/δ), c2d ε⁻² log(1/δ)}⌉.
std::uint64_t tensor_sufficient_dim(double eps, double delta, double d,
                                    const ConstantSet& consts = {});
/// tensor_c · m^{1/d}.
double tensor_phi(double m, double eps, double d, const ConstantSet& consts = {});

/// ⌈c3 ε⁻² Δ [log²(ε⁻¹Δ) log N + log(1/δ)]⌉ with Δ = required_phi(vp, δ).
std::uint64_t fjlt_dim(double eps, double delta, const VarietyParams& vp, double N,
                       const ConstantSet& consts = {});

struct CommitteeBound {
  std::uint64_t k = 0;
  std::uint64_t committee_size = 1;  ///< 2k + 1
  std::optional<std::string> warning;
};

/// ⌈c4 (n_v log(M/ε) + log(1/δ))⌉ clamped at 0. Warns when M < n_v.
CommitteeBound median_committee_k(double n_v, double M, double eps, double delta,
                                  const ConstantSet& consts = {});

std::uint64_t total_measurements(std::uint64_t m, std::uint64_t k);

/// Per-member sketch size for the median committee: the sub-Gaussian m at
/// which each one-sided tail at ε/2 is at most e^{−θ}, θ = 1 + log 4.
std::uint64_t median_member_dim(double eps, double K, const ConstantSet& consts = {});

struct BudgetProblem {
  VarietyParams vp;
  double eps = 0.5;
  double delta = 0.01;
  double N = 2.0;
  std::optional<double> tensor_order;  ///< enables the tensor-structured rows
};

nlohmann::json budget_problem_to_json(const BudgetProblem& p);
BudgetProblem budget_problem_from_json(const nlohmann::json& j);

struct BudgetReport {
  BudgetProblem problem;
  ConstantSet constants;
  double threshold = 0.0;
  std::uint64_t subgaussian_m = 0;
  std::uint64_t fjlt_m = 0;
  std::optional<std::uint64_t> tensor_m;
  double M = 0.0;
  CommitteeBound committee;
  std::uint64_t median_member_m = 0;
  std::uint64_t median_total = 0;
};

BudgetReport budget_report(const BudgetProblem& problem, const ConstantSet& consts = {});
nlohmann::json report_to_json(const BudgetReport& r);
/// Two-column (quantity,value) CSV rendering.
std::string report_to_csv(const BudgetReport& r);

}  // namespace varsketch
