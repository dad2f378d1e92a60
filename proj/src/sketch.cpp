#include "varsketch/sketch.hpp"

#include "varsketch/errors.hpp"
#include "varsketch/rng.hpp"
#include "varsketch/wht.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace varsketch {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using nlohmann::json;

namespace {

// Largest dense operator matrix we are willing to realize (entries).
constexpr std::uint64_t kDenseOperatorCap = std::uint64_t{1} << 28;

constexpr std::pair<SketchKind, std::string_view> kKindNames[] = {
    {SketchKind::gaussian, "gaussian"},     {SketchKind::rademacher, "rademacher"},
    {SketchKind::fjlt, "fjlt"},             {SketchKind::khatri_rao, "khatri_rao"},
    {SketchKind::kronecker, "kronecker"},   {SketchKind::kfjlt, "kfjlt"},
    {SketchKind::identity, "identity"},
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

void require_shape(const Shape& shape) {
  require(!shape.empty(), "input shape must have at least one mode");
  for (std::size_t n : shape) require(n >= 1, "mode lengths must be positive");
}

}  // namespace

std::string_view to_string(SketchKind kind) noexcept {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

SketchKind parse_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  throw ValidationError("unknown sketch kind '" + std::string(name) + "'");
}

std::string_view to_string(Distribution dist) noexcept {
  return dist == Distribution::gaussian ? "gaussian" : "rademacher";
}

Distribution parse_distribution(std::string_view name) {
  if (name == "gaussian") return Distribution::gaussian;
  if (name == "rademacher") return Distribution::rademacher;
  throw ValidationError("unknown distribution '" + std::string(name) + "'");
}

OperatorSpec reseeded(OperatorSpec spec, std::uint64_t seed) {
  spec.seed = seed;
  for (std::size_t j = 0; j < spec.modes.size(); ++j)
    spec.modes[j] = reseeded(std::move(spec.modes[j]), derive_seed(seed, Role::mode, j));
  return spec;
}

json spec_to_json(const OperatorSpec& spec) {
  json j{{"kind", to_string(spec.kind)},
         {"m", spec.m},
         {"input_shape", spec.input_shape},
         {"seed", spec.seed}};
  if (spec.kind == SketchKind::khatri_rao)
    j["row_distribution"] = to_string(spec.row_distribution);
  if (spec.kind == SketchKind::kronecker) {
    j["modes"] = json::array();
    for (const auto& mode : spec.modes) j["modes"].push_back(spec_to_json(mode));
  }
  return j;
}

OperatorSpec spec_from_json(const json& j) {
  try {
    OperatorSpec spec;
    spec.kind = parse_kind(j.at("kind").get<std::string>());
    spec.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("row_distribution"))
      spec.row_distribution = parse_distribution(j["row_distribution"].get<std::string>());
    if (spec.kind == SketchKind::kronecker) {
      const auto& modes = j.at("modes");
      require(modes.is_array() && !modes.empty(), "kronecker spec needs a nonempty 'modes' list");
      for (std::size_t k = 0; k < modes.size(); ++k) {
        OperatorSpec mode = spec_from_json(modes[k]);
        if (!modes[k].contains("seed"))
          mode = reseeded(std::move(mode), derive_seed(spec.seed, Role::mode, k));
        spec.modes.push_back(std::move(mode));
      }
      spec.m = 1;
      for (const auto& mode : spec.modes) {
        spec.m *= mode.m;
        spec.input_shape.push_back(static_cast<std::size_t>(shape_size(mode.input_shape)));
      }
      if (j.contains("m"))
        require(j["m"].get<std::size_t>() == spec.m, "kronecker 'm' must equal the product of mode outputs");
      if (j.contains("input_shape"))
        require(j["input_shape"].get<Shape>() == spec.input_shape,
                "kronecker 'input_shape' must list the mode input sizes");
      return spec;
    }
    spec.m = j.at("m").get<std::size_t>();
    const auto& shape = j.at("input_shape");
    spec.input_shape = shape.is_array() ? shape.get<Shape>() : Shape{shape.get<std::size_t>()};
    return spec;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("operator spec: ") + e.what());
  }
}

namespace detail {

class OperatorImpl {
 public:
  explicit OperatorImpl(OperatorSpec spec)
      : spec_(std::move(spec)), n_(shape_size(spec_.input_shape)) {}
  virtual ~OperatorImpl() = default;

  virtual void apply_dense(std::span<const double> x, std::span<double> y) const = 0;
  virtual bool factored() const { return false; }
  virtual void apply_cp(const CPTensor&, std::span<double>) const {}

  const OperatorSpec& spec() const noexcept { return spec_; }
  std::uint64_t input_size() const noexcept { return n_; }

 protected:
  OperatorSpec spec_;
  std::uint64_t n_;
};

}  // namespace detail

namespace {

using detail::OperatorImpl;

class IdentityImpl final : public OperatorImpl {
 public:
  using OperatorImpl::OperatorImpl;
  void apply_dense(std::span<const double> x, std::span<double> y) const override {
    std::copy(x.begin(), x.end(), y.begin());
  }
};

// gaussian / rademacher: fully realized m × N matrix, row s drawn from its
// own stream.
class DenseImpl final : public OperatorImpl {
 public:
  explicit DenseImpl(OperatorSpec spec) : OperatorImpl(std::move(spec)) {
    const auto m = spec_.m;
    const auto n = static_cast<std::size_t>(n_);
    if (static_cast<double>(m) * static_cast<double>(n) > static_cast<double>(kDenseOperatorCap))
      throw CapExceededError("dense operator of " + std::to_string(m) + " x " +
                             std::to_string(n) + " is too large to realize");
    const bool gauss = spec_.kind == SketchKind::gaussian;
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    s_.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < m; ++r) {
      RandomStream rng(spec_.seed, Role::row, r);
      for (std::size_t c = 0; c < n; ++c)
        s_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            scale * (gauss ? rng.gaussian() : rng.rademacher());
    }
  }
  void apply_dense(std::span<const double> x, std::span<double> y) const override {
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::Map<Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    yv.noalias() = s_ * xv;
  }

 private:
  RowMatrix s_;
};

// Mode-wise mixing shared by fjlt (one mode) and kfjlt.
struct MixingPlan {
  Shape padded;
  std::vector<std::vector<double>> signs;  // per mode, padded length
  std::vector<std::uint64_t> rows;         // sampled flat indices into padded tensor
  std::uint64_t padded_size = 1;
  double scale = 1.0;

  MixingPlan(const Shape& shape, std::size_t m, std::uint64_t seed) {
    for (std::size_t j = 0; j < shape.size(); ++j) {
      const auto p = static_cast<std::size_t>(next_pow2(shape[j]));
      padded.push_back(p);
      RandomStream rng(seed, Role::signs, j);
      std::vector<double> s(p);
      for (double& v : s) v = rng.rademacher();
      signs.push_back(std::move(s));
    }
    padded_size = shape_size(padded);
    if (m > padded_size)
      throw ValidationError("sketch dimension m = " + std::to_string(m) +
                            " exceeds padded input size " + std::to_string(padded_size));
    RandomStream rng(seed, Role::sample, 0);
    rows = sample_without_replacement(rng, padded_size, m);
    // √(N_pad/m) times the orthonormal WHT normalization ∏ p_j^{-1/2}.
    scale = 1.0 / std::sqrt(static_cast<double>(m));
  }
};

class FjltImpl final : public OperatorImpl {
 public:
  explicit FjltImpl(OperatorSpec spec)
      : OperatorImpl(std::move(spec)), plan_(Shape{static_cast<std::size_t>(n_)}, spec_.m, spec_.seed) {}

  void apply_dense(std::span<const double> x, std::span<double> y) const override {
    std::vector<double> buf(plan_.padded[0], 0.0);
    const auto& d = plan_.signs[0];
    for (std::size_t i = 0; i < x.size(); ++i) buf[i] = d[i] * x[i];
    fwht(buf);
    for (std::size_t s = 0; s < plan_.rows.size(); ++s) y[s] = plan_.scale * buf[plan_.rows[s]];
  }

 private:
  MixingPlan plan_;
};

class KfjltImpl final : public OperatorImpl {
 public:
  explicit KfjltImpl(OperatorSpec spec)
      : OperatorImpl(std::move(spec)), plan_(spec_.input_shape, spec_.m, spec_.seed) {}

  bool factored() const override { return true; }

  void apply_dense(std::span<const double> x, std::span<double> y) const override {
    if (plan_.padded_size > kDefaultMaterializationCap)
      throw CapExceededError("kfjlt dense path: padded size exceeds materialization cap");
    const Shape& shape = spec_.input_shape;
    const std::size_t d = shape.size();
    std::vector<double> buf(static_cast<std::size_t>(plan_.padded_size), 0.0);
    std::vector<std::size_t> idx(d);
    for (std::size_t flat = 0; flat < x.size(); ++flat) {
      unflatten(flat, shape, idx);
      std::uint64_t pflat = 0;
      double sign = 1.0;
      for (std::size_t j = 0; j < d; ++j) {
        pflat = pflat * plan_.padded[j] + idx[j];
        sign *= plan_.signs[j][idx[j]];
      }
      buf[pflat] = sign * x[flat];
    }
    for (std::size_t j = 0; j < d; ++j) {
      std::size_t outer = 1, inner = 1;
      for (std::size_t q = 0; q < j; ++q) outer *= plan_.padded[q];
      for (std::size_t q = j + 1; q < d; ++q) inner *= plan_.padded[q];
      const std::size_t len = plan_.padded[j];
      for (std::size_t o = 0; o < outer; ++o) fwht_strided(buf.data() + o * len * inner, len, inner);
    }
    for (std::size_t s = 0; s < plan_.rows.size(); ++s) y[s] = plan_.scale * buf[plan_.rows[s]];
  }

  void apply_cp(const CPTensor& t, std::span<double> y) const override {
    const std::size_t d = t.order();
    const auto r = static_cast<Eigen::Index>(t.rank());
    // mixed[j] is r × p_j so that one mode index selects a contiguous column
    std::vector<Matrix> mixed(d);
    std::vector<double> col;
    for (std::size_t j = 0; j < d; ++j) {
      const Matrix& a = t.factor(j);
      const std::size_t p = plan_.padded[j];
      mixed[j].setZero(r, static_cast<Eigen::Index>(p));
      for (Eigen::Index i = 0; i < r; ++i) {
        col.assign(p, 0.0);
        for (Eigen::Index q = 0; q < a.rows(); ++q)
          col[static_cast<std::size_t>(q)] = plan_.signs[j][static_cast<std::size_t>(q)] * a(q, i);
        fwht(col);
        for (std::size_t q = 0; q < p; ++q) mixed[j](i, static_cast<Eigen::Index>(q)) = col[q];
      }
    }
    std::vector<std::size_t> idx(d);
    Eigen::VectorXd acc(r);
    for (std::size_t s = 0; s < plan_.rows.size(); ++s) {
      unflatten(plan_.rows[s], plan_.padded, idx);
      acc.setOnes();
      for (std::size_t j = 0; j < d; ++j) acc.array() *= mixed[j].col(static_cast<Eigen::Index>(idx[j])).array();
      y[s] = plan_.scale * acc.sum();
    }
  }

 private:
  MixingPlan plan_;
};

class KhatriRaoImpl final : public OperatorImpl {
 public:
  explicit KhatriRaoImpl(OperatorSpec spec) : OperatorImpl(std::move(spec)) {
    const Shape& shape = spec_.input_shape;
    const auto m = static_cast<Eigen::Index>(spec_.m);
    for (std::size_t n : shape) rows_.emplace_back(m, static_cast<Eigen::Index>(n));
    const bool gauss = spec_.row_distribution == Distribution::gaussian;
    for (Eigen::Index s = 0; s < m; ++s) {
      RandomStream rng(spec_.seed, Role::row, static_cast<std::uint64_t>(s));
      for (auto& r : rows_)
        for (Eigen::Index c = 0; c < r.cols(); ++c) r(s, c) = gauss ? rng.gaussian() : rng.rademacher();
    }
    scale_ = 1.0 / std::sqrt(static_cast<double>(spec_.m));
  }

  bool factored() const override { return true; }

  void apply_dense(std::span<const double> x, std::span<double> y) const override {
    const std::size_t d = rows_.size();
    const auto last = rows_[d - 1].cols();
    const auto lead = static_cast<Eigen::Index>(x.size()) / last;
    // Contract the last mode for every row at once (one GEMM), then finish
    // each row's contraction mode by mode.
    Eigen::Map<const RowMatrix> xm(x.data(), lead, last);
    const Matrix w = xm * rows_[d - 1].transpose();
    Eigen::VectorXd v, next;
    for (Eigen::Index s = 0; s < w.cols(); ++s) {
      v = w.col(s);
      for (std::size_t j = d - 1; j-- > 0;) {
        const auto len = rows_[j].cols();
        Eigen::Map<const RowMatrix> vm(v.data(), v.size() / len, len);
        next = vm * rows_[j].row(s).transpose();
        v.swap(next);
      }
      y[static_cast<std::size_t>(s)] = scale_ * v(0);
    }
  }

  void apply_cp(const CPTensor& t, std::span<double> y) const override {
    Eigen::Map<Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    if (t.rank() == 0) {
      yv.setZero();
      return;
    }
    Matrix prod = rows_[0] * t.factor(0);
    for (std::size_t j = 1; j < rows_.size(); ++j) prod.array() *= (rows_[j] * t.factor(j)).array();
    yv = scale_ * prod.rowwise().sum();
  }

 private:
  std::vector<Matrix> rows_;  // rows_[j] is m × n_j: mode-j vector of every row
  double scale_ = 1.0;
};

}  // namespace

// Kronecker needs the public SketchOperator type for its modes.
namespace {

class KroneckerImpl final : public OperatorImpl {
 public:
  KroneckerImpl(OperatorSpec spec, std::vector<SketchOperator> modes)
      : OperatorImpl(std::move(spec)), modes_(std::move(modes)) {
    for (const auto& op : modes_) out_shape_.push_back(op.output_dim());
    if (shape_size(out_shape_) > kDefaultMaterializationCap)
      throw CapExceededError("kronecker output dimension exceeds materialization cap");
  }

  bool factored() const override { return true; }

  void apply_dense(std::span<const double> x, std::span<double> y) const override {
    Shape cur = spec_.input_shape;
    std::vector<double> buf(x.begin(), x.end()), next, fiber;
    const std::size_t d = cur.size();
    for (std::size_t j = 0; j < d; ++j) {
      std::size_t outer = 1, inner = 1;
      for (std::size_t q = 0; q < j; ++q) outer *= cur[q];
      for (std::size_t q = j + 1; q < d; ++q) inner *= cur[q];
      const std::size_t len = cur[j];
      const std::size_t mj = out_shape_[j];
      next.assign(outer * mj * inner, 0.0);
      fiber.resize(len);
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
          for (std::size_t t = 0; t < len; ++t) fiber[t] = buf[(o * len + t) * inner + i];
          const DenseVector out = modes_[j].apply(std::span<const double>(fiber));
          for (std::size_t t = 0; t < mj; ++t) next[(o * mj + t) * inner + i] = out[t];
        }
      }
      buf.swap(next);
      cur[j] = mj;
    }
    std::copy(buf.begin(), buf.end(), y.begin());
  }

  void apply_cp(const CPTensor& t, std::span<double> y) const override {
    std::vector<Matrix> mapped;
    const auto r = static_cast<Eigen::Index>(t.rank());
    std::vector<double> col;
    for (std::size_t j = 0; j < modes_.size(); ++j) {
      const Matrix& a = t.factor(j);
      Matrix b(static_cast<Eigen::Index>(out_shape_[j]), r);
      for (Eigen::Index i = 0; i < r; ++i) {
        col.assign(a.col(i).data(), a.col(i).data() + a.rows());
        const DenseVector out = modes_[j].apply(std::span<const double>(col));
        for (Eigen::Index q = 0; q < b.rows(); ++q) b(q, i) = out[static_cast<std::size_t>(q)];
      }
      mapped.push_back(std::move(b));
    }
    const DenseVector out = materialize(CPTensor(std::move(mapped)));
    std::copy(out.values().begin(), out.values().end(), y.begin());
  }

 private:
  std::vector<SketchOperator> modes_;
  Shape out_shape_;
};

}  // namespace

SketchOperator::SketchOperator(std::shared_ptr<const detail::OperatorImpl> impl)
    : impl_(std::move(impl)) {}

SketchKind SketchOperator::kind() const noexcept { return impl_->spec().kind; }
std::size_t SketchOperator::output_dim() const noexcept { return impl_->spec().m; }
const Shape& SketchOperator::input_shape() const noexcept { return impl_->spec().input_shape; }
std::uint64_t SketchOperator::input_size() const noexcept { return impl_->input_size(); }
std::uint64_t SketchOperator::seed() const noexcept { return impl_->spec().seed; }
const OperatorSpec& SketchOperator::spec() const noexcept { return impl_->spec(); }
bool SketchOperator::has_factored_path() const noexcept { return impl_->factored(); }

DenseVector SketchOperator::apply(std::span<const double> x) const {
  if (x.size() != impl_->input_size())
    throw ShapeError("input length " + std::to_string(x.size()) + " does not match operator input size " +
                     std::to_string(impl_->input_size()));
  DenseVector y = DenseVector::zeros(output_dim());
  impl_->apply_dense(x, y.values());
  return y;
}

DenseVector SketchOperator::apply(const CPTensor& t, std::uint64_t cap) const {
  if (impl_->factored()) {
    if (t.mode_lengths() != input_shape())
      throw ShapeError("CP tensor mode lengths do not match the operator's input shape");
    DenseVector y = DenseVector::zeros(output_dim());
    impl_->apply_cp(t, y.values());
    return y;
  }
  if (t.dimension() != impl_->input_size())
    throw ShapeError("CP tensor dimension does not match operator input size");
  return apply(materialize(t, cap));
}

Matrix SketchOperator::to_matrix() const {
  const auto n = static_cast<std::size_t>(input_size());
  Matrix out(static_cast<Eigen::Index>(output_dim()), static_cast<Eigen::Index>(n));
  std::vector<double> e(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    e[c] = 1.0;
    const DenseVector col = apply(std::span<const double>(e));
    for (std::size_t r = 0; r < col.size(); ++r) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = col[r];
    e[c] = 0.0;
  }
  return out;
}

SketchOperator make_operator(const OperatorSpec& spec) {
  require(spec.m >= 1, "sketch dimension m must be at least 1");
  if (spec.kind == SketchKind::kronecker) {
    require(!spec.modes.empty(), "kronecker operator needs at least one mode");
    std::vector<SketchOperator> modes;
    for (const auto& mode : spec.modes) modes.push_back(make_operator(mode));
    OperatorSpec full = spec;
    full.m = 1;
    full.input_shape.clear();
    for (const auto& op : modes) {
      full.m *= op.output_dim();
      full.input_shape.push_back(static_cast<std::size_t>(op.input_size()));
    }
    return SketchOperator(std::make_shared<KroneckerImpl>(std::move(full), std::move(modes)));
  }
  require_shape(spec.input_shape);
  OperatorSpec s = spec;
  s.modes.clear();
  switch (spec.kind) {
    case SketchKind::gaussian:
    case SketchKind::rademacher:
    case SketchKind::fjlt:
    case SketchKind::identity: {
      // flat kinds accept any shape; they see the flattened length
      s.input_shape = {static_cast<std::size_t>(shape_size(spec.input_shape))};
      if (spec.kind == SketchKind::identity) {
        require(s.m == s.input_shape[0], "identity operator needs m == N");
        return SketchOperator(std::make_shared<IdentityImpl>(std::move(s)));
      }
      if (spec.kind == SketchKind::fjlt) return SketchOperator(std::make_shared<FjltImpl>(std::move(s)));
      return SketchOperator(std::make_shared<DenseImpl>(std::move(s)));
    }
    case SketchKind::khatri_rao:
      return SketchOperator(std::make_shared<KhatriRaoImpl>(std::move(s)));
    case SketchKind::kfjlt:
      return SketchOperator(std::make_shared<KfjltImpl>(std::move(s)));
    case SketchKind::kronecker:
      break;
  }
  throw ValidationError("unsupported sketch kind");
}

SketchOperator make_gaussian(std::size_t m, std::size_t n, std::uint64_t seed) {
  return make_operator({SketchKind::gaussian, m, {n}, seed, Distribution::gaussian, {}});
}

SketchOperator make_rademacher(std::size_t m, std::size_t n, std::uint64_t seed) {
  return make_operator({SketchKind::rademacher, m, {n}, seed, Distribution::gaussian, {}});
}

SketchOperator make_fjlt(std::size_t m, std::size_t n, std::uint64_t seed) {
  return make_operator({SketchKind::fjlt, m, {n}, seed, Distribution::gaussian, {}});
}

SketchOperator make_khatri_rao(std::size_t m, const Shape& mode_lengths,
                               Distribution row_distribution, std::uint64_t seed) {
  return make_operator({SketchKind::khatri_rao, m, mode_lengths, seed, row_distribution, {}});
}

SketchOperator make_kfjlt(std::size_t m, const Shape& mode_lengths, std::uint64_t seed) {
  return make_operator({SketchKind::kfjlt, m, mode_lengths, seed, Distribution::gaussian, {}});
}

SketchOperator make_identity(std::size_t n, std::uint64_t seed) {
  return make_operator({SketchKind::identity, n, {n}, seed, Distribution::gaussian, {}});
}

SketchOperator make_kronecker(std::vector<SketchOperator> mode_ops) {
  require(!mode_ops.empty(), "kronecker operator needs at least one mode");
  OperatorSpec spec;
  spec.kind = SketchKind::kronecker;
  spec.m = 1;
  std::uint64_t h = 0;
  for (std::size_t j = 0; j < mode_ops.size(); ++j) {
    spec.m *= mode_ops[j].output_dim();
    spec.input_shape.push_back(static_cast<std::size_t>(mode_ops[j].input_size()));
    spec.modes.push_back(mode_ops[j].spec());
    h = splitmix64(h ^ mode_ops[j].seed());
  }
  spec.seed = h;
  return SketchOperator(std::make_shared<KroneckerImpl>(std::move(spec), std::move(mode_ops)));
}

}  // namespace varsketch
