#pragma once

// Closed proper convex functions with explicit proximal maps, together with
// elements of the Bouligand subdifferential of those maps and the subspace
// pairs rge(B; γ(I−B)) built from them.
//
// Step convention: every function here takes λ of 𝒫_{λq}. Callers working
// with the proximal residual pass λ = 1/γ.

#include "gesolve/core.hpp"

#include <variant>

namespace gesolve {

namespace prox_kind {
struct Zero {};
struct Box {
  Vector lower;
  Vector upper;
};
struct Nonneg {};
struct L1 {
  double tau = 1.0;
};
/// Σ wᵢ|xᵢ| + indicator of [l, u].
struct WeightedL1Box {
  Vector weights;
  Vector lower;
  Vector upper;
};
/// ½ xᵀQx with Q symmetric positive semidefinite.
struct Quadratic {
  Matrix q;
};
}  // namespace prox_kind

class ProxFunction {
 public:
  using Kind = std::variant<prox_kind::Zero, prox_kind::Box, prox_kind::Nonneg, prox_kind::L1,
                            prox_kind::WeightedL1Box, prox_kind::Quadratic>;

  ProxFunction(Eigen::Index dim, Kind kind) : dim_(dim), kind_(std::move(kind)) { validate(); }

  static ProxFunction zero(Eigen::Index n) { return {n, prox_kind::Zero{}}; }
  static ProxFunction nonneg(Eigen::Index n) { return {n, prox_kind::Nonneg{}}; }
  static ProxFunction l1(Eigen::Index n, double tau) { return {n, prox_kind::L1{tau}}; }
  static ProxFunction box(const Vector& l, const Vector& u) { return {l.size(), prox_kind::Box{l, u}}; }
  static ProxFunction weighted_l1_box(const Vector& w, const Vector& l, const Vector& u) {
    return {w.size(), prox_kind::WeightedL1Box{w, l, u}};
  }
  static ProxFunction quadratic(const Matrix& q) { return {q.rows(), prox_kind::Quadratic{q}}; }

  [[nodiscard]] Eigen::Index dim() const { return dim_; }
  [[nodiscard]] const Kind& kind() const { return kind_; }
  [[nodiscard]] bool separable() const { return !std::holds_alternative<prox_kind::Quadratic>(kind_); }

  [[nodiscard]] std::string kind_name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, prox_kind::Zero>) return "zero";
          else if constexpr (std::is_same_v<K, prox_kind::Box>) return "box";
          else if constexpr (std::is_same_v<K, prox_kind::Nonneg>) return "nonneg";
          else if constexpr (std::is_same_v<K, prox_kind::L1>) return "l1";
          else if constexpr (std::is_same_v<K, prox_kind::WeightedL1Box>) return "weighted_l1_box";
          else return "quadratic";
        },
        kind_);
  }

 private:
  void validate() const {
    if (dim_ <= 0) throw Error(ErrorCode::InvalidArgument, "prox function needs a positive dimension");
    auto check_bounds = [&](const Vector& l, const Vector& u) {
      if (l.size() != dim_ || u.size() != dim_) throw Error(ErrorCode::ShapeMismatch, "bound vectors must have length dim");
      for (Eigen::Index i = 0; i < dim_; ++i)
        if (!(l(i) <= u(i))) throw Error(ErrorCode::InvalidArgument, "box bounds require l <= u");
    };
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, prox_kind::Box>) {
            check_bounds(k.lower, k.upper);
          } else if constexpr (std::is_same_v<K, prox_kind::L1>) {
            if (!(k.tau >= 0.0) || !std::isfinite(k.tau)) throw Error(ErrorCode::InvalidArgument, "l1 weight must be >= 0");
          } else if constexpr (std::is_same_v<K, prox_kind::WeightedL1Box>) {
            check_bounds(k.lower, k.upper);
            if (k.weights.size() != dim_ || (k.weights.array() < 0.0).any())
              throw Error(ErrorCode::InvalidArgument, "weights must be nonnegative with length dim");
          } else if constexpr (std::is_same_v<K, prox_kind::Quadratic>) {
            if (k.q.rows() != dim_ || k.q.cols() != dim_) throw Error(ErrorCode::ShapeMismatch, "Q must be dim x dim");
            if ((k.q - k.q.transpose()).cwiseAbs().maxCoeff() > 1e-10)
              throw Error(ErrorCode::InvalidArgument, "Q must be symmetric");
            Eigen::SelfAdjointEigenSolver<Matrix> eig(k.q);
            if (eig.eigenvalues().minCoeff() < -1e-10) throw Error(ErrorCode::InvalidArgument, "Q must be PSD");
          }
        },
        kind_);
  }

  Eigen::Index dim_;
  Kind kind_;
};

/// Resolves the derivative of a separable prox at kink coordinates.
struct BouligandSelector {
  enum class Rule { Lower, Upper, ByIndex };
  Rule rule = Rule::Lower;
  std::vector<bool> bits;  // one entry per kink coordinate, in coordinate order

  static BouligandSelector lower() { return {Rule::Lower, {}}; }
  static BouligandSelector upper() { return {Rule::Upper, {}}; }
  static BouligandSelector by_index(std::vector<bool> b) { return {Rule::ByIndex, std::move(b)}; }
};

namespace prox_detail {

inline double soft(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

inline double clamp(double v, double l, double u) { return std::min(std::max(v, l), u); }

/// 1-D description of a separable prox coordinate: value, derivative away from
/// kinks, and the breakpoints where the derivative may jump.
struct Scalar1D {
  double weight = 0.0;  // soft-threshold level
  double lower = -kInf;
  double upper = kInf;

  [[nodiscard]] double value(double z) const { return clamp(soft(z, weight), lower, upper); }

  [[nodiscard]] double slope(double z) const {
    if (lower == upper) return 0.0;
    if (std::abs(z) <= weight && weight > 0.0) return 0.0;
    const double s = soft(z, weight);
    return (s > lower && s < upper) ? 1.0 : 0.0;
  }

  [[nodiscard]] std::vector<double> breakpoints() const {
    std::vector<double> pts;
    if (weight > 0.0) {
      pts.push_back(-weight);
      pts.push_back(weight);
    }
    auto preimage = [&](double v) {
      if (!std::isfinite(v)) return;
      if (v > 0.0) pts.push_back(v + weight);
      else if (v < 0.0) pts.push_back(v - weight);
      else if (weight == 0.0) pts.push_back(0.0);
    };
    preimage(lower);
    preimage(upper);
    return pts;
  }
};

inline std::vector<Scalar1D> coordinates(const ProxFunction& q, double step) {
  const Eigen::Index n = q.dim();
  std::vector<Scalar1D> coords(static_cast<std::size_t>(n));
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        for (Eigen::Index i = 0; i < n; ++i) {
          auto& c = coords[static_cast<std::size_t>(i)];
          if constexpr (std::is_same_v<K, prox_kind::Box>) {
            c.lower = k.lower(i);
            c.upper = k.upper(i);
          } else if constexpr (std::is_same_v<K, prox_kind::Nonneg>) {
            c.lower = 0.0;
          } else if constexpr (std::is_same_v<K, prox_kind::L1>) {
            c.weight = step * k.tau;
          } else if constexpr (std::is_same_v<K, prox_kind::WeightedL1Box>) {
            c.weight = step * k.weights(i);
            c.lower = k.lower(i);
            c.upper = k.upper(i);
          }
        }
      },
      q.kind());
  return coords;
}

inline double kink_tolerance(const Vector& z) { return 1e-9 * (1.0 + z.norm()); }

/// Indices of coordinates lying on a breakpoint where the slope jumps.
inline IndexSet kink_coordinates(const std::vector<Scalar1D>& coords, const Vector& z) {
  IndexSet kinks;
  const double tol = kink_tolerance(z);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto& c = coords[i];
    const double zi = z(static_cast<Eigen::Index>(i));
    for (double b : c.breakpoints()) {
      if (std::abs(zi - b) > tol) continue;
      const double probe = std::max(10.0 * tol, 1e-7 * (1.0 + std::abs(b)));
      if (c.slope(b - probe) != c.slope(b + probe)) {
        kinks.push_back(static_cast<int>(i));
        break;
      }
    }
  }
  return kinks;
}

inline void require_step(double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorCode::InvalidArgument, "prox step must be positive");
}

}  // namespace prox_detail

/// 𝒫_{λq}(z) = argmin_w q(w) + ‖w − z‖²/(2λ).
inline Vector prox_eval(const ProxFunction& q, double step, const Vector& z) {
  prox_detail::require_step(step);
  if (z.size() != q.dim()) throw Error(ErrorCode::ShapeMismatch, "prox argument dimension differs from q");
  if (const auto* quad = std::get_if<prox_kind::Quadratic>(&q.kind())) {
    const Matrix m = Matrix::Identity(q.dim(), q.dim()) + step * quad->q;
    return m.llt().solve(z);
  }
  const auto coords = prox_detail::coordinates(q, step);
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out(i) = coords[static_cast<std::size_t>(i)].value(z(i));
  return out;
}

/// Number of kink coordinates of the prox at z.
inline int kink_count(const ProxFunction& q, double step, const Vector& z) {
  if (!q.separable()) return 0;
  return static_cast<int>(prox_detail::kink_coordinates(prox_detail::coordinates(q, step), z).size());
}

/// An element B ∈ ∂_B 𝒫_{λq}(z). Separable kinds give a diagonal 0/1 matrix
/// with kink coordinates resolved by the selector; the quadratic kind gives
/// (I + λQ)⁻¹.
inline Matrix bouligand_element(const ProxFunction& q, double step, const Vector& z,
                                const BouligandSelector& sel = BouligandSelector::lower()) {
  prox_detail::require_step(step);
  if (z.size() != q.dim()) throw Error(ErrorCode::ShapeMismatch, "prox argument dimension differs from q");
  const Eigen::Index n = q.dim();
  if (const auto* quad = std::get_if<prox_kind::Quadratic>(&q.kind())) {
    const Matrix m = Matrix::Identity(n, n) + step * quad->q;
    Matrix b = m.llt().solve(Matrix::Identity(n, n));
    return 0.5 * (b + b.transpose());
  }
  const auto coords = prox_detail::coordinates(q, step);
  const IndexSet kinks = prox_detail::kink_coordinates(coords, z);
  if (sel.rule == BouligandSelector::Rule::ByIndex && sel.bits.size() != kinks.size()) {
    throw Error(ErrorCode::SelectorMismatch, "selector has " + std::to_string(sel.bits.size()) + " bits for " +
                                                 std::to_string(kinks.size()) + " kinks");
  }
  Vector diag(n);
  for (Eigen::Index i = 0; i < n; ++i) diag(i) = coords[static_cast<std::size_t>(i)].slope(z(i));
  for (std::size_t k = 0; k < kinks.size(); ++k) {
    double v = 0.0;
    switch (sel.rule) {
      case BouligandSelector::Rule::Lower: v = 0.0; break;
      case BouligandSelector::Rule::Upper: v = 1.0; break;
      case BouligandSelector::Rule::ByIndex: v = sel.bits[k] ? 1.0 : 0.0; break;
    }
    diag(kinks[k]) = v;
  }
  return diag.asDiagonal();
}

inline constexpr int kMaxKinks = 16;

/// Every selector resolution at z, deduplicated.
inline std::vector<Matrix> enumerate_bouligand(const ProxFunction& q, double step, const Vector& z) {
  if (!q.separable()) throw Error(ErrorCode::UnsupportedKind, "enumeration needs a separable prox");
  prox_detail::require_step(step);
  const int kinks = kink_count(q, step, z);
  if (kinks > kMaxKinks) throw Error(ErrorCode::TooManyKinks, std::to_string(kinks) + " kinks exceed the limit");
  std::vector<Matrix> out;
  for (unsigned mask = 0; mask < (1u << kinks); ++mask) {
    std::vector<bool> bits(static_cast<std::size_t>(kinks));
    for (int k = 0; k < kinks; ++k) bits[static_cast<std::size_t>(k)] = (mask >> k) & 1u;
    Matrix b = bouligand_element(q, step, z, BouligandSelector::by_index(bits));
    if (std::none_of(out.begin(), out.end(), [&](const Matrix& e) { return e == b; })) out.push_back(std::move(b));
  }
  return out;
}

struct ScdPair {
  Matrix y_star;
  Matrix x_star;
};

/// (Y*, X*) = (B, γ(I − B)) with B ∈ ∂_B 𝒫_{γ⁻¹q}(z).
inline ScdPair scd_pair(const ProxFunction& q, double gamma, const Vector& z,
                        const BouligandSelector& sel = BouligandSelector::lower()) {
  prox_detail::require_step(gamma);
  Matrix b = bouligand_element(q, 1.0 / gamma, z, sel);
  const Eigen::Index n = q.dim();
  Matrix x_star = gamma * (Matrix::Identity(n, n) - b);
  return {std::move(b), std::move(x_star)};
}

/// dstar ∈ ∂q(d), decided through the fixed point 𝒫_q(d + dstar) = d.
inline bool subgradient_check(const ProxFunction& q, const Vector& d, const Vector& dstar) {
  if (d.size() != q.dim() || dstar.size() != q.dim()) return false;
  return (prox_eval(q, 1.0, d + dstar) - d).norm() <= 1e-10 * (1.0 + d.norm());
}

}  // namespace gesolve
