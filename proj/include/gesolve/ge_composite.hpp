#pragma once

// Generalized equation 0 ∈ F(x) + ∂q(x) with q prox-explicit.
//
// Both methods work through the proximal residual
//   u_γ(x) = 𝒫_{γ⁻¹q}(x − γ⁻¹F(x)) − x,
// which vanishes exactly at solutions:
//   * scd:   (Y*ᵀF′ + X*ᵀ)Δx = (γY*ᵀ + X*ᵀ)u with (Y*, X*) = (B, γ(I − B));
//   * gsemi: V Δx = −u with V = B(I − γ⁻¹F′) − I.
// For the same B the two matrices satisfy Y*ᵀF′ + X*ᵀ = −γV and the
// right-hand side reduces to γu, so the directions coincide.

#include "gesolve/newton.hpp"
#include "gesolve/prox.hpp"

namespace gesolve {

struct CompositeGE {
  Eigen::Index n = 0;
  std::function<Vector(const Vector&)> F;
  std::function<Matrix(const Vector&)> jac_F;
  ProxFunction q;

  void validate() const {
    if (q.dim() != n) throw Error(ErrorCode::ShapeMismatch, "q.dim must equal n");
  }
};

class GammaSchedule {
 public:
  static GammaSchedule constant(double gamma) { return GammaSchedule(gamma, gamma, {gamma}); }
  static GammaSchedule cycle(std::vector<double> values) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "gamma cycle must not be empty");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return GammaSchedule(*lo, *hi, std::move(values));
  }

  [[nodiscard]] double at(int k) const { return values_[static_cast<std::size_t>(k) % values_.size()]; }
  [[nodiscard]] double lower() const { return lower_; }
  [[nodiscard]] double upper() const { return upper_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }

 private:
  GammaSchedule(double lower, double upper, std::vector<double> values)
      : lower_(lower), upper_(upper), values_(std::move(values)) {
    for (double g : values_)
      if (!(g > 0.0) || !std::isfinite(g)) throw Error(ErrorCode::InvalidArgument, "gamma values must be positive");
  }

  double lower_;
  double upper_;
  std::vector<double> values_;
};

namespace composite_detail {
inline void require_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
}
/// z = x − γ⁻¹F(x), the point where the prox is evaluated.
inline Vector prox_argument(const CompositeGE& prob, double gamma, const Vector& x) { return x - prob.F(x) / gamma; }
}  // namespace composite_detail

/// u_γ(x). The only place where γ is converted to the prox step 1/γ.
inline Vector residual(const CompositeGE& prob, double gamma, const Vector& x) {
  composite_detail::require_gamma(gamma);
  return prox_eval(prob.q, 1.0 / gamma, composite_detail::prox_argument(prob, gamma, x)) - x;
}

/// V = B(I − γ⁻¹F′(x)) − I with B ∈ ∂_B 𝒫_{γ⁻¹q}(x − γ⁻¹F(x)).
inline Matrix gsemi_element(const CompositeGE& prob, double gamma, const Vector& x,
                            const BouligandSelector& sel = BouligandSelector::lower()) {
  composite_detail::require_gamma(gamma);
  const Matrix b = bouligand_element(prob.q, 1.0 / gamma, composite_detail::prox_argument(prob, gamma, x), sel);
  const Matrix id = Matrix::Identity(prob.n, prob.n);
  return b * (id - prob.jac_F(x) / gamma) - id;
}

struct ScdStep {
  Vector x_next;
  Vector dx;
  Vector u;
  Vector d_hat;       // x + u
  Vector d_hat_star;  // −γu − F(x)
  Matrix b;
  Matrix y_star;
  Matrix x_star;
  double condition = kNaN;
  double system_residual = kNaN;
};

/// One SCD semismooth* step.
inline ScdStep scd_iterate(const CompositeGE& prob, double gamma, const Vector& x,
                           const BouligandSelector& sel = BouligandSelector::lower()) {
  composite_detail::require_gamma(gamma);
  ScdStep step;
  const Vector fx = prob.F(x);
  step.u = residual(prob, gamma, x);
  step.d_hat = x + step.u;
  step.d_hat_star = -gamma * step.u - fx;
  auto pair = scd_pair(prob.q, gamma, x - fx / gamma, sel);
  const Matrix system = pair.y_star.transpose() * prob.jac_F(x) + pair.x_star.transpose();
  const Vector rhs = (gamma * pair.y_star.transpose() + pair.x_star.transpose()) * step.u;
  const auto dx = linalg::lu_solve(system, rhs);
  if (!dx) throw Error(ErrorCode::SingularSystem, "SCD Newton system is singular");
  step.dx = *dx;
  step.x_next = x + *dx;
  step.condition = linalg::condition_number(system);
  step.system_residual = (system * *dx - rhs).norm();
  step.b = pair.y_star;
  step.y_star = std::move(pair.y_star);
  step.x_star = std::move(pair.x_star);
  return step;
}

enum class CompositeAlgorithm { Scd, Gsemi };

inline const char* to_string(CompositeAlgorithm a) { return a == CompositeAlgorithm::Scd ? "scd" : "gsemi-composite"; }

/// Runs scd or gsemi from x0 with γ⁽ᵏ⁾ from the schedule; termination when
/// ‖u_γ⁽ᵏ⁾(x)‖ ≤ tol_residual, followed by an exact subgradient check.
inline ConvergenceReport solve(const CompositeGE& prob, const Vector& x0, CompositeAlgorithm algorithm,
                               const GammaSchedule& schedule, const BouligandSelector& sel,
                               const NewtonConfig& config, const std::optional<Vector>& reference = std::nullopt) {
  prob.validate();
  config.validate();
  if (!x0.allFinite() || x0.size() != prob.n) throw Error(ErrorCode::InvalidArgument, "x0 must be finite of size n");
  ConvergenceReport report;

  if (algorithm == CompositeAlgorithm::Gsemi) {
    report = run_indexed([&](int k, const Vector& x) { return residual(prob, schedule.at(k), x); },
                         [&](int k, const Vector& x) { return gsemi_element(prob, schedule.at(k), x, sel); }, x0,
                         config, reference);
    for (std::size_t k = 0; k < report.steps.size(); ++k) report.steps[k].gamma = schedule.at(static_cast<int>(k));
  } else {
    Vector x = x0;
    bool recorded = false;
    try {
      for (int k = 0;; ++k) {
        recorded = false;
        const double gamma = schedule.at(k);
        const Vector u = residual(prob, gamma, x);
        report.iterates.push_back(x);
        report.residual_norms.push_back(u.norm());
        recorded = true;
        if (u.norm() <= config.tol_residual) {
          report.termination = Termination::ResidualMet;
          break;
        }
        if (k >= config.max_iter) {
          report.termination = Termination::MaxIter;
          break;
        }
        const ScdStep step = scd_iterate(prob, gamma, x, sel);
        StepRecord rec;
        rec.gamma = gamma;
        rec.condition = step.condition;
        rec.linear_residual = step.system_residual;
        rec.step_norm = step.dx.norm();
        report.steps.push_back(rec);
        x = step.x_next;
        if (!x.allFinite() || x.norm() > config.divergence_guard) {
          report.iterates.push_back(x);
          report.residual_norms.push_back(kNaN);
          report.termination = Termination::Diverged;
          report.diagnostic = "iterate left the divergence guard";
          break;
        }
      }
    } catch (const Error& e) {
      if (!recorded) {
        report.iterates.push_back(x);
        report.residual_norms.push_back(kNaN);
      }
      report.termination = termination_for(e);
      report.diagnostic = e.what();
    }
    if (reference) attach_reference(report, *reference);
  }
  report.algorithm = to_string(algorithm);
  if (report.termination == Termination::ResidualMet) {
    const Vector& x = report.final_iterate();
    report.membership = subgradient_check(prob.q, x, -prob.F(x));
  }
  return report;
}

inline constexpr double kRegularityConditionBound = 1e12;

struct RegularityWitness {
  Matrix b;
  Matrix v;           // B(I − γ⁻¹F′) − I
  Matrix scd_matrix;  // Y*ᵀF′ + X*ᵀ
  bool v_singular = false;
  bool scd_singular = false;
};

struct RegularityReport {
  bool all_nonsingular = true;      // every V nonsingular
  bool all_scd_nonsingular = true;  // every Y*ᵀF′ + X*ᵀ nonsingular
  bool families_agree = true;       // elementwise singularity status agrees
  int elements = 0;
  std::vector<RegularityWitness> witnesses;  // singular elements (either family)
};

/// Enumerates ∂_B 𝒫_{γ⁻¹q} at z = x − γ⁻¹F(x) and tests both Newton-matrix
/// families for singularity (condition number above 1e12).
inline RegularityReport regularity_enumerate(const CompositeGE& prob, double gamma, const Vector& x) {
  composite_detail::require_gamma(gamma);
  const Vector z = composite_detail::prox_argument(prob, gamma, x);
  const Matrix jf = prob.jac_F(x);
  const Matrix id = Matrix::Identity(prob.n, prob.n);
  RegularityReport rep;
  for (const Matrix& b : enumerate_bouligand(prob.q, 1.0 / gamma, z)) {
    ++rep.elements;
    RegularityWitness w{b, b * (id - jf / gamma) - id, b.transpose() * jf + gamma * (id - b).transpose()};
    w.v_singular = !(linalg::condition_number(w.v) <= kRegularityConditionBound);
    w.scd_singular = !(linalg::condition_number(w.scd_matrix) <= kRegularityConditionBound);
    rep.all_nonsingular = rep.all_nonsingular && !w.v_singular;
    rep.all_scd_nonsingular = rep.all_scd_nonsingular && !w.scd_singular;
    rep.families_agree = rep.families_agree && (w.v_singular == w.scd_singular);
    if (w.v_singular || w.scd_singular) rep.witnesses.push_back(std::move(w));
  }
  return rep;
}

}  // namespace gesolve
