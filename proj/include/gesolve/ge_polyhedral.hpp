#pragma once

// Generalized equation 0 ∈ F(x) + ∇G(x) N_D(G(x)) with D polyhedral.
//
// Two local Newton methods are provided. Both start every iteration with the
// approximation step (a least-distance QP in the linearized constraint):
//   * ssstar: the semismooth* step, solving the stacked system
//       Zᵀ(ℒ′Δx + ℒ) = 0,  Wᵀ(G + G′Δx − d̂) = 0;
//   * gsemi:  a G-semismooth Newton step V Δx = −û on the solution map
//       S(x) = û, with V = −Π_𝒵 ℒ′ − Π_𝒲.
// With identical W bases the two produce the same Δx.

#include "gesolve/newton.hpp"
#include "gesolve/polyhedral.hpp"

namespace gesolve {

struct PolyhedralGE {
  Eigen::Index n = 0;
  Eigen::Index s = 0;
  std::function<Vector(const Vector&)> F;
  std::function<Matrix(const Vector&)> jac_F;
  std::function<Vector(const Vector&)> G;
  std::function<Matrix(const Vector&)> jac_G;  // s x n
  /// Σᵢ lamᵢ ∇²Gᵢ(x)
  std::function<Matrix(const Vector&, const Vector&)> hess_G_lambda;
  /// d/dx [G′(x) u]; row i is (∇²Gᵢ(x) u)ᵀ
  std::function<Matrix(const Vector&, const Vector&)> djac_G_u;
  PolyhedralSet D;

  /// ℒ_λ(x) = F(x) + ∇G(x) λ
  [[nodiscard]] Vector lagrangian(const Vector& x, const Vector& lam) const {
    return F(x) + jac_G(x).transpose() * lam;
  }
  /// ℒ′_λ(x) = F′(x) + Σ λᵢ∇²Gᵢ(x)
  [[nodiscard]] Matrix lagrangian_jacobian(const Vector& x, const Vector& lam) const {
    return jac_F(x) + hess_G_lambda(x, lam);
  }

  /// Problem with G the identity map.
  static PolyhedralGE with_identity_g(std::function<Vector(const Vector&)> f,
                                      std::function<Matrix(const Vector&)> jf, PolyhedralSet d) {
    const Eigen::Index n = d.dim();
    return {n,
            n,
            std::move(f),
            std::move(jf),
            [](const Vector& x) { return x; },
            [n](const Vector&) { return Matrix(Matrix::Identity(n, n)); },
            [n](const Vector&, const Vector&) { return Matrix(Matrix::Zero(n, n)); },
            [n](const Vector&, const Vector&) { return Matrix(Matrix::Zero(n, n)); },
            std::move(d)};
  }
};

struct ApproxStepOutput {
  Vector u_hat;
  Vector lambda_hat;
  Vector d_hat;
  Vector p_star;  // ℒ_λ̂(x)
  IndexSet active;
};

/// min over unit λ ∈ span N_D(d) of ‖∇G(x)λ‖; +∞ when N_D(d) = {0}.
inline double nondegeneracy_modulus(const PolyhedralGE& prob, const Vector& x, const Vector& d) {
  const Matrix w = span_normal_basis(prob.D, d);
  if (w.cols() == 0) return kInf;
  return linalg::min_singular_value(prob.jac_G(x).transpose() * w);
}

inline constexpr double kDegenerateModulus = 1e-10;

/// The least-distance QP of the approximation step at x, in u.
inline LDQP approximation_qp(const PolyhedralGE& prob, const Vector& x) {
  const Vector gx = prob.G(x);
  const Matrix jg = prob.jac_G(x);
  const PolyhedralSet& d = prob.D;
  return {prob.F(x), d.ineq_matrix() * jg, d.ineq_rhs() - d.ineq_matrix() * gx, d.eq_matrix() * jg,
          d.eq_rhs() - d.eq_matrix() * gx};
}

/// The approximation step at x: û minimizes ½‖u‖² + ⟨F(x),u⟩ subject to
/// G(x) + G′(x)u ∈ D, and λ̂ ∈ N_D(d̂) with û + ℒ_λ̂(x) = 0.
/// Throws QPInfeasible when the linearized constraint is empty and
/// MultiplierAmbiguous when (x, d̂) is degenerate.
inline ApproxStepOutput approximation_step(const PolyhedralGE& prob, const Vector& x) {
  const Vector fx = prob.F(x);
  const Vector gx = prob.G(x);
  const Matrix jg = prob.jac_G(x);
  const PolyhedralSet& d = prob.D;
  const QPResult res = solve_ldqp(approximation_qp(prob, x));

  ApproxStepOutput out;
  out.u_hat = res.u;
  out.lambda_hat = d.ineq_matrix().transpose() * res.ineq_multiplier + d.eq_matrix().transpose() * res.eq_multiplier;
  out.d_hat = gx + jg * res.u;
  out.p_star = fx + jg.transpose() * out.lambda_hat;
  out.active = res.active;

  const double modulus = nondegeneracy_modulus(prob, x, out.d_hat);
  if (modulus <= kDegenerateModulus) {
    throw Error(ErrorCode::MultiplierAmbiguous,
                "linearized constraint is degenerate at d_hat (modulus " + std::to_string(modulus) +
                    "); the multiplier is not determined");
  }
  return out;
}

enum class TsVariant { Exact, DroppedSecondDerivative };

/// Element of 𝒯_S(x) built from a basis W (full column rank) of the
/// orthogonal complement of a face span. `exact` keeps the d/dx[G′(x)û] term.
inline Matrix ts_element_for_basis(const PolyhedralGE& prob, const Vector& x, const Vector& u_hat,
                                   const Vector& lambda_hat, const Matrix& w, TsVariant variant) {
  const Matrix l_prime = prob.lagrangian_jacobian(x, lambda_hat);
  if (w.cols() == 0) return -l_prime;
  const Matrix jg = prob.jac_G(x);
  const Matrix grad_w = jg.transpose() * w;  // ∇G W, n x k
  const Matrix inner = w.transpose() * jg * grad_w;
  Eigen::FullPivLU<Matrix> lu(inner);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw Error(ErrorCode::DegenerateBase, "W^T G' grad G W is singular");
  if (variant == TsVariant::Exact) {
    const Matrix rhs = w.transpose() * (jg * l_prime - (jg + prob.djac_G_u(x, u_hat)));
    return -l_prime + grad_w * lu.solve(rhs);
  }
  const Eigen::Index n = prob.n;
  const Matrix pw = grad_w * lu.solve(grad_w.transpose());  // Π_𝒲 (inner is grad_wᵀ grad_w)
  const Matrix pz = Matrix::Identity(n, n) - pw;
  return -pz * l_prime - pw;
}

/// 𝒯_S element for the face lin T_D(d̂), i.e. W = basis of span N_D(d̂).
inline Matrix ts_element(const PolyhedralGE& prob, const Vector& x, const Vector& u_hat, const Vector& lambda_hat,
                         const Vector& d_hat, TsVariant variant) {
  return ts_element_for_basis(prob, x, u_hat, lambda_hat, span_normal_basis(prob.D, d_hat), variant);
}

struct SsstarStep {
  Vector x_next;
  Vector dx;
  Matrix w;
  Matrix z;
  double condition = kNaN;
  double system_residual = kNaN;
};

/// One semismooth* step from x given the approximation step output at x.
inline SsstarStep ssstar_step(const PolyhedralGE& prob, const Vector& x, const ApproxStepOutput& approx) {
  const Matrix w = span_normal_basis(prob.D, approx.d_hat);
  const Matrix jg = prob.jac_G(x);
  const Matrix wt_jg = w.transpose() * jg;  // k x n
  const Matrix z = w.cols() ? linalg::kernel_basis(wt_jg) : Matrix(Matrix::Identity(prob.n, prob.n));
  if (z.cols() + w.cols() != prob.n) {
    throw Error(ErrorCode::DegenerateBase, "W^T G'(x) does not have full row rank");
  }
  const Matrix l_prime = prob.lagrangian_jacobian(x, approx.lambda_hat);
  Matrix system(prob.n, prob.n);
  Vector rhs(prob.n);
  system << z.transpose() * l_prime, wt_jg;
  rhs << -z.transpose() * approx.p_star, w.transpose() * (approx.d_hat - prob.G(x));
  const auto dx = linalg::lu_solve(system, rhs);
  if (!dx) throw Error(ErrorCode::SingularSystem, "semismooth* Newton system is singular");
  SsstarStep step;
  step.dx = *dx;
  step.x_next = x + *dx;
  step.condition = linalg::condition_number(system);
  step.system_residual = (system * *dx - rhs).norm();
  step.w = w;
  step.z = z;
  return step;
}

/// ssstar iteration map: approximation step followed by the stacked solve.
inline SsstarStep ssstar_iterate(const PolyhedralGE& prob, const Vector& x) {
  return ssstar_step(prob, x, approximation_step(prob, x));
}

enum class PolyAlgorithm { Ssstar, Gsemi };

inline const char* to_string(PolyAlgorithm a) { return a == PolyAlgorithm::Ssstar ? "ssstar" : "gsemi-poly"; }

/// Runs ssstar or gsemi from x0; termination when ‖û‖ ≤ tol_residual.
inline ConvergenceReport solve(const PolyhedralGE& prob, const Vector& x0, PolyAlgorithm algorithm,
                               const NewtonConfig& config, const std::optional<Vector>& reference = std::nullopt) {
  config.validate();
  if (!x0.allFinite() || x0.size() != prob.n) throw Error(ErrorCode::InvalidArgument, "x0 must be finite of size n");
  ConvergenceReport report;

  if (algorithm == PolyAlgorithm::Gsemi) {
    // The residual and the Jacobian selection share one approximation step per iterate.
    std::optional<std::pair<Vector, ApproxStepOutput>> cache;
    auto approx_at = [&](const Vector& x) -> const ApproxStepOutput& {
      if (!cache || cache->first != x) cache.emplace(x, approximation_step(prob, x));
      return cache->second;
    };
    report = run([&](const Vector& x) { return approx_at(x).u_hat; },
                 [&](const Vector& x) {
                   const auto& a = approx_at(x);
                   return ts_element(prob, x, a.u_hat, a.lambda_hat, a.d_hat, TsVariant::DroppedSecondDerivative);
                 },
                 x0, config, reference);
    report.algorithm = to_string(algorithm);
    return report;
  }

  Vector x = x0;
  try {
    for (int k = 0;; ++k) {
      const ApproxStepOutput approx = approximation_step(prob, x);
      const double unorm = approx.u_hat.norm();
      report.iterates.push_back(x);
      report.residual_norms.push_back(unorm);
      if (unorm <= config.tol_residual) {
        report.termination = Termination::ResidualMet;
        break;
      }
      if (k >= config.max_iter) {
        report.termination = Termination::MaxIter;
        break;
      }
      const SsstarStep step = ssstar_step(prob, x, approx);
      StepRecord rec;
      rec.linear_residual = step.system_residual;
      rec.condition = step.condition;
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
    if (report.iterates.empty() || report.iterates.back() != x) {
      report.iterates.push_back(x);
      report.residual_norms.push_back(kNaN);
    }
    report.termination = termination_for(e);
    report.diagnostic = e.what();
  }
  if (reference) attach_reference(report, *reference);
  report.algorithm = to_string(algorithm);
  return report;
}

}  // namespace gesolve
