#pragma once

// Sampling-based invariant checks shared by the CLI check suite and tests.

#include "gesolve/ge_composite.hpp"
#include "gesolve/polyhedral.hpp"

#include <random>

namespace gesolve {

/// Finite-difference Jacobian of Π_D at y, or nullopt when forward and
/// backward differences disagree by more than `consistency` (y is then
/// treated as a nondifferentiability point).
inline std::optional<Matrix> fd_projection_jacobian(const PolyhedralSet& set, const Vector& y, double h = 1e-6,
                                                    double consistency = 1e-6) {
  const Eigen::Index s = y.size();
  const Vector p0 = project(set, y).point;
  Matrix jac(s, s);
  for (Eigen::Index j = 0; j < s; ++j) {
    Vector e = Vector::Zero(s);
    e(j) = h;
    const Vector fwd = (project(set, y + e).point - p0) / h;
    const Vector bwd = (p0 - project(set, y - e).point) / h;
    if ((fwd - bwd).lpNorm<Eigen::Infinity>() > consistency) return std::nullopt;
    jac.col(j) = 0.5 * (fwd + bwd);
  }
  return jac;
}

struct FaceSamplingReport {
  int elements = 0;
  int differentiable_samples = 0;
  int unmatched = 0;
  double worst_mismatch = 0.0;
  std::vector<int> hits;  // per enumerated element

  [[nodiscard]] bool all_observed() const {
    return std::all_of(hits.begin(), hits.end(), [](int h) { return h > 0; });
  }
  [[nodiscard]] bool passed() const { return unmatched == 0 && all_observed(); }
};

/// Samples `samples` differentiable points uniformly on the sphere of the
/// given radius around µ and matches each FD Jacobian of Π_D against the
/// enumerated Bouligand elements (max-abs distance ≤ tol).
inline FaceSamplingReport projection_face_sampling(const PolyhedralSet& set, const Vector& mu, int samples, double radius,
                                    std::uint64_t seed, double tol = 1e-6) {
  const std::vector<Matrix> elements = bouligand_projection_elements(set, mu);
  FaceSamplingReport rep;
  rep.elements = static_cast<int>(elements.size());
  rep.hits.assign(elements.size(), 0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int attempt = 0; attempt < 10 * samples && rep.differentiable_samples < samples; ++attempt) {
    Vector dir(mu.size());
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = normal(rng);
    if (dir.norm() == 0.0) continue;
    const auto jac = fd_projection_jacobian(set, mu + radius * dir.normalized());
    if (!jac) continue;
    ++rep.differentiable_samples;
    double best = kInf;
    std::size_t best_idx = 0;
    for (std::size_t e = 0; e < elements.size(); ++e) {
      const double dist = (*jac - elements[e]).lpNorm<Eigen::Infinity>();
      if (dist < best) {
        best = dist;
        best_idx = e;
      }
    }
    if (best <= tol) {
      ++rep.hits[best_idx];
    } else {
      ++rep.unmatched;
      rep.worst_mismatch = std::max(rep.worst_mismatch, best);
    }
  }
  return rep;
}

/// lhs − rhs of ‖u+x−x̄‖² + ‖F(x̄)−F(x)−γu‖² ≤ max{1,γ²}‖z−z̄‖², z = x − F(x)/γ,
/// with u = u_γ(x) and x̄ a solution. Nonpositive when the inequality holds.
inline double prox_residual_inequality_gap(const CompositeGE& prob, const Vector& x, const Vector& x_bar,
                                           double gamma) {
  const Vector fx = prob.F(x);
  const Vector fbar = prob.F(x_bar);
  const Vector u = residual(prob, gamma, x);
  const Vector z = x - fx / gamma;
  const Vector z_bar = x_bar - fbar / gamma;
  const double lhs = (u + x - x_bar).squaredNorm() + (fbar - fx - gamma * u).squaredNorm();
  return lhs - std::max(1.0, gamma * gamma) * (z - z_bar).squaredNorm();
}

struct ProxPropertyReport {
  int samples = 0;
  int firm_violations = 0;      // ‖P(a)−P(b)‖² > ⟨P(a)−P(b), a−b⟩ + slack
  int element_violations = 0;   // B not symmetric or spectrum outside [0,1]
  int jacobian_mismatches = 0;  // FD Jacobian at a smooth point differs from B

  [[nodiscard]] bool passed() const { return firm_violations == 0 && element_violations == 0 && jacobian_mismatches == 0; }
};

/// Firm nonexpansiveness, symmetric Jacobians with spectrum in [0, 1], and
/// agreement of the selected Bouligand element with an FD Jacobian, all at
/// points drawn from N(center, scale²I).
inline ProxPropertyReport prox_property_check(const ProxFunction& q, double step, const Vector& center, double scale,
                                              int samples, std::uint64_t seed) {
  ProxPropertyReport rep;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Eigen::Index n = q.dim();
  auto draw = [&] {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = center(i) + scale * normal(rng);
    return v;
  };
  for (int k = 0; k < samples; ++k) {
    ++rep.samples;
    const Vector a = draw();
    const Vector b = draw();
    const Vector diff = prox_eval(q, step, a) - prox_eval(q, step, b);
    if (diff.squaredNorm() > diff.dot(a - b) + 1e-12 * (1.0 + (a - b).squaredNorm())) ++rep.firm_violations;

    const Matrix be = bouligand_element(q, step, a);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (be + be.transpose()));
    const bool symmetric = (be - be.transpose()).lpNorm<Eigen::Infinity>() <= 1e-10;
    const bool spectrum = eig.eigenvalues().minCoeff() >= -1e-10 && eig.eigenvalues().maxCoeff() <= 1.0 + 1e-10;
    if (!symmetric || !spectrum) ++rep.element_violations;

    if (kink_count(q, step, a) == 0) {
      const double h = 1e-6;
      Matrix fd(n, n);
      bool smooth = true;
      for (Eigen::Index j = 0; j < n && smooth; ++j) {
        Vector e = Vector::Zero(n);
        e(j) = h;
        const Vector fwd = (prox_eval(q, step, a + e) - prox_eval(q, step, a)) / h;
        const Vector bwd = (prox_eval(q, step, a) - prox_eval(q, step, a - e)) / h;
        smooth = (fwd - bwd).lpNorm<Eigen::Infinity>() <= 1e-6;
        fd.col(j) = 0.5 * (fwd + bwd);
      }
      if (smooth && (fd - be).lpNorm<Eigen::Infinity>() > 1e-6) ++rep.jacobian_mismatches;
    }
  }
  return rep;
}

}  // namespace gesolve
