#pragma once

// Dense least-distance QP
//
//   minimize ½‖u‖² + ⟨c, u⟩   s.t.  A u ≤ b,  E u = e
//
// solved with a dual active-set method (Goldfarb–Idnani specialised to an
// identity Hessian). The method starts from the unconstrained minimiser,
// adds violated constraints one at a time and never needs a primal feasible
// start; an empty feasible set is detected when a violated constraint cannot
// be reached by any multiplier step.

#include "gesolve/core.hpp"

namespace gesolve {

struct LDQP {
  Vector linear_term;   // c
  Matrix ineq_matrix;   // A (m x n)
  Vector ineq_rhs;      // b
  Matrix eq_matrix;     // E (p x n)
  Vector eq_rhs;        // e

  [[nodiscard]] Eigen::Index dim() const { return linear_term.size(); }

  static LDQP unconstrained(const Vector& c) {
    return {c, Matrix(0, c.size()), Vector(0), Matrix(0, c.size()), Vector(0)};
  }
};

struct QPResult {
  Vector u;
  Vector ineq_multiplier;
  Vector eq_multiplier;
  IndexSet active;  // active inequality rows at termination
  int iterations = 0;
  /// Primal objective after each added constraint (dual ascent is monotone).
  std::vector<double> objective_trace;
};

namespace qp_detail {

inline double objective(const Vector& c, const Vector& u) { return 0.5 * u.squaredNorm() + c.dot(u); }

/// Orthogonal decomposition of the active normals: Nᵀ = Q₁R.
struct ActiveFactor {
  Matrix q1;
  Matrix r;

  explicit ActiveFactor(const Matrix& normals_t) {
    const Eigen::Index k = normals_t.cols();
    if (k == 0) {
      q1 = Matrix(normals_t.rows(), 0);
      r = Matrix(0, 0);
      return;
    }
    Eigen::HouseholderQR<Matrix> qr(normals_t);
    q1 = qr.householderQ() * Matrix::Identity(normals_t.rows(), k);
    r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  }

  // z = (I - Q₁Q₁ᵀ) a,   rcoef = R⁻¹ Q₁ᵀ a
  void decompose(const Vector& a, Vector& z, Vector& rcoef) const {
    if (q1.cols() == 0) {
      z = a;
      rcoef = Vector(0);
      return;
    }
    const Vector qa = q1.transpose() * a;
    z = a - q1 * qa;
    rcoef = r.triangularView<Eigen::Upper>().solve(qa);
  }
};

}  // namespace qp_detail

/// Solves the least-distance QP. Throws Error{QPInfeasible} for an empty
/// feasible set and Error{MaxPivots} when the pivot budget is exhausted.
inline QPResult solve_ldqp(const LDQP& problem) {
  const Eigen::Index n = problem.dim();
  const Eigen::Index m = problem.ineq_matrix.rows();
  const Eigen::Index p = problem.eq_matrix.rows();
  if (problem.ineq_matrix.cols() != n || problem.eq_matrix.cols() != n ||
      problem.ineq_rhs.size() != m || problem.eq_rhs.size() != p) {
    throw Error(ErrorCode::ShapeMismatch, "LDQP data dimensions disagree");
  }
  if (!problem.linear_term.allFinite() || !problem.ineq_matrix.allFinite() ||
      !problem.ineq_rhs.allFinite() || !problem.eq_matrix.allFinite() || !problem.eq_rhs.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "LDQP data must be finite");
  }

  // Constraint ids: [0, p) equalities, [p, p+m) inequalities.
  auto row = [&](Eigen::Index id) -> Vector {
    return id < p ? Vector(problem.eq_matrix.row(id).transpose())
                  : Vector(problem.ineq_matrix.row(id - p).transpose());
  };
  auto rhs = [&](Eigen::Index id) { return id < p ? problem.eq_rhs(id) : problem.ineq_rhs(id - p); };

  QPResult result;
  Vector u = -problem.linear_term;
  std::vector<Eigen::Index> active_ids;
  std::vector<double> active_mult;

  auto factor = [&]() {
    Matrix nt(n, static_cast<Eigen::Index>(active_ids.size()));
    for (std::size_t j = 0; j < active_ids.size(); ++j) nt.col(static_cast<Eigen::Index>(j)) = row(active_ids[j]);
    return qp_detail::ActiveFactor(nt);
  };
  auto feas_tol = [&](const Vector& a, double b) { return 1e-11 * (1.0 + std::abs(b) + a.norm() * u.norm()); };
  constexpr double kDependent = 1e-10;

  const int max_pivots = 50 * static_cast<int>(n + m + p + 1);
  int pivots = 0;
  Vector z;
  Vector rcoef;

  for (Eigen::Index id = 0; id < p; ++id) {
    const Vector a = row(id);
    const auto f = factor();
    f.decompose(a, z, rcoef);
    const double violation = a.dot(u) - rhs(id);
    if (z.norm() <= kDependent * std::max(1.0, a.norm())) {
      if (std::abs(violation) <= 1e-9 * (1.0 + std::abs(rhs(id)) + a.norm() * u.norm())) continue;
      throw Error(ErrorCode::QPInfeasible, "inconsistent equality constraints");
    }
    const double t = violation / z.squaredNorm();
    u -= t * z;
    for (std::size_t j = 0; j < active_mult.size(); ++j) active_mult[j] -= t * rcoef(static_cast<Eigen::Index>(j));
    active_ids.push_back(id);
    active_mult.push_back(t);
    ++pivots;
  }
  result.objective_trace.push_back(qp_detail::objective(problem.linear_term, u));

  std::vector<bool> is_active(static_cast<std::size_t>(m), false);
  for (;;) {
    // smallest-index violated inequality
    Eigen::Index entering = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (is_active[static_cast<std::size_t>(i)]) continue;
      const Vector a = problem.ineq_matrix.row(i).transpose();
      if (a.dot(u) - problem.ineq_rhs(i) > feas_tol(a, problem.ineq_rhs(i))) {
        entering = i;
        break;
      }
    }
    if (entering < 0) break;

    const Eigen::Index entering_id = p + entering;
    const Vector a = row(entering_id);
    double entering_mult = 0.0;
    for (;;) {
      if (++pivots > max_pivots) throw Error(ErrorCode::MaxPivots, "active-set pivot budget exhausted");
      const auto f = factor();
      f.decompose(a, z, rcoef);
      const double violation = a.dot(u) - rhs(entering_id);

      // partial step: first active inequality whose multiplier hits zero
      double t_partial = kInf;
      std::size_t blocking = active_ids.size();
      for (std::size_t j = 0; j < active_ids.size(); ++j) {
        if (active_ids[j] < p) continue;
        const double rj = rcoef(static_cast<Eigen::Index>(j));
        if (rj <= 0.0) continue;
        const double ratio = active_mult[j] / rj;
        if (ratio < t_partial ||
            (ratio == t_partial && blocking < active_ids.size() && active_ids[j] < active_ids[blocking])) {
          t_partial = ratio;
          blocking = j;
        }
      }
      const bool reachable = z.norm() > kDependent * std::max(1.0, a.norm());
      const double t_full = reachable ? std::max(violation, 0.0) / z.squaredNorm() : kInf;
      const double t = std::min(t_partial, t_full);
      if (t == kInf) throw Error(ErrorCode::QPInfeasible, "violated constraint cannot be satisfied");

      const double t_step = std::max(t, 0.0);
      if (reachable) u -= t_step * z;
      for (std::size_t j = 0; j < active_mult.size(); ++j) active_mult[j] -= t_step * rcoef(static_cast<Eigen::Index>(j));
      entering_mult += t_step;

      if (t_full <= t_partial) {
        active_ids.push_back(entering_id);
        active_mult.push_back(entering_mult);
        is_active[static_cast<std::size_t>(entering)] = true;
        break;
      }
      is_active[static_cast<std::size_t>(active_ids[blocking] - p)] = false;
      active_ids.erase(active_ids.begin() + static_cast<std::ptrdiff_t>(blocking));
      active_mult.erase(active_mult.begin() + static_cast<std::ptrdiff_t>(blocking));
    }
    result.objective_trace.push_back(qp_detail::objective(problem.linear_term, u));
  }

  // Polish: re-solve the equality-constrained problem on the final active set.
  if (!active_ids.empty()) {
    const auto f = factor();
    Vector target(static_cast<Eigen::Index>(active_ids.size()));
    for (std::size_t j = 0; j < active_ids.size(); ++j) {
      const Eigen::Index id = active_ids[j];
      target(static_cast<Eigen::Index>(j)) = -row(id).dot(problem.linear_term) - rhs(id);
    }
    // (N Nᵀ) μ = -N c - b_A with N Nᵀ = Rᵀ R
    const Vector y = f.r.transpose().triangularView<Eigen::Lower>().solve(target);
    const Vector mult = f.r.triangularView<Eigen::Upper>().solve(y);
    if (mult.allFinite()) {
      Vector polished = -problem.linear_term;
      for (std::size_t j = 0; j < active_ids.size(); ++j)
        polished -= mult(static_cast<Eigen::Index>(j)) * row(active_ids[j]);
      u = polished;
      for (std::size_t j = 0; j < active_ids.size(); ++j) active_mult[j] = mult(static_cast<Eigen::Index>(j));
    }
  }

  result.u = u;
  result.ineq_multiplier = Vector::Zero(m);
  result.eq_multiplier = Vector::Zero(p);
  for (std::size_t j = 0; j < active_ids.size(); ++j) {
    const Eigen::Index id = active_ids[j];
    if (id < p) {
      result.eq_multiplier(id) = active_mult[j];
    } else {
      result.ineq_multiplier(id - p) = std::max(active_mult[j], 0.0);
      result.active.push_back(static_cast<int>(id - p));
    }
  }
  std::sort(result.active.begin(), result.active.end());
  result.iterations = pivots;
  return result;
}

/// Max of stationarity, primal feasibility, complementarity and multiplier
/// sign violations. Zero for an exact KKT point.
inline double kkt_residual(const LDQP& problem, const QPResult& result) {
  const Eigen::Index n = problem.dim();
  if (result.u.size() != n || result.ineq_multiplier.size() != problem.ineq_matrix.rows() ||
      result.eq_multiplier.size() != problem.eq_matrix.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "QPResult does not match the problem");
  }
  const Vector stationarity = result.u + problem.linear_term +
                              problem.ineq_matrix.transpose() * result.ineq_multiplier +
                              problem.eq_matrix.transpose() * result.eq_multiplier;
  double res = stationarity.size() ? stationarity.cwiseAbs().maxCoeff() : 0.0;
  const Vector slack = problem.ineq_rhs - problem.ineq_matrix * result.u;
  for (Eigen::Index i = 0; i < slack.size(); ++i) {
    res = std::max(res, std::max(-slack(i), 0.0));
    res = std::max(res, std::max(-result.ineq_multiplier(i), 0.0));
    res = std::max(res, std::abs(result.ineq_multiplier(i) * slack(i)));
  }
  if (problem.eq_matrix.rows() > 0) {
    res = std::max(res, (problem.eq_matrix * result.u - problem.eq_rhs).cwiseAbs().maxCoeff());
  }
  return res;
}

}  // namespace gesolve
