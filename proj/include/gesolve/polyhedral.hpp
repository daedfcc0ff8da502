#pragma once

// Polyhedral convex sets D = {d : A d ≤ b, E d = e} and the cones attached to
// them: tangent cones, critical cones, their faces, and the Bouligand
// subdifferential of the Euclidean projection onto D.

#include "gesolve/core.hpp"
#include "gesolve/qp.hpp"

#include <utility>

namespace gesolve {

/// H-representation of a closed convex polyhedral set. Construction projects
/// the origin onto the set, so an instance is always nonempty.
class PolyhedralSet {
 public:
  PolyhedralSet(Matrix ineq_matrix, Vector ineq_rhs, Matrix eq_matrix, Vector eq_rhs)
      : ineq_matrix_(std::move(ineq_matrix)),
        ineq_rhs_(std::move(ineq_rhs)),
        eq_matrix_(std::move(eq_matrix)),
        eq_rhs_(std::move(eq_rhs)) {
    const Eigen::Index s = std::max(ineq_matrix_.cols(), eq_matrix_.cols());
    if (s <= 0) throw Error(ErrorCode::InvalidArgument, "polyhedral set needs a positive dimension");
    if (ineq_matrix_.rows() == 0) ineq_matrix_.resize(0, s);
    if (eq_matrix_.rows() == 0) eq_matrix_.resize(0, s);
    if (ineq_matrix_.cols() != s || eq_matrix_.cols() != s || ineq_rhs_.size() != ineq_matrix_.rows() ||
        eq_rhs_.size() != eq_matrix_.rows()) {
      throw Error(ErrorCode::ShapeMismatch, "polyhedral set data dimensions disagree");
    }
    if (!ineq_matrix_.allFinite() || !ineq_rhs_.allFinite() || !eq_matrix_.allFinite() || !eq_rhs_.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "polyhedral set data must be finite");
    }
    for (Eigen::Index i = 0; i < ineq_matrix_.rows(); ++i) {
      if (ineq_matrix_.row(i).norm() == 0.0)
        throw Error(ErrorCode::InvalidArgument, "inequality row " + std::to_string(i) + " is zero");
    }
    // nonemptiness: QPInfeasible propagates
    (void)solve_ldqp(ldqp_for(Vector::Zero(s)));
  }

  /// Nonnegative orthant ℝˢ₊.
  static PolyhedralSet orthant(Eigen::Index s) {
    return {-Matrix::Identity(s, s), Vector::Zero(s), Matrix(0, s), Vector(0)};
  }

  static PolyhedralSet box(const Vector& lower, const Vector& upper) {
    const Eigen::Index s = lower.size();
    Matrix a(2 * s, s);
    Vector b(2 * s);
    a << -Matrix::Identity(s, s), Matrix::Identity(s, s);
    b << -lower, upper;
    return {a, b, Matrix(0, s), Vector(0)};
  }

  static PolyhedralSet whole_space(Eigen::Index s) { return {Matrix(0, s), Vector(0), Matrix(0, s), Vector(0)}; }

  [[nodiscard]] Eigen::Index dim() const { return ineq_matrix_.cols(); }
  [[nodiscard]] const Matrix& ineq_matrix() const { return ineq_matrix_; }
  [[nodiscard]] const Vector& ineq_rhs() const { return ineq_rhs_; }
  [[nodiscard]] const Matrix& eq_matrix() const { return eq_matrix_; }
  [[nodiscard]] const Vector& eq_rhs() const { return eq_rhs_; }

  [[nodiscard]] static double feasibility_tolerance(const Vector& d) { return 1e-9 * (1.0 + d.norm()); }
  [[nodiscard]] static double activity_tolerance(const Vector& d) { return 1e-9 * (1.0 + d.norm()); }

  [[nodiscard]] bool contains(const Vector& d) const {
    if (d.size() != dim()) return false;
    const double tol = feasibility_tolerance(d);
    for (Eigen::Index i = 0; i < ineq_matrix_.rows(); ++i)
      if (ineq_matrix_.row(i).dot(d) - ineq_rhs_(i) > tol) return false;
    for (Eigen::Index j = 0; j < eq_matrix_.rows(); ++j)
      if (std::abs(eq_matrix_.row(j).dot(d) - eq_rhs_(j)) > tol) return false;
    return true;
  }

  /// Inequality rows with |aᵢ·d − bᵢ| ≤ tol_active.
  [[nodiscard]] IndexSet active_rows(const Vector& d) const {
    IndexSet rows;
    const double tol = activity_tolerance(d);
    for (Eigen::Index i = 0; i < ineq_matrix_.rows(); ++i)
      if (std::abs(ineq_matrix_.row(i).dot(d) - ineq_rhs_(i)) <= tol) rows.push_back(static_cast<int>(i));
    return rows;
  }

  /// ½‖d − y‖² over D written as a least-distance QP in d.
  [[nodiscard]] LDQP ldqp_for(const Vector& y) const { return {-y, ineq_matrix_, ineq_rhs_, eq_matrix_, eq_rhs_}; }

  void require_member(const Vector& d) const {
    if (d.size() != dim()) throw Error(ErrorCode::ShapeMismatch, "point dimension differs from the set");
    if (!contains(d)) throw Error(ErrorCode::PointNotInSet, "point violates the polyhedral constraints");
  }

 private:
  Matrix ineq_matrix_;
  Vector ineq_rhs_;
  Matrix eq_matrix_;
  Vector eq_rhs_;
};

/// Polyhedral cone {h : C h ≤ 0, E h = 0}.
struct PolyCone {
  Matrix ineq_matrix;
  Matrix eq_matrix;

  [[nodiscard]] Eigen::Index dim() const { return std::max(ineq_matrix.cols(), eq_matrix.cols()); }

  [[nodiscard]] bool contains(const Vector& h, double tol = 1e-9) const {
    const double scale = tol * (1.0 + h.norm());
    for (Eigen::Index i = 0; i < ineq_matrix.rows(); ++i)
      if (ineq_matrix.row(i).dot(h) > scale * std::max(1.0, ineq_matrix.row(i).norm())) return false;
    for (Eigen::Index j = 0; j < eq_matrix.rows(); ++j)
      if (std::abs(eq_matrix.row(j).dot(h)) > scale * std::max(1.0, eq_matrix.row(j).norm())) return false;
    return true;
  }
};

/// A face of a PolyCone: the inequality rows tight on it, an orthonormal basis
/// of its linear span, and a point of its relative interior.
struct FaceBasis {
  IndexSet tight_rows;
  Matrix span_basis;
  Vector witness;
};

struct Projection {
  Vector point;
  Vector multiplier;  // [μ (ineq rows); ν (eq rows)]
  IndexSet active;
};

inline Projection project(const PolyhedralSet& set, const Vector& y) {
  if (y.size() != set.dim()) throw Error(ErrorCode::ShapeMismatch, "projection point dimension differs from the set");
  const QPResult qp = solve_ldqp(set.ldqp_for(y));
  Vector mult(qp.ineq_multiplier.size() + qp.eq_multiplier.size());
  mult << qp.ineq_multiplier, qp.eq_multiplier;
  return {qp.u, mult, qp.active};
}

inline Matrix rows_of(const Matrix& m, const IndexSet& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(rows[k]);
  return out;
}

inline Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), std::max(top.cols(), bottom.cols()));
  if (top.rows() > 0) out.topRows(top.rows()) = top;
  if (bottom.rows() > 0) out.bottomRows(bottom.rows()) = bottom;
  return out;
}

/// T_D(d) = {h : aᵢ·h ≤ 0 for active i, E h = 0}.
inline PolyCone tangent_cone(const PolyhedralSet& set, const Vector& d) {
  set.require_member(d);
  return {rows_of(set.ineq_matrix(), set.active_rows(d)), set.eq_matrix()};
}

namespace poly_detail {
inline linalg::RangeSplit normal_split(const PolyhedralSet& set, const Vector& d) {
  set.require_member(d);
  const Matrix normals = stack_rows(rows_of(set.ineq_matrix(), set.active_rows(d)), set.eq_matrix());
  return linalg::split_range(normals.transpose());
}
}  // namespace poly_detail

/// Orthonormal basis of span N_D(d); may have zero columns.
inline Matrix span_normal_basis(const PolyhedralSet& set, const Vector& d) {
  return poly_detail::normal_split(set, d).range;
}

/// Orthonormal basis of lin T_D(d), the orthogonal complement of span N_D(d).
inline Matrix lin_tangent_basis(const PolyhedralSet& set, const Vector& d) {
  return poly_detail::normal_split(set, d).complement;
}

/// True when lam ∈ N_D(d), tested through Π_D(d + lam) = d.
inline bool is_normal(const PolyhedralSet& set, const Vector& d, const Vector& lam) {
  const Vector back = project(set, d + lam).point;
  return (back - d).norm() <= 1e-8 * (1.0 + d.norm() + lam.norm());
}

/// 𝒦_D(d, lam) = T_D(d) ∩ [lam]^⊥.
inline PolyCone critical_cone(const PolyhedralSet& set, const Vector& d, const Vector& lam) {
  PolyCone cone = tangent_cone(set, d);
  if (lam.size() != set.dim()) throw Error(ErrorCode::ShapeMismatch, "normal vector dimension differs from the set");
  if (!is_normal(set, d, lam)) throw Error(ErrorCode::NotANormal, "vector is not in the normal cone at the point");
  if (lam.norm() > 0.0) cone.eq_matrix = stack_rows(cone.eq_matrix, lam.transpose());
  return cone;
}

inline constexpr int kMaxFaceRows = 12;

namespace poly_detail {

/// min ½‖h‖² s.t. C_tight h = 0, E h = 0, C_j h ≤ −margin_j‖C_j‖ for j in `strict`.
inline std::optional<Vector> margin_point(const PolyCone& cone, const IndexSet& tight, const IndexSet& strict,
                                          const IndexSet& relaxed) {
  const Eigen::Index n = cone.dim();
  const Eigen::Index rows = static_cast<Eigen::Index>(strict.size() + relaxed.size());
  Matrix a(rows, n);
  Vector b(rows);
  Eigen::Index k = 0;
  for (int j : strict) {
    a.row(k) = cone.ineq_matrix.row(j);
    b(k++) = -cone.ineq_matrix.row(j).norm();
  }
  for (int j : relaxed) {
    a.row(k) = cone.ineq_matrix.row(j);
    b(k++) = 0.0;
  }
  const Matrix eq = stack_rows(rows_of(cone.ineq_matrix, tight), cone.eq_matrix);
  try {
    return solve_ldqp({Vector::Zero(n), a, b, eq.rows() ? eq : Matrix(0, n), Vector::Zero(eq.rows())}).u;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::QPInfeasible) return std::nullopt;
    throw;
  }
}

/// Tight closure of a subset: rows that vanish on every point of
/// {C_S h = 0, C h ≤ 0, E h = 0}.
inline IndexSet tight_closure(const PolyCone& cone, const IndexSet& seed) {
  const int m = static_cast<int>(cone.ineq_matrix.rows());
  std::vector<bool> in_seed(static_cast<std::size_t>(m), false);
  for (int i : seed) in_seed[static_cast<std::size_t>(i)] = true;
  std::vector<bool> tight(in_seed);
  for (int j = 0; j < m; ++j) {
    if (in_seed[static_cast<std::size_t>(j)]) continue;
    IndexSet others;
    for (int k = 0; k < m; ++k)
      if (k != j && !in_seed[static_cast<std::size_t>(k)]) others.push_back(k);
    if (!margin_point(cone, seed, {j}, others)) tight[static_cast<std::size_t>(j)] = true;
  }
  IndexSet out;
  for (int j = 0; j < m; ++j)
    if (tight[static_cast<std::size_t>(j)]) out.push_back(j);
  return out;
}

}  // namespace poly_detail

/// Enumerates all faces of a polyhedral cone by tightening subsets of its
/// inequality rows. Throws TooManyRows above kMaxFaceRows rows.
inline std::vector<FaceBasis> enumerate_faces(const PolyCone& cone) {
  const int m = static_cast<int>(cone.ineq_matrix.rows());
  if (m > kMaxFaceRows) {
    throw Error(ErrorCode::TooManyRows, "face enumeration limited to " + std::to_string(kMaxFaceRows) + " rows");
  }
  const Eigen::Index n = cone.dim();
  std::vector<FaceBasis> faces;
  std::vector<IndexSet> seen_closures;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    IndexSet seed;
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i)) seed.push_back(i);
    const IndexSet closure = poly_detail::tight_closure(cone, seed);
    if (std::find(seen_closures.begin(), seen_closures.end(), closure) != seen_closures.end()) continue;
    seen_closures.push_back(closure);

    IndexSet strict;
    for (int j = 0; j < m; ++j)
      if (!std::binary_search(closure.begin(), closure.end(), j)) strict.push_back(j);
    auto witness = poly_detail::margin_point(cone, closure, strict, {});
    if (!witness) continue;  // cannot happen for a correct closure
    const Matrix tight_rows = stack_rows(rows_of(cone.ineq_matrix, closure), cone.eq_matrix);
    Matrix span = tight_rows.rows() ? linalg::kernel_basis(tight_rows) : Matrix(Matrix::Identity(n, n));

    const bool duplicate = std::any_of(faces.begin(), faces.end(), [&](const FaceBasis& f) {
      return linalg::subspace_distance(f.span_basis, span) < 1e-8;
    });
    if (duplicate) continue;
    faces.push_back({closure, std::move(span), std::move(*witness)});
  }
  return faces;
}

/// ∂_B Π_D(mu): orthogonal projectors onto the spans of the faces of the
/// critical cone 𝒦_D(Π_D(mu), mu − Π_D(mu)).
inline std::vector<Matrix> bouligand_projection_elements(const PolyhedralSet& set, const Vector& mu) {
  const Vector point = project(set, mu).point;
  const PolyCone cone = critical_cone(set, point, mu - point);
  std::vector<Matrix> elements;
  for (const FaceBasis& face : enumerate_faces(cone)) {
    Matrix p = linalg::projector(face.span_basis);
    if (face.span_basis.cols() == 0) p = Matrix::Zero(set.dim(), set.dim());
    const bool duplicate =
        std::any_of(elements.begin(), elements.end(), [&](const Matrix& e) { return (e - p).norm() < 1e-8; });
    if (!duplicate) elements.push_back(std::move(p));
  }
  return elements;
}

}  // namespace gesolve
