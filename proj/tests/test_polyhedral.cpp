#include "gesolve/checks.hpp"
#include "gesolve/polyhedral.hpp"

#include "test_support.hpp"

using namespace gesolve;
using namespace gesolve::testing;

namespace {

PolyhedralSet unit_box(Eigen::Index s) { return PolyhedralSet::box(Vector::Zero(s), Vector::Ones(s)); }

/// Grid oracle for a tangent (or critical) cone: h is in the cone iff d + t·h
/// stays in D for a small t (and is orthogonal to lam, when given).
void expect_cone_matches_grid(const PolyhedralSet& set, const Vector& d, const PolyCone& cone,
                              const Vector& lam = Vector()) {
  ASSERT_EQ(d.size(), 2);
  for (double a = -1.0; a <= 1.0; a += 0.25) {
    for (double b = -1.0; b <= 1.0; b += 0.25) {
      const Vector h = vec({a, b});
      bool inside = set.contains(d + 1e-6 * h);
      if (lam.size()) inside = inside && std::abs(lam.dot(h)) <= 1e-12;
      EXPECT_EQ(cone.contains(h), inside) << "h = " << h.transpose();
    }
  }
}

PolyhedralSet random_set(Rng& rng, Eigen::Index s, Eigen::Index m, bool with_eq) {
  const Matrix a = gaussian_matrix(rng, m, s);
  const Vector anchor = gaussian_vector(rng, s);
  Vector b = a * anchor;
  for (Eigen::Index i = 0; i < m; ++i) b(i) += uniform(rng, 0.0, 1.0);
  Matrix e(0, s);
  Vector f(0);
  if (with_eq && s > 1) {
    e = gaussian_matrix(rng, 1, s);
    f = e * anchor;
  }
  return PolyhedralSet(a, b, e, f);
}

/// Is v a nonnegative combination of the rows of a? Subset-enumeration NNLS.
bool in_generated_cone(const Matrix& a, const Vector& v, double tol) {
  const Eigen::Index m = a.rows();
  if (v.norm() <= tol) return true;
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < m; ++i)
      if (mask & (1u << i)) rows.push_back(i);
    Matrix g(a.cols(), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) g.col(static_cast<Eigen::Index>(k)) = a.row(rows[k]).transpose();
    const Vector w = g.completeOrthogonalDecomposition().solve(v);
    if (w.minCoeff() >= -tol && (g * w - v).norm() <= tol) return true;
  }
  return false;
}

}  // namespace

TEST(PolyhedralSet, RejectsBadData) {
  EXPECT_THROW(PolyhedralSet(mat({{0, 0}}), vec({1}), Matrix(0, 2), Vector(0)), Error);
  EXPECT_THROW(PolyhedralSet(mat({{1, 0}}), vec({1, 2}), Matrix(0, 2), Vector(0)), Error);
  EXPECT_THROW(PolyhedralSet(mat({{1, kNaN}}), vec({1}), Matrix(0, 2), Vector(0)), Error);
  try {
    PolyhedralSet(mat({{1}, {-1}}), vec({-1, -1}), Matrix(0, 1), Vector(0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::QPInfeasible);
  }
}

TEST(Project, OrthantExampleMatchesActivityEnumeration) {
  const PolyhedralSet d = PolyhedralSet::orthant(2);
  const Projection p = project(d, vec({1, -1}));
  const auto oracle = qp_oracle(d.ldqp_for(vec({1, -1})));
  ASSERT_TRUE(oracle);
  EXPECT_MATRIX_NEAR(p.point, oracle->u, 1e-14);
  EXPECT_MATRIX_NEAR(p.point, vec({1, 0}), 1e-14);
  EXPECT_MATRIX_NEAR(p.multiplier, vec({0, 1}), 1e-14);
}

TEST(Project, FeasiblePointIsFixed) {
  const Projection p = project(unit_box(3), vec({0.2, 0.5, 1.0}));
  EXPECT_MATRIX_NEAR(p.point, vec({0.2, 0.5, 1.0}), 0.0);
  EXPECT_MATRIX_NEAR(p.multiplier, Vector::Zero(6), 0.0);
}

TEST(Project, BoxMatchesClamp) {
  Rng rng(3);
  const PolyhedralSet box = PolyhedralSet::box(vec({-1, 0, 2}), vec({1, 0.5, 3}));
  EXPECT_MATRIX_NEAR(project(unit_box(2), vec({1.5, 0.5})).point, vec({1, 0.5}), 1e-15);
  for (int k = 0; k < 100; ++k) {
    const Vector y = 3.0 * gaussian_vector(rng, 3);
    const Vector clamp = y.cwiseMax(vec({-1, 0, 2})).cwiseMin(vec({1, 0.5, 3}));
    EXPECT_MATRIX_NEAR(project(box, y).point, clamp, 1e-14);
  }
}

TEST(Project, KktResidualOnRandomSets) {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index s = uniform_int(rng, 1, 5);
    const PolyhedralSet set = random_set(rng, s, uniform_int(rng, 0, 6), trial % 3 == 0);
    const Vector y = 2.0 * gaussian_vector(rng, s);
    const LDQP qp = set.ldqp_for(y);
    const QPResult r = solve_ldqp(qp);
    EXPECT_LE(kkt_residual(qp, r), 1e-10 * (1.0 + y.norm())) << "trial " << trial;
  }
}

TEST(Project, FirmlyNonexpansive) {
  Rng rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index s = uniform_int(rng, 1, 5);
    const PolyhedralSet set = random_set(rng, s, uniform_int(rng, 1, 6), false);
    const Vector y1 = 2.0 * gaussian_vector(rng, s);
    const Vector y2 = 2.0 * gaussian_vector(rng, s);
    const Vector dp = project(set, y1).point - project(set, y2).point;
    EXPECT_LE(dp.squaredNorm(), dp.dot(y1 - y2) + 1e-12) << "trial " << trial;
  }
}

TEST(Project, MoreauDecompositionForCones) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index s = uniform_int(rng, 1, 4);
    const Eigen::Index m = uniform_int(rng, 1, 4);
    const Matrix a = gaussian_matrix(rng, m, s);
    const PolyhedralSet cone(a, Vector::Zero(m), Matrix(0, s), Vector(0));
    const Vector y = gaussian_vector(rng, s);
    const Vector p = project(cone, y).point;
    const Vector polar_part = y - p;
    // the polar of {h : A h ≤ 0} is the cone generated by the rows of A
    EXPECT_TRUE(in_generated_cone(a, polar_part, 1e-9)) << "trial " << trial;
    EXPECT_NEAR(p.dot(polar_part), 0.0, 1e-10);
  }
}

TEST(TangentCone, Examples) {
  const PolyhedralSet orthant = PolyhedralSet::orthant(2);
  const PolyCone t = tangent_cone(orthant, vec({0, 2}));
  EXPECT_EQ(t.ineq_matrix.rows(), 1);
  expect_cone_matches_grid(orthant, vec({0, 2}), t);

  const PolyCone interior = tangent_cone(unit_box(2), vec({0.5, 0.5}));
  EXPECT_EQ(interior.ineq_matrix.rows(), 0);
  expect_cone_matches_grid(unit_box(2), vec({0.5, 0.5}), interior);

  const PolyCone corner = tangent_cone(unit_box(2), vec({0, 0}));
  expect_cone_matches_grid(unit_box(2), vec({0, 0}), corner);
  EXPECT_TRUE(corner.contains(vec({1, 2})));
  EXPECT_FALSE(corner.contains(vec({-0.1, 2})));
}

TEST(TangentCone, PointOutsideIsRejected) {
  try {
    (void)tangent_cone(PolyhedralSet::orthant(2), vec({-1, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PointNotInSet);
  }
}

TEST(NormalBases, Examples) {
  EXPECT_EQ(span_normal_basis(PolyhedralSet::orthant(1), vec({2})).cols(), 0);
  EXPECT_EQ(span_normal_basis(PolyhedralSet::orthant(1), vec({2})).rows(), 1);

  const Matrix w = span_normal_basis(PolyhedralSet::orthant(2), vec({0, 1}));
  ASSERT_EQ(w.cols(), 1);
  EXPECT_NEAR(std::abs(w(0, 0)), 1.0, 1e-15);
  EXPECT_NEAR(w(1, 0), 0.0, 1e-15);
  const Matrix l = lin_tangent_basis(PolyhedralSet::orthant(2), vec({0, 1}));
  ASSERT_EQ(l.cols(), 1);
  EXPECT_NEAR(std::abs(l(1, 0)), 1.0, 1e-15);

  const PolyhedralSet line(Matrix(0, 2), Vector(0), mat({{1, 1}}), vec({1}));
  const Matrix wl = span_normal_basis(line, vec({0.3, 0.7}));
  ASSERT_EQ(wl.cols(), 1);
  EXPECT_NEAR(std::abs(wl(0, 0)), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(wl(0, 0), wl(1, 0), 1e-15);

  EXPECT_EQ(lin_tangent_basis(unit_box(3), vec({0.5, 0.5, 0.5})).cols(), 3);
  const PolyhedralSet origin(Matrix(0, 1), Vector(0), mat({{1}}), vec({0}));
  EXPECT_EQ(lin_tangent_basis(origin, vec({0})).cols(), 0);
}

TEST(NormalBases, ComplementaryOnRandomPoints) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index s = uniform_int(rng, 1, 5);
    const PolyhedralSet set = random_set(rng, s, uniform_int(rng, 1, 6), trial % 4 == 0);
    // project a far point to land on a face
    const Vector d = project(set, 3.0 * gaussian_vector(rng, s)).point;
    const Matrix w = span_normal_basis(set, d);
    const Matrix l = lin_tangent_basis(set, d);
    EXPECT_EQ(w.cols() + l.cols(), s);
    EXPECT_LE(max_abs(w.transpose() * l), 1e-12);
  }
}

TEST(CriticalCone, Examples) {
  const PolyCone same = critical_cone(unit_box(2), vec({0, 0.5}), vec({0, 0}));
  EXPECT_EQ(same.eq_matrix.rows(), 0);
  EXPECT_EQ(same.ineq_matrix.rows(), 1);

  const PolyCone k1 = critical_cone(unit_box(2), vec({0, 0.5}), vec({-1, 0}));
  expect_cone_matches_grid(unit_box(2), vec({0, 0.5}), k1, vec({-1, 0}));
  EXPECT_TRUE(k1.contains(vec({0, -3})));
  EXPECT_FALSE(k1.contains(vec({0.1, 0})));

  const PolyCone k2 = critical_cone(PolyhedralSet::orthant(2), vec({0, 0}), vec({0, -1}));
  expect_cone_matches_grid(PolyhedralSet::orthant(2), vec({0, 0}), k2, vec({0, -1}));
  EXPECT_TRUE(k2.contains(vec({2, 0})));
  EXPECT_FALSE(k2.contains(vec({-2, 0})));
}

TEST(CriticalCone, RejectsNonNormal) {
  try {
    (void)critical_cone(PolyhedralSet::orthant(2), vec({0, 1}), vec({0, -1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotANormal);
  }
}

TEST(EnumerateFaces, Examples) {
  // ray {(t, 0) : t ≥ 0}
  const PolyCone ray{mat({{-1, 0}}), mat({{0, 1}})};
  const auto ray_faces = enumerate_faces(ray);
  ASSERT_EQ(ray_faces.size(), 2u);
  std::vector<Eigen::Index> dims;
  for (const auto& f : ray_faces) dims.push_back(f.span_basis.cols());
  std::sort(dims.begin(), dims.end());
  EXPECT_EQ(dims, (std::vector<Eigen::Index>{0, 1}));

  const PolyCone full{Matrix(0, 2), Matrix(0, 2)};
  const auto full_faces = enumerate_faces(full);
  ASSERT_EQ(full_faces.size(), 1u);
  EXPECT_EQ(full_faces[0].span_basis.cols(), 2);

  const PolyCone quadrant{-Matrix::Identity(2, 2), Matrix(0, 2)};
  const auto q_faces = enumerate_faces(quadrant);
  EXPECT_EQ(q_faces.size(), 4u);
}

TEST(EnumerateFaces, RedundantRowsCollapse) {
  // duplicated and implied rows: {h₁ ≤ 0, 2h₁ ≤ 0, h₁ + h₂ ≤ 0, h₂ ≤ 0} has the faces of ℝ²₋
  const PolyCone cone{mat({{1, 0}, {2, 0}, {1, 1}, {0, 1}}), Matrix(0, 2)};
  EXPECT_EQ(enumerate_faces(cone).size(), 4u);
}

TEST(EnumerateFaces, BasesAndWitnessesAreValid) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = uniform_int(rng, 1, 4);
    const PolyCone cone{gaussian_matrix(rng, uniform_int(rng, 0, 5), n),
                        trial % 3 == 0 ? gaussian_matrix(rng, 1, n) : Matrix(0, n)};
    const auto faces = enumerate_faces(cone);
    ASSERT_FALSE(faces.empty());
    for (const auto& f : faces) {
      const Eigen::Index r = f.span_basis.cols();
      EXPECT_MATRIX_NEAR(f.span_basis.transpose() * f.span_basis, Matrix::Identity(r, r), 1e-12);
      for (Eigen::Index j = 0; j < cone.ineq_matrix.rows(); ++j) {
        const double v = cone.ineq_matrix.row(j).dot(f.witness);
        if (std::binary_search(f.tight_rows.begin(), f.tight_rows.end(), static_cast<int>(j))) {
          EXPECT_NEAR(v, 0.0, 1e-9);
        } else {
          EXPECT_LT(v, -1e-6 * cone.ineq_matrix.row(j).norm());
        }
      }
      EXPECT_LE(max_abs(cone.eq_matrix * f.witness), 1e-9);
      // the witness lies in the span of its face
      EXPECT_LE((f.witness - linalg::projector(f.span_basis) * f.witness).norm(), 1e-9 * (1.0 + f.witness.norm()));
    }
  }
}

TEST(EnumerateFaces, GuardsRowCount) {
  const PolyCone big{Matrix::Ones(13, 2), Matrix(0, 2)};
  try {
    (void)enumerate_faces(big);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooManyRows);
  }
}

TEST(BouligandProjection, Examples) {
  const auto e1 = bouligand_projection_elements(PolyhedralSet::orthant(2), vec({0, -1}));
  ASSERT_EQ(e1.size(), 2u);
  const bool has_diag = std::any_of(e1.begin(), e1.end(), [](const Matrix& m) {
    return max_abs(m - mat({{1, 0}, {0, 0}})) < 1e-12;
  });
  const bool has_zero = std::any_of(e1.begin(), e1.end(), [](const Matrix& m) { return max_abs(m) < 1e-12; });
  EXPECT_TRUE(has_diag);
  EXPECT_TRUE(has_zero);

  const auto e2 = bouligand_projection_elements(unit_box(2), vec({0.3, 0.6}));
  ASSERT_EQ(e2.size(), 1u);
  EXPECT_MATRIX_NEAR(e2[0], Matrix::Identity(2, 2), 1e-12);

  const auto e3 = bouligand_projection_elements(PolyhedralSet::orthant(1), vec({0}));
  ASSERT_EQ(e3.size(), 2u);
  std::vector<double> vals{e3[0](0, 0), e3[1](0, 0)};
  std::sort(vals.begin(), vals.end());
  EXPECT_NEAR(vals[0], 0.0, 1e-12);
  EXPECT_NEAR(vals[1], 1.0, 1e-12);
}

TEST(BouligandProjection, ElementsAreOrthogonalProjectors) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index s = uniform_int(rng, 1, 4);
    const PolyhedralSet set = random_set(rng, s, uniform_int(rng, 1, 5), false);
    const Vector mu = 2.0 * gaussian_vector(rng, s);
    for (const Matrix& p : bouligand_projection_elements(set, mu)) {
      EXPECT_MATRIX_NEAR(p, p.transpose(), 1e-12);
      EXPECT_MATRIX_NEAR(p * p, p, 1e-10);
      EXPECT_LE(p.operatorNorm(), 1.0 + 1e-12);
    }
  }
}

TEST(BouligandProjection, MatchesObservedJacobiansOnExamples) {
  // the orthant corner: all four coordinate projectors appear
  const auto corner = projection_face_sampling(PolyhedralSet::orthant(2), vec({0, 0}), 100, 1e-3, 1);
  EXPECT_EQ(corner.elements, 4);
  EXPECT_EQ(corner.unmatched, 0);
  EXPECT_TRUE(corner.all_observed());

  // a wedge with two weakly active rows at 60°
  const PolyhedralSet wedge(mat({{1, 0}, {-0.5, std::sqrt(3.0) / 2.0}}), vec({0, 0}), Matrix(0, 2), Vector(0));
  const auto rep = projection_face_sampling(wedge, vec({0, 0}), 100, 1e-3, 2);
  EXPECT_EQ(rep.elements, 4);
  EXPECT_TRUE(rep.passed());
}

TEST(FdProjectionJacobian, RejectsKinks) {
  EXPECT_FALSE(fd_projection_jacobian(PolyhedralSet::orthant(1), vec({0})).has_value());
  const auto j = fd_projection_jacobian(PolyhedralSet::orthant(2), vec({1, -1}));
  ASSERT_TRUE(j.has_value());
  EXPECT_MATRIX_NEAR(*j, mat({{1, 0}, {0, 0}}), 1e-8);
}
