#pragma once

// Seeded generators of small generalized equations with known solutions.
// Solutions are built forward: pick x̄ (and its multiplier), then back-solve
// the data so that x̄ solves the GE exactly.

#include "gesolve/ge_composite.hpp"
#include "gesolve/ge_polyhedral.hpp"

#include "json.hpp"

#include <random>

namespace gesolve {

struct ProblemSpec {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  Vector known_solution;
  std::optional<Vector> known_multiplier;
};

/// A generated instance in every encoding that applies to it.
struct ProblemInstance {
  std::optional<PolyhedralGE> polyhedral;
  std::optional<CompositeGE> composite;
  ProblemSpec spec;
};

inline const std::vector<std::string>& problem_registry() {
  static const std::vector<std::string> names{"ncp_affine", "box_vi", "l1_quadratic", "nonlinear_g_poly"};
  return names;
}

/// Instances outside the convergence corpus, buildable by name for diagnostics.
inline const std::vector<std::string>& diagnostic_problems() {
  static const std::vector<std::string> names{"degenerate_witness"};
  return names;
}

namespace problems_detail {

using Rng = std::mt19937_64;

inline double param(const nlohmann::json& p, const char* key, double fallback) {
  return p.contains(key) ? p.at(key).get<double>() : fallback;
}
inline int iparam(const nlohmann::json& p, const char* key, int fallback) {
  return p.contains(key) ? p.at(key).get<int>() : fallback;
}
inline std::string sparam(const nlohmann::json& p, const char* key, const std::string& fallback) {
  return p.contains(key) ? p.at(key).get<std::string>() : fallback;
}
inline std::optional<Vector> vparam(const nlohmann::json& p, const char* key) {
  if (!p.contains(key)) return std::nullopt;
  const auto v = p.at(key).get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Matrix gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

/// M = AᵀA + δI with A Gaussian scaled by a_scale/√n.
inline Matrix monotone_matrix(Rng& rng, Eigen::Index n, double a_scale, double delta) {
  const Matrix a = gaussian(rng, n, n) * (a_scale / std::sqrt(static_cast<double>(n)));
  return a.transpose() * a + delta * Matrix::Identity(n, n);
}

inline std::function<Vector(const Vector&)> affine(Matrix m, Vector c) {
  return [m = std::move(m), c = std::move(c)](const Vector& x) -> Vector { return m * x + c; };
}
inline std::function<Matrix(const Vector&)> constant(Matrix m) {
  return [m = std::move(m)](const Vector&) { return m; };
}

/// Per-coordinate activity pattern: 0 = free, 1 = at lower bound, 2 = at upper bound.
inline std::vector<int> pattern_codes(Rng& rng, Eigen::Index n, const std::string& pattern, bool two_sided) {
  std::vector<int> codes(static_cast<std::size_t>(n));
  for (auto& c : codes) {
    if (pattern == "inactive" || pattern == "interior") c = 0;
    else if (pattern == "active") c = 1;
    else if (pattern == "mixed") c = static_cast<int>(rng() % (two_sided ? 3u : 2u));
    else throw Error(ErrorCode::InvalidArgument, "unknown pattern '" + pattern + "'");
  }
  return codes;
}

inline void verify_polyhedral(const PolyhedralGE& prob, const Vector& x_bar) {
  const auto approx = approximation_step(prob, x_bar);
  if (approx.u_hat.norm() > 1e-12 * (1.0 + x_bar.norm()))
    throw Error(ErrorCode::ConstructionFailed, "known solution fails the approximation-step check");
}

inline void verify_composite(const CompositeGE& prob, const Vector& x_bar) {
  if (residual(prob, 1.0, x_bar).norm() > 1e-12 * (1.0 + x_bar.norm()))
    throw Error(ErrorCode::ConstructionFailed, "known solution fails the proximal residual check");
}

inline ProblemInstance make_ncp_like(const nlohmann::json& p, std::uint64_t seed, bool box) {
  Rng rng(seed);
  const auto x_override = vparam(p, "x_bar");
  const Eigen::Index n = x_override ? x_override->size() : iparam(p, "n", 5);
  if (n <= 0) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  const double margin = param(p, "margin", 0.1);
  const double lo = param(p, "lower", -1.0);
  const double hi = param(p, "upper", 1.0);
  if (box && !(hi - lo > 2.0 * margin)) throw Error(ErrorCode::InvalidArgument, "box too narrow for the margin");
  const Matrix m = monotone_matrix(rng, n, param(p, "a_scale", 1.0), param(p, "delta", 1.0));
  const auto codes = pattern_codes(rng, n, sparam(p, "pattern", "mixed"), box);

  Vector x_bar(n);
  Vector f_bar(n);  // F(x̄)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double slack = margin + uniform(rng, 0.0, 1.0);
    const double interior = box ? uniform(rng, lo + margin, hi - margin) : margin + uniform(rng, 0.0, 1.0);
    switch (codes[static_cast<std::size_t>(i)]) {
      case 0: x_bar(i) = interior; f_bar(i) = 0.0; break;
      case 1: x_bar(i) = box ? lo : 0.0; f_bar(i) = slack; break;
      default: x_bar(i) = hi; f_bar(i) = -slack; break;
    }
  }
  if (x_override) {
    x_bar = *x_override;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lower = box ? x_bar(i) == lo : x_bar(i) == 0.0;
      const bool at_upper = box && x_bar(i) == hi;
      if (!box && x_bar(i) < 0.0) throw Error(ErrorCode::InvalidArgument, "x_bar must be nonnegative");
      f_bar(i) = at_lower ? margin + uniform(rng, 0.0, 1.0) : at_upper ? -(margin + uniform(rng, 0.0, 1.0)) : 0.0;
    }
  }
  const Vector c = f_bar - m * x_bar;

  ProblemInstance inst;
  PolyhedralSet d = box ? PolyhedralSet::box(Vector::Constant(n, lo), Vector::Constant(n, hi))
                        : PolyhedralSet::orthant(n);
  inst.polyhedral = PolyhedralGE::with_identity_g(affine(m, c), constant(m), d);
  inst.composite = CompositeGE{n, affine(m, c), constant(m),
                               box ? ProxFunction::box(Vector::Constant(n, lo), Vector::Constant(n, hi))
                                   : ProxFunction::nonneg(n)};
  inst.spec.known_solution = x_bar;
  inst.spec.known_multiplier = Vector(-f_bar);
  verify_polyhedral(*inst.polyhedral, x_bar);
  verify_composite(*inst.composite, x_bar);
  return inst;
}

inline ProblemInstance make_l1_quadratic(const nlohmann::json& p, std::uint64_t seed) {
  Rng rng(seed);
  const auto x_override = vparam(p, "x_bar");
  const Eigen::Index n = x_override ? x_override->size() : iparam(p, "n", 5);
  if (n <= 0) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  const double tau = param(p, "tau", 1.0);
  const double margin = param(p, "margin", 0.1);
  const double support = param(p, "support_fraction", 0.5);
  if (!(tau > margin)) throw Error(ErrorCode::ConstructionFailed, "tau must exceed the margin");
  const Matrix q = monotone_matrix(rng, n, param(p, "a_scale", 1.0), param(p, "delta", 1.0));

  Vector x_bar = Vector::Zero(n);
  Vector g(n);  // F(x̄) ∈ −τ∂‖x̄‖₁
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool on_support = x_override ? (*x_override)(i) != 0.0 : uniform(rng, 0.0, 1.0) < support;
    const double sign = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    const double magnitude = margin + uniform(rng, 0.0, 1.0);
    const double off_value = uniform(rng, -(tau - margin), tau - margin);
    if (on_support) {
      x_bar(i) = x_override ? (*x_override)(i) : sign * magnitude;
      g(i) = -tau * (x_bar(i) > 0.0 ? 1.0 : -1.0);
    } else {
      g(i) = off_value;
    }
  }
  const Vector b = q * x_bar - g;

  ProblemInstance inst;
  inst.composite = CompositeGE{n, affine(q, -b), constant(q), ProxFunction::l1(n, tau)};
  inst.spec.known_solution = x_bar;
  verify_composite(*inst.composite, x_bar);
  return inst;
}

inline ProblemInstance make_nonlinear_g_poly(const nlohmann::json& p, std::uint64_t seed) {
  Rng rng(seed);
  const double kappa = param(p, "kappa", 0.5);
  const double margin = param(p, "margin", 0.1);
  const int active_count = iparam(p, "active_count", 1);
  const double min_modulus = param(p, "min_modulus", 0.5);
  if (active_count < 0 || active_count > 2) throw Error(ErrorCode::InvalidArgument, "active_count must be 0, 1 or 2");
  constexpr Eigen::Index n = 2;

  for (int attempt = 0; attempt < 100; ++attempt) {
    const Matrix l = gaussian(rng, 2, 2);
    const Matrix h_raw = gaussian(rng, 2, 2);
    Matrix h = 0.5 * (h_raw + h_raw.transpose());
    h /= std::max(1.0, h.norm());
    Matrix a = gaussian(rng, 2, 2);
    for (Eigen::Index i = 0; i < 2; ++i) a.row(i).normalize();
    Vector x_bar(2);
    x_bar << uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0);
    const Vector mu_draw = Vector::NullaryExpr(2, [&](Eigen::Index) { return margin + uniform(rng, 0.0, 1.0); });

    if (linalg::min_singular_value(l) < 0.5) continue;
    if (std::abs(a.row(0).dot(a.row(1))) > std::cos(30.0 * M_PI / 180.0)) continue;

    auto g_fn = [l, h, kappa](const Vector& x) -> Vector {
      Vector g = l * x;
      g(0) += 0.5 * kappa * x.dot(h * x);
      return g;
    };
    auto jac_g = [l, h, kappa](const Vector& x) -> Matrix {
      Matrix j = l;
      j.row(0) += (kappa * h * x).transpose();
      return j;
    };
    const Vector g_bar = g_fn(x_bar);
    Vector rhs = a * g_bar;
    Vector mu = Vector::Zero(2);
    for (int i = 0; i < 2; ++i) {
      if (i < active_count) mu(i) = mu_draw(i);
      else rhs(i) += 0.5;
    }
    const Vector lam_bar = a.transpose() * mu;
    const double curvature = std::abs(lam_bar(0)) * kappa * h.norm();
    const Matrix m = monotone_matrix(rng, n, 1.0, 1.0 + curvature);
    const Vector c = -m * x_bar - jac_g(x_bar).transpose() * lam_bar;

    PolyhedralGE prob{n,
                      2,
                      affine(m, c),
                      constant(m),
                      g_fn,
                      jac_g,
                      [h, kappa](const Vector&, const Vector& lam) -> Matrix { return lam(0) * kappa * h; },
                      [h, kappa](const Vector&, const Vector& u) -> Matrix {
                        Matrix d = Matrix::Zero(2, 2);
                        d.row(0) = (kappa * h * u).transpose();
                        return d;
                      },
                      PolyhedralSet(a, rhs, Matrix(0, 2), Vector(0))};
    if (nondegeneracy_modulus(prob, x_bar, g_bar) < min_modulus) continue;

    ProblemInstance inst;
    inst.polyhedral = std::move(prob);
    inst.spec.known_solution = x_bar;
    inst.spec.known_multiplier = lam_bar;
    verify_polyhedral(*inst.polyhedral, x_bar);
    return inst;
  }
  throw Error(ErrorCode::ConstructionFailed, "no nondegenerate instance found in 100 attempts");
}

/// n = 1, G(x) = (x, x), D = ℝ²₊, F(x) = x + 1. x̄ = 0 solves the GE but every
/// λ ≤ 0 with λ₁ + λ₂ = −1 is a multiplier.
inline ProblemInstance make_degenerate_witness() {
  ProblemInstance inst;
  const Matrix two = Matrix::Ones(2, 1);
  inst.polyhedral = PolyhedralGE{1,
                                 2,
                                 affine(Matrix::Ones(1, 1), Vector::Ones(1)),
                                 constant(Matrix::Ones(1, 1)),
                                 [two](const Vector& x) -> Vector { return two * x; },
                                 constant(two),
                                 [](const Vector&, const Vector&) -> Matrix { return Matrix::Zero(1, 1); },
                                 [](const Vector&, const Vector&) -> Matrix { return Matrix::Zero(2, 1); },
                                 PolyhedralSet::orthant(2)};
  inst.spec.known_solution = Vector::Zero(1);
  // the QP at x̄ must return û = 0 even though the multiplier is not unique
  const QPResult qp = solve_ldqp(approximation_qp(*inst.polyhedral, inst.spec.known_solution));
  if (qp.u.norm() > 1e-12) throw Error(ErrorCode::ConstructionFailed, "degenerate witness is not solved by x = 0");
  return inst;
}

}  // namespace problems_detail

/// Builds a registry problem. Throws UnknownName for names outside the
/// registry and ConstructionFailed when the requested structure cannot be met.
inline ProblemInstance make_problem(const std::string& name, const nlohmann::json& params, std::uint64_t seed) {
  const nlohmann::json p = params.is_null() ? nlohmann::json::object() : params;
  ProblemInstance inst;
  try {
    if (name == "ncp_affine") inst = problems_detail::make_ncp_like(p, seed, false);
    else if (name == "box_vi") inst = problems_detail::make_ncp_like(p, seed, true);
    else if (name == "l1_quadratic") inst = problems_detail::make_l1_quadratic(p, seed);
    else if (name == "nonlinear_g_poly") inst = problems_detail::make_nonlinear_g_poly(p, seed);
    else if (name == "degenerate_witness") inst = problems_detail::make_degenerate_witness();
    else throw Error(ErrorCode::UnknownName, "unknown problem '" + name + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad problem parameter: ") + e.what());
  }
  inst.spec.name = name;
  inst.spec.params = p;
  inst.spec.seed = seed;
  return inst;
}

/// x̄ + r·v with v a seeded uniformly random unit vector.
inline Vector offset_start(const Vector& x_bar, double offset_norm, std::uint64_t seed) {
  problems_detail::Rng rng(seed);
  Vector dir = problems_detail::gaussian(rng, x_bar.size(), 1);
  while (dir.norm() == 0.0) dir = problems_detail::gaussian(rng, x_bar.size(), 1);
  return x_bar + offset_norm * dir.normalized();
}

}  // namespace gesolve
