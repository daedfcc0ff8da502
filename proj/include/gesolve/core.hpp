#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gesolve {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexSet = std::vector<int>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class ErrorCode {
  InvalidArgument,
  ShapeMismatch,
  QPInfeasible,
  MaxPivots,
  PointNotInSet,
  NotANormal,
  TooManyRows,
  SelectorMismatch,
  TooManyKinks,
  UnsupportedKind,
  InsufficientData,
  MultiplierAmbiguous,
  DegenerateBase,
  SingularSystem,
  UnknownName,
  ConstructionFailed,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::QPInfeasible: return "QPInfeasible";
    case ErrorCode::MaxPivots: return "MaxPivots";
    case ErrorCode::PointNotInSet: return "PointNotInSet";
    case ErrorCode::NotANormal: return "NotANormal";
    case ErrorCode::TooManyRows: return "TooManyRows";
    case ErrorCode::SelectorMismatch: return "SelectorMismatch";
    case ErrorCode::TooManyKinks: return "TooManyKinks";
    case ErrorCode::UnsupportedKind: return "UnsupportedKind";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::MultiplierAmbiguous: return "MultiplierAmbiguous";
    case ErrorCode::DegenerateBase: return "DegenerateBase";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::UnknownName: return "UnknownName";
    case ErrorCode::ConstructionFailed: return "ConstructionFailed";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI) can branch on the kind rather than on message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace linalg {

/// Rank threshold used for all basis/kernel extractions.
inline constexpr double kRankTol = 1e-10;

inline double rank_threshold(const Eigen::VectorXd& singular_values) {
  const double top = singular_values.size() > 0 ? singular_values(0) : 0.0;
  return kRankTol * std::max(1.0, top);
}

/// Orthonormal basis of range(A) together with an orthonormal basis of its
/// orthogonal complement, both from one SVD so they are exactly complementary.
struct RangeSplit {
  Matrix range;       // rows(A) x r
  Matrix complement;  // rows(A) x (rows(A) - r)
};

inline RangeSplit split_range(const Matrix& a) {
  const Eigen::Index rows = a.rows();
  if (a.cols() == 0 || rows == 0) {
    return {Matrix(rows, 0), Matrix::Identity(rows, rows)};
  }
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const double tol = rank_threshold(sv);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > tol) ++rank;
  const Matrix& u = svd.matrixU();
  return {u.leftCols(rank), u.rightCols(rows - rank)};
}

inline Matrix range_basis(const Matrix& a) { return split_range(a).range; }

/// Orthonormal basis of ker(A) (cols(A) x (cols(A) - rank)).
inline Matrix kernel_basis(const Matrix& a) {
  return split_range(a.transpose()).complement;
}

inline Matrix projector(const Matrix& orthonormal_basis) {
  return orthonormal_basis * orthonormal_basis.transpose();
}

/// Smallest singular value of A taken over unit vectors of the column space
/// dimension: zero whenever A has more columns than rows.
inline double min_singular_value(const Matrix& a) {
  if (a.cols() == 0) return kInf;
  if (a.cols() > a.rows()) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

inline double condition_number(const Matrix& a) {
  if (a.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  if (smallest == 0.0) return kInf;
  return sv(0) / smallest;
}

/// Solves A x = b by LU with partial pivoting. Returns nullopt when some pivot
/// falls below 1e-12 times the largest entry of A.
inline std::optional<Vector> lu_solve(const Matrix& a, const Vector& b) {
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw Error(ErrorCode::ShapeMismatch, "lu_solve expects a square system");
  }
  if (a.rows() == 0) return Vector(0);
  const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  Eigen::PartialPivLU<Matrix> lu(a);
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(min_pivot >= 1e-12 * scale)) return std::nullopt;
  Vector x = lu.solve(b);
  // one step of iterative refinement keeps the backward residual at round-off
  const Vector r = b - a * x;
  x += lu.solve(r);
  if (!x.allFinite()) return std::nullopt;
  return x;
}

/// Largest principal-angle sine between two column spaces with orthonormal bases.
inline double subspace_distance(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols() || a.rows() != b.rows()) return kInf;
  if (a.cols() == 0) return 0.0;
  return (projector(a) - projector(b)).norm();
}

}  // namespace linalg
}  // namespace gesolve
