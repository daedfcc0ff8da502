#pragma once

// Generic G-semismooth Newton driver: x⁺ = x + Δx with V Δx = −H(x), where
// V is drawn from a caller-supplied generalized Jacobian selection.

#include "gesolve/core.hpp"

#include <functional>

namespace gesolve {

struct NewtonConfig {
  double tol_residual = 1e-10;
  int max_iter = 50;
  double divergence_guard = 1e8;
  /// Inexactness budget ϱ: jacobian_select must return V with
  /// dist(V, 𝒯(x)) ≤ ϱ‖H(x)‖. Recorded, not enforced.
  double rho = 0.0;

  void validate() const {
    if (!(tol_residual > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol_residual must be positive");
    if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be at least 1");
    if (!(rho >= 0.0)) throw Error(ErrorCode::InvalidArgument, "rho must be nonnegative");
  }
};

enum class Termination { ResidualMet, MaxIter, Diverged, SingularSystem };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::ResidualMet: return "ResidualMet";
    case Termination::MaxIter: return "MaxIter";
    case Termination::Diverged: return "Diverged";
    case Termination::SingularSystem: return "SingularSystem";
  }
  return "Unknown";
}

inline std::optional<Termination> termination_from_string(const std::string& s) {
  for (auto t : {Termination::ResidualMet, Termination::MaxIter, Termination::Diverged, Termination::SingularSystem})
    if (s == to_string(t)) return t;
  return std::nullopt;
}

/// Per-iteration data for a Newton step taken from iterate k.
struct StepRecord {
  double gamma = kNaN;            // proximal parameter (composite methods)
  double linear_residual = kNaN;  // ‖VΔx + H‖ (or the algorithm's own system residual)
  double condition = kNaN;        // condition estimate of the Newton matrix
  double step_norm = kNaN;
};

struct ConvergenceReport {
  std::string algorithm;
  std::vector<Vector> iterates;
  std::vector<double> residual_norms;
  std::vector<double> errors;  // ‖x⁽ᵏ⁾ − x̄‖, empty without a reference
  std::vector<double> ratios;  // errors[k+1]/errors[k]; NaN when undefined
  std::vector<StepRecord> steps;
  Termination termination = Termination::MaxIter;
  std::string diagnostic;
  /// Post-hoc exact solution check (composite problems); unset otherwise.
  std::optional<bool> membership;

  [[nodiscard]] int iterations() const { return static_cast<int>(steps.size()); }
  [[nodiscard]] const Vector& final_iterate() const { return iterates.back(); }
};

/// Fills errors and ratios from a known solution.
inline void attach_reference(ConvergenceReport& report, const Vector& reference) {
  report.errors.clear();
  report.ratios.clear();
  for (const Vector& x : report.iterates) report.errors.push_back((x - reference).norm());
  for (std::size_t k = 0; k + 1 < report.errors.size(); ++k) {
    const double e = report.errors[k];
    report.ratios.push_back(e > 0.0 ? report.errors[k + 1] / e : kNaN);
  }
}

/// Residual and Jacobian callbacks that also see the iteration index (for
/// iteration-dependent parameters such as a γ schedule).
using IndexedResidual = std::function<Vector(int, const Vector&)>;
using IndexedJacobian = std::function<Matrix(int, const Vector&)>;

/// Maps a library error raised inside an iteration to a termination status:
/// an infeasible linearization means the iterate left the region where the
/// method is defined; anything else means no Newton matrix could be formed.
inline Termination termination_for(const Error& e) {
  return e.code() == ErrorCode::QPInfeasible ? Termination::Diverged : Termination::SingularSystem;
}

/// Runs the driver. All failure modes, including gesolve::Error thrown by the
/// callbacks, are encoded in the report's termination.
inline ConvergenceReport run_indexed(const IndexedResidual& residual, const IndexedJacobian& jacobian_select,
                                     const Vector& x0, const NewtonConfig& config,
                                     const std::optional<Vector>& reference = std::nullopt) {
  config.validate();
  if (!x0.allFinite()) throw Error(ErrorCode::InvalidArgument, "x0 must be finite");
  ConvergenceReport report;
  Vector x = x0;
  bool recorded = false;
  try {
    for (int k = 0;; ++k) {
      recorded = false;
      const Vector h = residual(k, x);
      const double hnorm = h.norm();
      report.iterates.push_back(x);
      report.residual_norms.push_back(hnorm);
      recorded = true;
      if (!std::isfinite(hnorm)) {
        report.termination = Termination::Diverged;
        report.diagnostic = "residual is not finite";
        break;
      }
      if (hnorm <= config.tol_residual) {
        report.termination = Termination::ResidualMet;
        break;
      }
      if (k >= config.max_iter) {
        report.termination = Termination::MaxIter;
        break;
      }
      const Matrix v = jacobian_select(k, x);
      const auto dx = linalg::lu_solve(v, -h);
      if (!dx) {
        report.termination = Termination::SingularSystem;
        report.diagnostic = "Newton matrix is numerically singular at iteration " + std::to_string(k);
        break;
      }
      StepRecord rec;
      rec.linear_residual = (v * *dx + h).norm();
      rec.step_norm = dx->norm();
      report.steps.push_back(rec);
      x += *dx;
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
  return report;
}

inline ConvergenceReport run(const std::function<Vector(const Vector&)>& residual,
                             const std::function<Matrix(const Vector&)>& jacobian_select, const Vector& x0,
                             const NewtonConfig& config, const std::optional<Vector>& reference = std::nullopt) {
  return run_indexed([&](int, const Vector& x) { return residual(x); },
                     [&](int, const Vector& x) { return jacobian_select(x); }, x0, config, reference);
}

struct SuperlinearVerdict {
  std::vector<double> ratios;
  bool verdict = false;
  bool finite_termination = false;
};

/// Error-ratio test for superlinear convergence. Errors at or below `floor`
/// count as exact hits; a sequence ending in an exact hit is the finite
/// termination branch and gets verdict true. Otherwise at least three
/// positive errors are required, the last min(4, available) ratios must be
/// strictly decreasing, and the final ratio must be below 0.1.
inline SuperlinearVerdict superlinear_ratios(const std::vector<double>& errors, double floor = 0.0) {
  SuperlinearVerdict out;
  if (errors.empty()) throw Error(ErrorCode::InsufficientData, "no reference errors recorded");
  std::size_t positive = 0;
  while (positive < errors.size() && errors[positive] > floor) ++positive;
  const bool exact_hit = positive < errors.size();
  for (std::size_t k = 0; k + 1 < errors.size() && k < positive; ++k) {
    const double next = errors[k + 1] > floor ? errors[k + 1] : 0.0;
    out.ratios.push_back(next / errors[k]);
  }
  if (exact_hit && positive >= 1) {
    out.finite_termination = true;
    out.verdict = true;
    return out;
  }
  if (positive < 3) throw Error(ErrorCode::InsufficientData, "need at least three positive errors");
  const std::size_t window = std::min<std::size_t>(4, out.ratios.size());
  bool decreasing = true;
  for (std::size_t k = out.ratios.size() - window + 1; k < out.ratios.size(); ++k)
    if (!(out.ratios[k] < out.ratios[k - 1])) decreasing = false;
  out.verdict = decreasing && out.ratios.back() < 0.1;
  return out;
}

inline SuperlinearVerdict superlinear_ratios(const ConvergenceReport& report, double floor = 0.0) {
  return superlinear_ratios(report.errors, floor);
}

}  // namespace gesolve
