#pragma once

// ConvergenceReport <-> JSON, and the fixed CSV layout
//   k,residual_norm,error,ratio,gamma,algorithm
// Non-finite numbers are written as JSON null and read back as NaN.

#include "gesolve/newton.hpp"

#include "json.hpp"

#include <iomanip>
#include <sstream>

namespace gesolve {

namespace report_io_detail {

inline nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline double read_number(const nlohmann::json& j) {
  if (j.is_null()) return kNaN;
  return j.get<double>();
}

inline nlohmann::json numbers(const std::vector<double>& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (double x : v) arr.push_back(number(x));
  return arr;
}

inline std::vector<double> read_numbers(const nlohmann::json& j) {
  std::vector<double> out;
  for (const auto& e : j) out.push_back(read_number(e));
  return out;
}

}  // namespace report_io_detail

inline nlohmann::json vector_to_json(const Vector& v) {
  return report_io_detail::numbers(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Vector vector_from_json(const nlohmann::json& j) {
  const auto vals = report_io_detail::read_numbers(j);
  return Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidArgument, "matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Matrix(0, 0);
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& r = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(r.size()) != cols) throw Error(ErrorCode::ShapeMismatch, "ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = r.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

inline nlohmann::json report_to_json(const ConvergenceReport& r) {
  using report_io_detail::number;
  using report_io_detail::numbers;
  nlohmann::json j;
  j["algorithm"] = r.algorithm;
  j["termination"] = to_string(r.termination);
  j["diagnostic"] = r.diagnostic;
  j["iterations"] = r.iterations();
  j["iterates"] = nlohmann::json::array();
  for (const Vector& x : r.iterates) j["iterates"].push_back(vector_to_json(x));
  j["residual_norms"] = numbers(r.residual_norms);
  j["errors"] = numbers(r.errors);
  j["ratios"] = numbers(r.ratios);
  j["steps"] = nlohmann::json::array();
  for (const StepRecord& s : r.steps) {
    j["steps"].push_back({{"gamma", number(s.gamma)},
                          {"linear_residual", number(s.linear_residual)},
                          {"condition", number(s.condition)},
                          {"step_norm", number(s.step_norm)}});
  }
  j["membership"] = r.membership ? nlohmann::json(*r.membership) : nlohmann::json(nullptr);
  return j;
}

inline ConvergenceReport report_from_json(const nlohmann::json& j) {
  using report_io_detail::read_number;
  using report_io_detail::read_numbers;
  ConvergenceReport r;
  r.algorithm = j.at("algorithm").get<std::string>();
  const auto term = termination_from_string(j.at("termination").get<std::string>());
  if (!term) throw Error(ErrorCode::InvalidArgument, "unknown termination in report");
  r.termination = *term;
  r.diagnostic = j.value("diagnostic", "");
  for (const auto& x : j.at("iterates")) r.iterates.push_back(vector_from_json(x));
  r.residual_norms = read_numbers(j.at("residual_norms"));
  r.errors = read_numbers(j.at("errors"));
  r.ratios = read_numbers(j.at("ratios"));
  for (const auto& s : j.at("steps")) {
    r.steps.push_back({read_number(s.at("gamma")), read_number(s.at("linear_residual")),
                       read_number(s.at("condition")), read_number(s.at("step_norm"))});
  }
  if (j.contains("membership") && !j.at("membership").is_null()) r.membership = j.at("membership").get<bool>();
  return r;
}

namespace report_io_detail {
inline std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}
}  // namespace report_io_detail

inline std::string report_to_csv(const ConvergenceReport& r) {
  using report_io_detail::csv_number;
  std::ostringstream os;
  os << "k,residual_norm,error,ratio,gamma,algorithm\n";
  for (std::size_t k = 0; k < r.iterates.size(); ++k) {
    const double err = k < r.errors.size() ? r.errors[k] : kNaN;
    const double ratio = k >= 1 && k - 1 < r.ratios.size() ? r.ratios[k - 1] : kNaN;
    const double gamma = k < r.steps.size() ? r.steps[k].gamma : kNaN;
    os << k << ',' << csv_number(r.residual_norms[k]) << ',' << csv_number(err) << ',' << csv_number(ratio) << ','
       << csv_number(gamma) << ',' << r.algorithm << '\n';
  }
  return os.str();
}

/// NaN-aware equality used for round-trip checks.
inline bool same_reports(const ConvergenceReport& a, const ConvergenceReport& b) {
  auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
  auto same_vec = [&](const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!same(x[i], y[i])) return false;
    return true;
  };
  if (a.algorithm != b.algorithm || a.termination != b.termination || a.diagnostic != b.diagnostic ||
      a.membership != b.membership || a.iterates.size() != b.iterates.size() || a.steps.size() != b.steps.size())
    return false;
  for (std::size_t k = 0; k < a.iterates.size(); ++k) {
    if (a.iterates[k].size() != b.iterates[k].size()) return false;
    for (Eigen::Index i = 0; i < a.iterates[k].size(); ++i)
      if (!same(a.iterates[k](i), b.iterates[k](i))) return false;
  }
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    const auto& s = a.steps[k];
    const auto& t = b.steps[k];
    if (!same(s.gamma, t.gamma) || !same(s.linear_residual, t.linear_residual) || !same(s.condition, t.condition) ||
        !same(s.step_norm, t.step_norm))
      return false;
  }
  return same_vec(a.residual_norms, b.residual_norms) && same_vec(a.errors, b.errors) && same_vec(a.ratios, b.ratios);
}

}  // namespace gesolve
