#pragma once

// Command implementations behind the gesolve executable. Each command returns
// an Outcome (exit code, machine-readable report, printable table) so it can
// be driven in-process as well as from the command line.
//
// Exit codes: 0 success, 1 input error, 2 MaxIter/Diverged, 3 SingularSystem,
// 4 verification failure (compare deviation exceeded, failed check).

#include "gesolve/checks.hpp"
#include "gesolve/problems.hpp"
#include "gesolve/report_io.hpp"

#include <filesystem>
#include <fstream>

namespace gesolve::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kNotConverged = 2, kSingular = 3, kVerificationFailed = 4 };

inline int exit_code_for(Termination t) {
  switch (t) {
    case Termination::ResidualMet: return kOk;
    case Termination::MaxIter:
    case Termination::Diverged: return kNotConverged;
    case Termination::SingularSystem: return kSingular;
  }
  return kInputError;
}

struct RunRequest {
  /// {"name", "params", "seed"} or an inline {"composite": ..., "polyhedral": ...} problem.
  nlohmann::json problem;
  std::vector<std::string> algorithms;  // one for solve, two for compare
  /// Vector, {"offset_norm", "seed"}, or null (offset 0.1 from the known solution).
  nlohmann::json x0;
  NewtonConfig config;
  std::vector<double> gamma_cycle{1.0};
  std::string selector = "lower";
  double deviation_tol = 1e-10;
  std::string out;
  std::string format = "json";
};

struct Outcome {
  int exit_code = kOk;
  nlohmann::json report;
  std::string table;
  std::string message;  // single line, set on input errors
};

// ---------------------------------------------------------------------------
// problem ingestion

namespace detail {

inline bool is_named(const std::string& s) {
  const auto& reg = problem_registry();
  const auto& diag = diagnostic_problems();
  return std::find(reg.begin(), reg.end(), s) != reg.end() || std::find(diag.begin(), diag.end(), s) != diag.end();
}

inline Vector vec(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::InvalidArgument, std::string("missing field '") + key + "'");
  return vector_from_json(j.at(key));
}

inline Vector vec_or_empty(const nlohmann::json& j, const char* key) {
  return j.contains(key) ? vector_from_json(j.at(key)) : Vector(0);
}

inline Matrix mat_or_empty(const nlohmann::json& j, const char* key, Eigen::Index cols) {
  if (!j.contains(key) || j.at(key).empty()) return Matrix(0, cols);
  return matrix_from_json(j.at(key));
}

struct AffineMap {
  Matrix m;
  Vector c;
};

inline AffineMap affine_map(const nlohmann::json& j, const char* what, const char* mkey, const char* ckey) {
  if (!j.contains("affine")) throw Error(ErrorCode::UnsupportedKind, std::string(what) + " must be {\"affine\": ...}");
  const auto& a = j.at("affine");
  AffineMap out{matrix_from_json(a.at(mkey)), Vector()};
  out.c = a.contains(ckey) ? vector_from_json(a.at(ckey)) : Vector(Vector::Zero(out.m.rows()));
  if (out.c.size() != out.m.rows()) throw Error(ErrorCode::ShapeMismatch, std::string(what) + " offset length mismatch");
  return out;
}

inline ProxFunction prox_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  auto dim = [&] { return static_cast<Eigen::Index>(j.at("dim").get<long>()); };
  if (kind == "zero") return ProxFunction::zero(dim());
  if (kind == "nonneg") return ProxFunction::nonneg(dim());
  if (kind == "l1") return ProxFunction::l1(dim(), j.at("tau").get<double>());
  if (kind == "box") return ProxFunction::box(vec(j, "lower"), vec(j, "upper"));
  if (kind == "weighted_l1_box") return ProxFunction::weighted_l1_box(vec(j, "weights"), vec(j, "lower"), vec(j, "upper"));
  if (kind == "quadratic") return ProxFunction::quadratic(matrix_from_json(j.at("Q")));
  throw Error(ErrorCode::UnsupportedKind, "unknown prox kind '" + kind + "'");
}

inline PolyhedralSet set_from_json(const nlohmann::json& j) {
  const auto s = static_cast<Eigen::Index>(j.at("dim").get<long>());
  return PolyhedralSet(mat_or_empty(j, "ineq_matrix", s), vec_or_empty(j, "ineq_rhs"), mat_or_empty(j, "eq_matrix", s),
                       vec_or_empty(j, "eq_rhs"));
}

inline ProblemInstance inline_problem(const nlohmann::json& j) {
  ProblemInstance inst;
  inst.spec.name = "inline";
  if (j.contains("composite")) {
    const auto& c = j.at("composite");
    const AffineMap f = affine_map(c.at("F"), "F", "M", "c");
    ProxFunction q = prox_from_json(c.at("q"));
    if (f.m.rows() != f.m.cols()) throw Error(ErrorCode::ShapeMismatch, "F matrix must be square");
    inst.composite = CompositeGE{f.m.cols(), problems_detail::affine(f.m, f.c), problems_detail::constant(f.m),
                                 std::move(q)};
    inst.composite->validate();
  }
  if (j.contains("polyhedral")) {
    const auto& p = j.at("polyhedral");
    const AffineMap f = affine_map(p.at("F"), "F", "M", "c");
    if (f.m.rows() != f.m.cols()) throw Error(ErrorCode::ShapeMismatch, "F matrix must be square");
    PolyhedralSet d = set_from_json(p.at("D"));
    const Eigen::Index n = f.m.cols();
    if (p.contains("G")) {
      const AffineMap g = affine_map(p.at("G"), "G", "L", "g");
      if (g.m.cols() != n || g.m.rows() != d.dim()) throw Error(ErrorCode::ShapeMismatch, "G must map R^n to R^s");
      const Eigen::Index s = d.dim();
      inst.polyhedral = PolyhedralGE{n,
                                     s,
                                     problems_detail::affine(f.m, f.c),
                                     problems_detail::constant(f.m),
                                     problems_detail::affine(g.m, g.c),
                                     problems_detail::constant(g.m),
                                     [n](const Vector&, const Vector&) { return Matrix(Matrix::Zero(n, n)); },
                                     [s, n](const Vector&, const Vector&) { return Matrix(Matrix::Zero(s, n)); },
                                     std::move(d)};
    } else {
      if (d.dim() != n) throw Error(ErrorCode::ShapeMismatch, "without G the set must live in R^n");
      inst.polyhedral =
          PolyhedralGE::with_identity_g(problems_detail::affine(f.m, f.c), problems_detail::constant(f.m), std::move(d));
    }
  }
  if (!inst.composite && !inst.polyhedral)
    throw Error(ErrorCode::InvalidArgument, "problem JSON needs \"name\", \"composite\" or \"polyhedral\"");
  inst.spec.known_solution = vec_or_empty(j, "known_solution");
  if (j.contains("known_multiplier")) inst.spec.known_multiplier = vector_from_json(j.at("known_multiplier"));
  return inst;
}

}  // namespace detail

/// Turns a --problem argument into problem JSON: a registry name, inline JSON
/// text, or a path to a JSON file.
inline nlohmann::json resolve_problem_ref(const std::string& ref, const std::string& params_text,
                                          std::optional<std::uint64_t> seed) {
  nlohmann::json j;
  if (detail::is_named(ref)) {
    j = {{"name", ref}};
  } else if (!ref.empty() && ref.front() == '{') {
    j = nlohmann::json::parse(ref);
  } else {
    std::ifstream in(ref);
    if (!in) throw Error(ErrorCode::UnknownName, "'" + ref + "' is neither a problem name nor a readable file");
    j = nlohmann::json::parse(in);
  }
  if (!params_text.empty()) j["params"] = nlohmann::json::parse(params_text);
  if (seed) j["seed"] = *seed;
  return j;
}

inline ProblemInstance load_problem(const nlohmann::json& j) {
  if (j.contains("name")) {
    return make_problem(j.at("name").get<std::string>(), j.value("params", nlohmann::json::object()),
                        j.value("seed", std::uint64_t{0}));
  }
  return detail::inline_problem(j);
}

// ---------------------------------------------------------------------------
// running

enum class Encoding { Polyhedral, Composite };

struct AlgorithmChoice {
  Encoding encoding;
  PolyAlgorithm poly = PolyAlgorithm::Ssstar;
  CompositeAlgorithm composite = CompositeAlgorithm::Scd;
};

inline AlgorithmChoice parse_algorithm(const std::string& name) {
  if (name == "ssstar") return {Encoding::Polyhedral, PolyAlgorithm::Ssstar};
  if (name == "gsemi-poly") return {Encoding::Polyhedral, PolyAlgorithm::Gsemi};
  if (name == "scd") return {Encoding::Composite, PolyAlgorithm::Ssstar, CompositeAlgorithm::Scd};
  if (name == "gsemi-composite") return {Encoding::Composite, PolyAlgorithm::Ssstar, CompositeAlgorithm::Gsemi};
  throw Error(ErrorCode::UnknownName, "unknown algorithm '" + name + "'");
}

inline BouligandSelector parse_selector(const std::string& s) {
  if (s == "lower") return BouligandSelector::lower();
  if (s == "upper") return BouligandSelector::upper();
  throw Error(ErrorCode::InvalidArgument, "selector must be 'lower' or 'upper'");
}

inline Eigen::Index problem_dim(const ProblemInstance& inst) {
  return inst.polyhedral ? inst.polyhedral->n : inst.composite->n;
}

inline Vector resolve_x0(const nlohmann::json& x0, const ProblemInstance& inst) {
  const Eigen::Index n = problem_dim(inst);
  const Vector& x_bar = inst.spec.known_solution;
  Vector x;
  if (x0.is_array()) {
    x = vector_from_json(x0);
  } else {
    if (x_bar.size() == 0) throw Error(ErrorCode::InvalidArgument, "x0 must be given explicitly: no known solution");
    const double offset = x0.is_object() ? x0.value("offset_norm", 0.1) : 0.1;
    const std::uint64_t seed = x0.is_object() ? x0.value("seed", std::uint64_t{0}) : inst.spec.seed;
    x = offset_start(x_bar, offset, seed);
  }
  if (x.size() != n) throw Error(ErrorCode::ShapeMismatch, "x0 has length " + std::to_string(x.size()) + ", expected " + std::to_string(n));
  return x;
}

inline ConvergenceReport run_algorithm(const ProblemInstance& inst, const std::string& algorithm, const Vector& x0,
                                       const RunRequest& req) {
  const AlgorithmChoice choice = parse_algorithm(algorithm);
  std::optional<Vector> reference;
  if (inst.spec.known_solution.size() == x0.size()) reference = inst.spec.known_solution;
  if (choice.encoding == Encoding::Polyhedral) {
    if (!inst.polyhedral) throw Error(ErrorCode::InvalidArgument, "algorithm '" + algorithm + "' needs a polyhedral problem");
    return solve(*inst.polyhedral, x0, choice.poly, req.config, reference);
  }
  if (!inst.composite) throw Error(ErrorCode::InvalidArgument, "algorithm '" + algorithm + "' needs a composite problem");
  return solve(*inst.composite, x0, choice.composite, GammaSchedule::cycle(req.gamma_cycle), parse_selector(req.selector),
               req.config, reference);
}

inline std::string iteration_table(const ConvergenceReport& r) {
  std::ostringstream os;
  os << std::setw(4) << "k" << std::setw(16) << "residual" << std::setw(16) << "error" << std::setw(16) << "ratio" << '\n';
  auto cell = [&](double v) {
    os << std::setw(16);
    if (std::isnan(v)) os << "-";
    else os << std::scientific << std::setprecision(6) << v << std::defaultfloat;
  };
  for (std::size_t k = 0; k < r.iterates.size(); ++k) {
    os << std::setw(4) << k;
    cell(r.residual_norms[k]);
    cell(k < r.errors.size() ? r.errors[k] : kNaN);
    cell(k >= 1 && k - 1 < r.ratios.size() ? r.ratios[k - 1] : kNaN);
    os << '\n';
  }
  os << r.algorithm << ": " << to_string(r.termination) << " after " << r.iterations() << " iterations";
  if (!r.diagnostic.empty()) os << " (" << r.diagnostic << ")";
  os << '\n';
  return os.str();
}

namespace detail {

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  out << text;
}

/// Wraps a command body: library and JSON errors become exit 1 with a
/// one-line message.
template <class Body>
Outcome guarded(Body&& body) {
  try {
    return body();
  } catch (const Error& e) {
    return {kInputError, nullptr, "", std::string("error: ") + e.what()};
  } catch (const nlohmann::json::exception& e) {
    return {kInputError, nullptr, "", std::string("error: malformed JSON: ") + e.what()};
  }
}

inline void validate_format(const std::string& f) {
  if (f != "json" && f != "csv") throw Error(ErrorCode::InvalidArgument, "format must be json or csv");
}

}  // namespace detail

inline Outcome cmd_solve(const RunRequest& req) {
  return detail::guarded([&] {
    detail::validate_format(req.format);
    if (req.algorithms.size() != 1) throw Error(ErrorCode::InvalidArgument, "solve takes exactly one algorithm");
    parse_algorithm(req.algorithms[0]);
    const ProblemInstance inst = load_problem(req.problem);
    const Vector x0 = resolve_x0(req.x0, inst);
    const ConvergenceReport report = run_algorithm(inst, req.algorithms[0], x0, req);
    Outcome out{exit_code_for(report.termination), report_to_json(report), iteration_table(report), ""};
    if (!req.out.empty()) detail::write_file(req.out, req.format == "csv" ? report_to_csv(report) : out.report.dump(2));
    return out;
  });
}

/// Per-k relative deviation ‖a_k − b_k‖ / max(1, ‖a_k‖, ‖b_k‖); the shorter
/// sequence is padded with its final iterate.
inline std::vector<double> iterate_deviation(const ConvergenceReport& a, const ConvergenceReport& b) {
  std::vector<double> dev;
  const std::size_t len = std::max(a.iterates.size(), b.iterates.size());
  for (std::size_t k = 0; k < len; ++k) {
    const Vector& xa = a.iterates[std::min(k, a.iterates.size() - 1)];
    const Vector& xb = b.iterates[std::min(k, b.iterates.size() - 1)];
    const double scale = std::max({1.0, xa.norm(), xb.norm()});
    const double d = (xa - xb).norm() / scale;
    dev.push_back(std::isnan(d) ? kInf : d);
  }
  return dev;
}

/// Runs two algorithms on the same problem from the same x0, sequentially.
/// Both see identical approximation-step and selector inputs whenever their
/// iterates agree, since every step is a deterministic function of the iterate.
inline Outcome cmd_compare(const RunRequest& req) {
  return detail::guarded([&] {
    detail::validate_format(req.format);
    if (req.algorithms.size() != 2) throw Error(ErrorCode::InvalidArgument, "compare takes exactly two algorithms");
    const AlgorithmChoice first = parse_algorithm(req.algorithms[0]);
    const AlgorithmChoice second = parse_algorithm(req.algorithms[1]);
    if (first.encoding != second.encoding)
      throw Error(ErrorCode::InvalidArgument, "algorithms '" + req.algorithms[0] + "' and '" + req.algorithms[1] +
                                                  "' solve different problem encodings");
    const ProblemInstance inst = load_problem(req.problem);
    const Vector x0 = resolve_x0(req.x0, inst);
    const ConvergenceReport a = run_algorithm(inst, req.algorithms[0], x0, req);
    const ConvergenceReport b = run_algorithm(inst, req.algorithms[1], x0, req);
    const std::vector<double> dev = iterate_deviation(a, b);
    const double max_dev = *std::max_element(dev.begin(), dev.end());

    Outcome out;
    out.exit_code = max_dev <= req.deviation_tol ? kOk : kVerificationFailed;
    out.report = {{"algorithms", req.algorithms},
                  {"deviation", report_io_detail::numbers(dev)},
                  {"max_deviation", report_io_detail::number(max_dev)},
                  {"deviation_tol", req.deviation_tol},
                  {"equivalent", out.exit_code == kOk},
                  {"reports", {report_to_json(a), report_to_json(b)}}};
    std::ostringstream os;
    os << std::setw(4) << "k" << std::setw(16) << "deviation" << '\n';
    for (std::size_t k = 0; k < dev.size(); ++k)
      os << std::setw(4) << k << std::setw(16) << std::scientific << std::setprecision(6) << dev[k] << '\n';
    os << std::defaultfloat << req.algorithms[0] << " vs " << req.algorithms[1] << ": max deviation " << max_dev
       << (out.exit_code == kOk ? " (equivalent)" : " (DIFFER)") << '\n';
    out.table = os.str();
    if (!req.out.empty()) {
      if (req.format == "csv") {
        std::ostringstream csv;
        csv << "k,deviation\n" << std::setprecision(17);
        for (std::size_t k = 0; k < dev.size(); ++k) csv << k << ',' << dev[k] << '\n';
        detail::write_file(req.out, csv.str());
      } else {
        detail::write_file(req.out, out.report.dump(2));
      }
    }
    return out;
  });
}

// ---------------------------------------------------------------------------
// invariant checks

enum class CheckStatus { Pass, Fail, Flagged, Skipped };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Flagged: return "flagged";
    case CheckStatus::Skipped: return "skipped";
  }
  return "unknown";
}

struct CheckResult {
  std::string name;
  CheckStatus status;
  std::string detail;
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

inline std::vector<CheckResult> polyhedral_checks(const PolyhedralGE& prob, const ProblemSpec& spec) {
  std::vector<CheckResult> out;
  const Vector& x_bar = spec.known_solution;
  if (x_bar.size() != prob.n) {
    out.push_back({"known_solution", CheckStatus::Skipped, "no known solution"});
    return out;
  }
  // û(x̄) from the raw QP: valid even when the multiplier is not unique
  const QPResult at_bar = solve_ldqp(approximation_qp(prob, x_bar));
  const double u_bar = at_bar.u.norm();
  out.push_back({"known_solution", u_bar <= 1e-10 * (1.0 + x_bar.norm()) ? CheckStatus::Pass : CheckStatus::Fail,
                 "|u_hat(x_bar)| = " + fmt(u_bar)});

  double worst_kkt = 0.0;
  int solved = 0;
  for (int k = 0; k < 20; ++k) {
    const Vector x = offset_start(x_bar, 0.1, spec.seed + 1000 + static_cast<std::uint64_t>(k));
    const LDQP qp = approximation_qp(prob, x);
    try {
      const QPResult res = solve_ldqp(qp);
      worst_kkt = std::max(worst_kkt, kkt_residual(qp, res) / (1.0 + qp.linear_term.norm()));
      ++solved;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::QPInfeasible) throw;
    }
  }
  out.push_back({"kkt_residual", worst_kkt <= 1e-9 ? CheckStatus::Pass : CheckStatus::Fail,
                 std::to_string(solved) + " approximation QPs, worst scaled residual " + fmt(worst_kkt)});

  const Vector g_bar = prob.G(x_bar);
  const double modulus = nondegeneracy_modulus(prob, x_bar, g_bar);
  out.push_back({"nondegeneracy", modulus <= kDegenerateModulus ? CheckStatus::Flagged : CheckStatus::Pass,
                 "modulus " + fmt(modulus) + (modulus <= kDegenerateModulus ? " (degenerate at the solution)" : "")});

  if (!spec.known_multiplier || spec.known_multiplier->size() != prob.s) {
    out.push_back({"face_sampling", CheckStatus::Skipped, "no known multiplier"});
  } else {
    try {
      const Vector mu = g_bar + *spec.known_multiplier;
      const FaceSamplingReport rep = projection_face_sampling(prob.D, mu, 100, 1e-3, spec.seed + 7);
      out.push_back({"face_sampling", rep.passed() ? CheckStatus::Pass : CheckStatus::Fail,
                     std::to_string(rep.elements) + " elements, " + std::to_string(rep.differentiable_samples) +
                         " samples, " + std::to_string(rep.unmatched) + " unmatched"});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TooManyRows) throw;
      out.push_back({"face_sampling", CheckStatus::Skipped, e.what()});
    }
  }
  return out;
}

inline std::vector<CheckResult> composite_checks(const CompositeGE& prob, const ProblemSpec& spec, double gamma) {
  std::vector<CheckResult> out;
  const Vector& x_bar = spec.known_solution;
  const bool has_solution = x_bar.size() == prob.n;
  const Vector center = has_solution ? x_bar : Vector(Vector::Zero(prob.n));

  const ProxPropertyReport props = prox_property_check(prob.q, 1.0 / gamma, center, 1.0, 200, spec.seed + 11);
  out.push_back({"prox_properties", props.passed() ? CheckStatus::Pass : CheckStatus::Fail,
                 std::to_string(props.firm_violations) + " firm, " + std::to_string(props.element_violations) +
                     " spectrum, " + std::to_string(props.jacobian_mismatches) + " jacobian violations"});
  if (!has_solution) {
    out.push_back({"known_solution", CheckStatus::Skipped, "no known solution"});
    return out;
  }

  const double u_bar = residual(prob, gamma, x_bar).norm();
  const bool member = subgradient_check(prob.q, x_bar, -prob.F(x_bar));
  out.push_back({"known_solution",
                 u_bar <= 1e-10 * (1.0 + x_bar.norm()) && member ? CheckStatus::Pass : CheckStatus::Fail,
                 "|u(x_bar)| = " + fmt(u_bar) + (member ? ", subgradient inclusion holds" : ", subgradient inclusion fails")});

  std::mt19937_64 rng(spec.seed + 13);
  std::uniform_real_distribution<double> gdist(0.25, 4.0);
  int violations = 0;
  for (int k = 0; k < 200; ++k) {
    const Vector x = offset_start(x_bar, 1.0, spec.seed + 2000 + static_cast<std::uint64_t>(k));
    const double g = gdist(rng);
    const Vector z = x - prob.F(x) / g;
    const Vector z_bar = x_bar - prob.F(x_bar) / g;
    const double rhs = std::max(1.0, g * g) * (z - z_bar).squaredNorm();
    if (prox_residual_inequality_gap(prob, x, x_bar, g) > 1e-12 * std::max(1.0, rhs)) ++violations;
  }
  out.push_back({"prox_residual_inequality", violations == 0 ? CheckStatus::Pass : CheckStatus::Fail,
                 std::to_string(violations) + " violations in 200 samples"});

  try {
    const RegularityReport reg = regularity_enumerate(prob, gamma, x_bar);
    CheckStatus status = CheckStatus::Pass;
    if (!reg.families_agree) status = CheckStatus::Fail;
    else if (!reg.all_nonsingular) status = CheckStatus::Flagged;
    out.push_back({"regularity", status,
                   std::to_string(reg.elements) + " elements, " + std::to_string(reg.witnesses.size()) + " singular" +
                       (reg.families_agree ? "" : ", families disagree")});
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooManyKinks && e.code() != ErrorCode::UnsupportedKind) throw;
    out.push_back({"regularity", CheckStatus::Skipped, e.what()});
  }
  return out;
}

}  // namespace detail

/// Runs the invariant suites that apply to the problem. Construction failure
/// exits 1, any failed check exits 4; flagged findings do not fail.
inline Outcome cmd_check(const RunRequest& req) {
  return detail::guarded([&] {
    std::vector<CheckResult> checks;
    std::optional<ProblemInstance> inst;
    try {
      inst = load_problem(req.problem);
      checks.push_back({"construction", CheckStatus::Pass, "problem built"});
    } catch (const Error& e) {
      checks.push_back({"construction", CheckStatus::Fail, e.what()});
    }
    if (inst) {
      if (inst->polyhedral) {
        for (auto& c : detail::polyhedral_checks(*inst->polyhedral, inst->spec)) {
          c.name = "polyhedral." + c.name;
          checks.push_back(std::move(c));
        }
      }
      if (inst->composite) {
        for (auto& c : detail::composite_checks(*inst->composite, inst->spec, req.gamma_cycle.front())) {
          c.name = "composite." + c.name;
          checks.push_back(std::move(c));
        }
      }
    }

    Outcome out;
    out.report = {{"problem", req.problem}, {"checks", nlohmann::json::array()}};
    std::ostringstream os;
    bool failed = false;
    for (const auto& c : checks) {
      out.report["checks"].push_back({{"name", c.name}, {"status", to_string(c.status)}, {"detail", c.detail}});
      os << std::left << std::setw(36) << c.name << std::setw(9) << to_string(c.status) << c.detail << '\n';
      failed = failed || c.status == CheckStatus::Fail;
    }
    out.report["passed"] = !failed;
    out.table = os.str();
    if (!inst) {
      out.exit_code = kInputError;
      out.message = "error: construction failed: " + checks.front().detail;
    } else {
      out.exit_code = failed ? kVerificationFailed : kOk;
    }
    if (!req.out.empty()) detail::write_file(req.out, out.report.dump(2));
    return out;
  });
}

}  // namespace gesolve::cli
