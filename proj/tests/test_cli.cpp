#include "gesolve/cli.hpp"

#include "test_support.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gesolve;
using namespace gesolve::cli;
using namespace gesolve::testing;

namespace fs = std::filesystem;

namespace {

RunRequest request(nlohmann::json problem, std::vector<std::string> algorithms, nlohmann::json x0 = nullptr) {
  RunRequest r;
  r.problem = std::move(problem);
  r.algorithms = std::move(algorithms);
  r.x0 = std::move(x0);
  return r;
}

const nlohmann::json kScalarNcp = {
    {"name", "ncp_affine"},
    {"params", {{"n", 1}, {"pattern", "inactive"}, {"x_bar", {2}}, {"a_scale", 0}, {"delta", 1}}}};

const nlohmann::json kSingularL1 = {{"name", "l1_quadratic"},
                                    {"params", {{"n", 1}, {"a_scale", 0}, {"delta", 0}, {"x_bar", {0}}}}};

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("gesolve_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  [[nodiscard]] std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
  static inline int counter_ = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Process {
  int exit_code;
  std::string out;
  std::string err;
};

Process run_cli(const std::string& args) {
  TempDir tmp;
  const std::string out = tmp.file("stdout"), err = tmp.file("stderr");
  const std::string cmd = std::string("\"") + GESOLVE_CLI_PATH + "\" " + args + " >" + out + " 2>" + err;
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string quoted(const std::string& s) { return "'" + s + "'"; }

}  // namespace

TEST(CliSolve, ScalarNcpOneIteration) {
  const auto out = cmd_solve(request(kScalarNcp, {"scd"}, {1.0}));
  EXPECT_EQ(out.exit_code, kOk);
  EXPECT_EQ(out.report.at("iterations"), 1);
  EXPECT_EQ(out.report.at("termination"), "ResidualMet");
  EXPECT_NE(out.table.find("ResidualMet"), std::string::npos);
}

TEST(CliSolve, InputErrors) {
  EXPECT_EQ(cmd_solve(request(kScalarNcp, {"newton"}, {1.0})).exit_code, kInputError);
  EXPECT_EQ(cmd_solve(request({{"name", "nope"}}, {"scd"})).exit_code, kInputError);
  EXPECT_EQ(cmd_solve(request(kScalarNcp, {"scd"}, {1.0, 2.0})).exit_code, kInputError);
  EXPECT_EQ(cmd_solve(request({{"name", "l1_quadratic"}}, {"ssstar"})).exit_code, kInputError);
  auto bad_format = request(kScalarNcp, {"scd"}, {1.0});
  bad_format.format = "xml";
  EXPECT_EQ(cmd_solve(bad_format).exit_code, kInputError);
  const auto msg = cmd_solve(request(kScalarNcp, {"newton"}, {1.0})).message;
  EXPECT_EQ(msg.find('\n'), std::string::npos);
  EXPECT_EQ(msg.rfind("error:", 0), 0u);
}

TEST(CliSolve, SingularSystemExitsThree) {
  // witness: at x = 5 the only Bouligand element gives a singular Newton matrix
  const auto inst = load_problem(kSingularL1);
  const auto reg = regularity_enumerate(*inst.composite, 1.0, vec({5}));
  EXPECT_FALSE(reg.all_nonsingular);
  EXPECT_EQ(cmd_solve(request(kSingularL1, {"scd"}, {5.0})).exit_code, kSingular);
  EXPECT_EQ(cmd_solve(request(kSingularL1, {"gsemi-composite"}, {5.0})).exit_code, kSingular);
}

TEST(CliSolve, MaxIterExitsTwo) {
  auto req = request({{"name", "nonlinear_g_poly"}}, {"ssstar"}, {{"offset_norm", 0.5}, {"seed", 3}});
  req.config.max_iter = 1;
  const auto out = cmd_solve(req);
  EXPECT_EQ(out.exit_code, kNotConverged);
  EXPECT_EQ(out.report.at("termination"), "MaxIter");
  req.config.max_iter = 0;
  EXPECT_EQ(cmd_solve(req).exit_code, kInputError);
}

TEST(CliSolve, ExitCodesAreTotal) {
  EXPECT_EQ(exit_code_for(Termination::ResidualMet), 0);
  EXPECT_EQ(exit_code_for(Termination::MaxIter), 2);
  EXPECT_EQ(exit_code_for(Termination::Diverged), 2);
  EXPECT_EQ(exit_code_for(Termination::SingularSystem), 3);
}

TEST(CliSolve, ReportRoundTrip) {
  TempDir tmp;
  for (const char* alg : {"scd", "gsemi-composite"}) {
    auto req = request({{"name", "box_vi"}, {"params", {{"n", 6}}}, {"seed", 4}}, {alg});
    req.out = tmp.file("report.json");
    req.gamma_cycle = {0.5, 2.0};
    const auto out = cmd_solve(req);
    ASSERT_EQ(out.exit_code, kOk);
    const auto parsed = report_from_json(nlohmann::json::parse(slurp(req.out)));
    const auto again = report_from_json(out.report);
    EXPECT_TRUE(same_reports(parsed, again));
    EXPECT_EQ(report_to_json(parsed), out.report);
  }
  // a report with NaN entries
  auto req = request(kSingularL1, {"scd"}, {5.0});
  req.out = tmp.file("singular.json");
  const auto out = cmd_solve(req);
  const auto parsed = report_from_json(nlohmann::json::parse(slurp(req.out)));
  EXPECT_TRUE(std::isnan(parsed.residual_norms.back()) || parsed.residual_norms.size() == 1);
  EXPECT_TRUE(same_reports(parsed, report_from_json(out.report)));
}

TEST(CliSolve, CsvLayout) {
  TempDir tmp;
  auto req = request(kScalarNcp, {"gsemi-composite"}, {1.0});
  req.out = tmp.file("report.csv");
  req.format = "csv";
  ASSERT_EQ(cmd_solve(req).exit_code, kOk);
  std::istringstream in(slurp(req.out));
  std::string header, row0, row1, extra;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  EXPECT_EQ(header, "k,residual_norm,error,ratio,gamma,algorithm");
  EXPECT_EQ(row0.rfind("0,1,1,,1,gsemi-composite", 0), 0u) << row0;
  EXPECT_EQ(row1, "1,0,0,0,,gsemi-composite");
  EXPECT_FALSE(std::getline(in, extra));
}

TEST(CliSolve, OffsetStartIsReproducible) {
  const auto inst = load_problem({{"name", "ncp_affine"}, {"seed", 9}});
  EXPECT_TRUE(resolve_x0({{"offset_norm", 0.2}, {"seed", 7}}, inst) == offset_start(inst.spec.known_solution, 0.2, 7));
  EXPECT_TRUE(resolve_x0(nullptr, inst) == offset_start(inst.spec.known_solution, 0.1, 9));
}

TEST(CliSolve, InlineProblems) {
  const auto composite = nlohmann::json::parse(R"({"composite": {"F": {"affine": {"M": [[1, 0], [0, 1]], "c": [-1, 1]}},
      "q": {"kind": "nonneg", "dim": 2}}, "known_solution": [1, 0]})");
  const auto out = cmd_solve(request(composite, {"scd"}, {0.0, 0.0}));
  EXPECT_EQ(out.exit_code, kOk);
  const auto last = out.report.at("iterates").back();
  EXPECT_NEAR(last.at(0).get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(last.at(1).get<double>(), 0.0, 1e-12);

  const auto poly = nlohmann::json::parse(R"({"polyhedral": {"F": {"affine": {"M": [[1]], "c": [-2]}},
      "D": {"dim": 1, "ineq_matrix": [[-1]], "ineq_rhs": [0]}}})");
  const auto p = cmd_solve(request(poly, {"ssstar"}, {1.0}));
  EXPECT_EQ(p.exit_code, kOk);
  EXPECT_EQ(p.report.at("iterations"), 1);

  const auto bad_kind = nlohmann::json::parse(R"({"composite": {"F": {"affine": {"M": [[1]]}}, "q": {"kind": "huber", "dim": 1}}})");
  EXPECT_EQ(cmd_solve(request(bad_kind, {"scd"}, {0.0})).exit_code, kInputError);
}

TEST(CliCompare, Equivalences) {
  auto poly = request({{"name", "nonlinear_g_poly"}, {"seed", 2}}, {"ssstar", "gsemi-poly"});
  const auto a = cmd_compare(poly);
  EXPECT_EQ(a.exit_code, kOk);
  EXPECT_LE(a.report.at("max_deviation").get<double>(), 1e-10);

  auto comp = request({{"name", "l1_quadratic"}, {"params", {{"n", 8}}}, {"seed", 2}}, {"scd", "gsemi-composite"});
  comp.deviation_tol = 1e-12;
  const auto b = cmd_compare(comp);
  EXPECT_EQ(b.exit_code, kOk);
  EXPECT_LE(b.report.at("max_deviation").get<double>(), 1e-12);
  EXPECT_EQ(b.report.at("reports").size(), 2u);

  EXPECT_EQ(cmd_compare(request({{"name", "ncp_affine"}}, {"scd", "ssstar"})).exit_code, kInputError);
  EXPECT_EQ(cmd_compare(request({{"name", "ncp_affine"}}, {"scd"})).exit_code, kInputError);
}

TEST(CliCompare, DeviationAboveToleranceExitsFour) {
  // the two polyhedral formulations agree only up to round-off here, so a zero tolerance must fail
  auto req = request({{"name", "nonlinear_g_poly"}, {"seed", 0}}, {"ssstar", "gsemi-poly"});
  const auto loose = cmd_compare(req);
  ASSERT_EQ(loose.exit_code, kOk);
  ASSERT_GT(loose.report.at("max_deviation").get<double>(), 0.0);
  req.deviation_tol = 0.0;
  const auto strict = cmd_compare(req);
  EXPECT_EQ(strict.exit_code, kVerificationFailed);
  EXPECT_FALSE(strict.report.at("equivalent").get<bool>());
}

TEST(CliCompare, IterateDeviation) {
  ConvergenceReport x, y;
  x.iterates = {vec({0}), vec({1})};
  y.iterates = {vec({0}), vec({1.5})};
  EXPECT_NEAR(iterate_deviation(x, y)[1], 0.5 / 1.5, 1e-15);
  y.iterates = {vec({0})};
  EXPECT_EQ(iterate_deviation(x, y).size(), 2u);
  EXPECT_NEAR(iterate_deviation(x, y)[1], 1.0, 1e-15);
}

TEST(CliCheck, RegistryProblemsPass) {
  for (const auto& name : problem_registry()) {
    const auto out = cmd_check(request({{"name", name}, {"seed", 1}}, {}));
    EXPECT_EQ(out.exit_code, kOk) << name << "\n" << out.table;
    EXPECT_TRUE(out.report.at("passed").get<bool>());
    for (const auto& c : out.report.at("checks")) EXPECT_NE(c.at("status"), "fail") << name << " " << c.dump();
  }
}

TEST(CliCheck, DegenerateWitnessIsFlagged) {
  const auto out = cmd_check(request({{"name", "degenerate_witness"}}, {}));
  EXPECT_EQ(out.exit_code, kOk);
  bool flagged = false;
  for (const auto& c : out.report.at("checks")) {
    if (c.at("name") == "polyhedral.nondegeneracy") {
      flagged = c.at("status") == "flagged";
      EXPECT_NE(c.at("detail").get<std::string>().find('0'), std::string::npos);
    }
  }
  EXPECT_TRUE(flagged) << out.table;
}

TEST(CliCheck, InfeasibleSetFailsConstruction) {
  const auto bad = nlohmann::json::parse(R"({"polyhedral": {"F": {"affine": {"M": [[1]], "c": [0]}},
      "D": {"dim": 1, "ineq_matrix": [[1], [-1]], "ineq_rhs": [-1, -1]}}})");
  const auto out = cmd_check(request(bad, {}));
  EXPECT_EQ(out.exit_code, kInputError);
  EXPECT_EQ(out.report.at("checks").at(0).at("status"), "fail");
  EXPECT_FALSE(out.message.empty());
}

TEST(CliProcess, SolveExitCodes) {
  EXPECT_EQ(run_cli("solve --problem ncp_affine --params " + quoted(kScalarNcp.at("params").dump()) +
                    " --x0 '[1]' --algorithm scd")
                .exit_code,
            0);
  const auto unknown = run_cli("solve --problem ncp_affine --algorithm newton");
  EXPECT_EQ(unknown.exit_code, 1);
  EXPECT_NE(unknown.err.find("unknown algorithm"), std::string::npos);
  EXPECT_EQ(run_cli("solve --problem l1_quadratic --params " + quoted(kSingularL1.at("params").dump()) +
                    " --x0 '[5]' --algorithm scd")
                .exit_code,
            3);
  EXPECT_EQ(run_cli("solve --problem nonlinear_g_poly --max-iter 1 --x0 '{\"offset_norm\":0.5,\"seed\":3}' --algorithm ssstar")
                .exit_code,
            2);
  EXPECT_EQ(run_cli("solve --problem ncp_affine --x0 '[1' --algorithm scd").exit_code, 1);
  EXPECT_EQ(run_cli("solve --algorithm scd").exit_code, 1);
  EXPECT_EQ(run_cli("frobnicate").exit_code, 1);
}

TEST(CliProcess, SolvePrintsTableAndWritesReports) {
  TempDir tmp;
  const auto json = run_cli("solve --problem box_vi --seed 3 --gamma 0.5 --algorithm gsemi-composite --out " +
                            tmp.file("r.json"));
  ASSERT_EQ(json.exit_code, 0) << json.err;
  EXPECT_NE(json.out.find("residual"), std::string::npos);
  const auto report = report_from_json(nlohmann::json::parse(slurp(tmp.file("r.json"))));
  EXPECT_EQ(report.algorithm, "gsemi-composite");
  EXPECT_EQ(report.steps.front().gamma, 0.5);

  const auto csv = run_cli("solve --problem box_vi --seed 3 --gamma-cycle 0.5,2 --algorithm scd --format csv --out " +
                           tmp.file("r.csv"));
  ASSERT_EQ(csv.exit_code, 0);
  EXPECT_EQ(slurp(tmp.file("r.csv")).rfind("k,residual_norm,error,ratio,gamma,algorithm\n0,", 0), 0u);
}

TEST(CliProcess, CompareAndCheck) {
  EXPECT_EQ(run_cli("compare --problem nonlinear_g_poly --algorithm ssstar,gsemi-poly").exit_code, 0);
  EXPECT_EQ(run_cli("compare --problem l1_quadratic --algorithm scd,gsemi-composite --deviation-tol 1e-12").exit_code, 0);
  EXPECT_EQ(run_cli("compare --problem ncp_affine --algorithm scd,ssstar").exit_code, 1);
  EXPECT_EQ(run_cli("check --problem ncp_affine").exit_code, 0);
  const auto witness = run_cli("check --problem degenerate_witness");
  EXPECT_EQ(witness.exit_code, 0);
  EXPECT_NE(witness.out.find("flagged"), std::string::npos);

  TempDir tmp;
  std::ofstream(tmp.file("bad.json")) << R"({"polyhedral": {"F": {"affine": {"M": [[1]], "c": [0]}},
      "D": {"dim": 1, "ineq_matrix": [[1], [-1]], "ineq_rhs": [-1, -1]}}})";
  EXPECT_EQ(run_cli("check --problem " + tmp.file("bad.json")).exit_code, 1);
  EXPECT_EQ(run_cli("check --problem " + tmp.file("missing.json")).exit_code, 1);
}
