#include "gesolve/cli.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

struct Flags {
  std::string problem;
  std::string params;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> algorithms;
  std::optional<double> gamma;
  std::vector<double> gamma_cycle;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::string x0;
  std::string out;
  std::string format = "json";
  std::string selector = "lower";
  double deviation_tol = 1e-10;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--problem", f.problem, "registry name, inline JSON, or problem file")->required();
  cmd->add_option("--params", f.params, "JSON object of generator parameters");
  cmd->add_option("--seed", f.seed, "generator seed");
  auto* g = cmd->add_option("--gamma", f.gamma, "constant prox parameter (composite)");
  cmd->add_option("--gamma-cycle", f.gamma_cycle, "prox parameters cycled per iteration")->delimiter(',')->excludes(g);
  cmd->add_option("--selector", f.selector, "Bouligand selector at kinks: lower or upper");
  cmd->add_option("--out", f.out, "report file");
  cmd->add_option("--format", f.format, "report format: json or csv");
}

void add_run(CLI::App* cmd, Flags& f) {
  cmd->add_option("--tol", f.tol, "residual tolerance");
  cmd->add_option("--max-iter", f.max_iter, "iteration cap");
  cmd->add_option("--x0", f.x0, "start: JSON vector or {\"offset_norm\": r, \"seed\": s}");
}

gesolve::cli::Outcome dispatch(const std::string& command, const Flags& f) {
  using namespace gesolve::cli;
  RunRequest req;
  try {
    req.problem = resolve_problem_ref(f.problem, f.params, f.seed);
    if (!f.x0.empty()) req.x0 = nlohmann::json::parse(f.x0);
  } catch (const gesolve::Error& e) {
    return {kInputError, nullptr, "", std::string("error: ") + e.what()};
  } catch (const nlohmann::json::exception& e) {
    return {kInputError, nullptr, "", std::string("error: malformed JSON: ") + e.what()};
  }
  req.algorithms = f.algorithms;
  if (f.tol) req.config.tol_residual = *f.tol;
  if (f.max_iter) req.config.max_iter = *f.max_iter;
  if (f.gamma) req.gamma_cycle = {*f.gamma};
  if (!f.gamma_cycle.empty()) req.gamma_cycle = f.gamma_cycle;
  req.selector = f.selector;
  req.deviation_tol = f.deviation_tol;
  req.out = f.out;
  req.format = f.format;
  if (command == "solve") return cmd_solve(req);
  if (command == "compare") return cmd_compare(req);
  return cmd_check(req);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Newton-type solvers for generalized equations"};
  app.require_subcommand(1);
  Flags solve_flags, compare_flags, check_flags;

  auto* solve = app.add_subcommand("solve", "run one algorithm and report its iterations");
  add_common(solve, solve_flags);
  add_run(solve, solve_flags);
  solve->add_option("--algorithm", solve_flags.algorithms, "ssstar, gsemi-poly, scd or gsemi-composite")
      ->required()
      ->expected(1);

  auto* compare = app.add_subcommand("compare", "run two algorithms and diff their iterates");
  add_common(compare, compare_flags);
  add_run(compare, compare_flags);
  compare->add_option("--algorithm", compare_flags.algorithms, "two algorithms, comma separated or repeated")
      ->required()
      ->delimiter(',');
  compare->add_option("--deviation-tol", compare_flags.deviation_tol, "largest accepted relative deviation");

  auto* check = app.add_subcommand("check", "run invariant checks on a problem");
  add_common(check, check_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gesolve::cli::kInputError;
  }

  std::string command;
  const Flags* flags = nullptr;
  if (solve->parsed()) command = "solve", flags = &solve_flags;
  else if (compare->parsed()) command = "compare", flags = &compare_flags;
  else command = "check", flags = &check_flags;

  const auto outcome = dispatch(command, *flags);
  std::cout << outcome.table;
  if (!outcome.message.empty()) std::cerr << outcome.message << '\n';
  return outcome.exit_code;
}
