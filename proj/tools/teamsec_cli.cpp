// Command-line front end: solve, sweep, figure, verify.
//
// Exit codes: 0 success, 1 validation/format error, 2 solver
// non-convergence or inconclusive verdict, 3 usage error.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "teamsec/teamsec.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNonConvergence = 2;
constexpr int kExitUsage = 3;

struct CommonFlags {
  std::optional<double> tol;
  std::optional<int> max_iters;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

void apply_settings(teamsec::SolveSettings& s, const CommonFlags& flags) {
  if (const char* env = std::getenv("TEAMSEC_TOL")) {
    try {
      s.tolerance = std::stod(env);
    } catch (const std::exception&) {
      throw teamsec::ValidationError("bad-env", std::string("TEAMSEC_TOL is not a number: ") + env);
    }
  }
  if (flags.tol) s.tolerance = *flags.tol;
  if (flags.max_iters) s.max_outer_iterations = *flags.max_iters;
  s.check();
}

void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw teamsec::FormatError("cannot write '" + path + "'");
  out << text;
}

void print_vector(std::ostream& os, const char* label, const std::vector<double>& v) {
  os << "  " << label << ":";
  for (double x : v) os << ' ' << teamsec::format_number(x);
  os << '\n';
}

int run_solve(const std::string& path, const CommonFlags& flags, bool numeric) {
  auto sc = teamsec::load_scenario(path);
  apply_settings(sc.settings, flags);
  const int n = sc.instance.n();
  std::cout << "scenario: " << sc.name << "\n  n: " << n << "\n  alpha: " << teamsec::format_number(sc.instance.alpha())
            << "\n  machine mass r: " << teamsec::format_number(sc.population.machine_mass()) << '\n';

  if (sc.mode == teamsec::ScenarioMode::stackelberg) {
    const auto st = numeric ? teamsec::solve_stackelberg_numeric(n, sc.instance.alpha())
                            : teamsec::optimal_stackelberg(n, sc.instance.alpha());
    std::cout << "leader-follower equilibrium (" << (numeric ? "numeric" : "closed form") << ")\n"
              << "  branch: " << teamsec::to_string(st.branch) << "\n  cost: " << teamsec::format_number(st.cost) << '\n';
    print_vector(std::cout, "aggregate", st.aggregate.loads());
    print_vector(std::cout, "leader", st.leader);
    print_vector(std::cout, "follower", st.follower);
    std::cout << "  multipliers: lambda " << teamsec::format_number(st.multipliers.lambda) << " mu1 "
              << teamsec::format_number(st.multipliers.mu1) << " mu2 " << teamsec::format_number(st.multipliers.mu2)
              << '\n';
    return 0;
  }

  std::optional<teamsec::DisaggregatedProfile> initial;
  if (flags.seed) {
    std::mt19937_64 rng(*flags.seed);
    initial = teamsec::random_initial_profile(sc.instance, sc.population, rng);
  }
  const auto rep = teamsec::solve_team_equilibrium(sc.instance, sc.population, sc.settings, initial);
  std::cout << "team equilibrium\n  converged: " << (rep.converged ? "yes" : "no") << "\n  iterations: " << rep.iterations
            << "\n  cost: " << teamsec::format_number(rep.cost)
            << "\n  selfish residual: " << teamsec::format_number(rep.selfish_residual)
            << "\n  machine residual: " << teamsec::format_number(rep.machine_residual) << '\n';
  print_vector(std::cout, "aggregate", rep.aggregate.loads());
  print_vector(std::cout, "selfish", rep.profile.selfish);
  for (std::size_t k = 0; k < rep.profile.per_machine.size(); ++k) {
    const std::string label = "machine " + std::to_string(k + 1);
    print_vector(std::cout, label.c_str(), rep.profile.per_machine[k]);
  }
  return rep.converged ? 0 : kExitNonConvergence;
}

int run_sweep(const std::string& path, const std::string& out, const CommonFlags& flags, bool numeric) {
  auto sc = teamsec::load_scenario(path);
  apply_settings(sc.settings, flags);
  teamsec::SweepOptions opts;
  opts.threads = flags.threads;
  opts.numeric = numeric;
  const auto rows = teamsec::run_sweep(sc, opts);
  write_output(out, teamsec::sweep_csv(rows, sc.instance.n()));
  for (const auto& row : rows) {
    if (!row.converged) return kExitNonConvergence;
  }
  return 0;
}

int run_figure(const std::string& id, const std::string& out, const CommonFlags& flags, bool numeric,
               const std::vector<double>& alphas) {
  teamsec::FigureId fig;
  try {
    fig = teamsec::parse_figure_id(id);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  teamsec::FigureOptions opts;
  opts.numeric = numeric;
  opts.threads = flags.threads;
  if (!alphas.empty()) opts.fig2_alphas = alphas;
  apply_settings(opts.settings, flags);
  write_output(out, teamsec::figure_data(fig, opts));
  return 0;
}

int run_verify(const std::string& path, const CommonFlags& flags, double verdict_tol, std::optional<double> resolution) {
  auto sc = teamsec::load_scenario(path);
  apply_settings(sc.settings, flags);
  const int n = sc.instance.n();
  teamsec::OracleOptions opts;
  opts.settings = sc.settings;
  opts.seed = flags.seed.value_or(0);
  opts.threads = flags.threads;
  opts.resolution = resolution.value_or(n <= 3 ? 1e-3 : 1e-2);
  const auto alphas = sc.sweep.alphas.value_or(teamsec::detail::linspace(0.0, 3.0, 13));

  const auto strong = teamsec::verify_strong_security(sc.instance, sc.population, alphas, verdict_tol, opts);
  const auto weak = teamsec::detail::classify(strong.points, verdict_tol, teamsec::detail::GapKind::weak);
  std::cout << "scenario: " << sc.name << "\n  alphas: " << alphas.size() << " points in ["
            << teamsec::format_number(alphas.front()) << ", " << teamsec::format_number(alphas.back()) << "]\n";
  if (!strong.conclusive) {
    std::cout << "verdict: inconclusive (team solver did not converge at some alpha)\n";
    return kExitNonConvergence;
  }
  std::cout << "  strong: " << (strong.strong ? "true" : "false") << " (max gap to optimum "
            << teamsec::format_number(strong.gap) << " at alpha " << teamsec::format_number(strong.worst_alpha) << ")\n"
            << "  weak: " << (weak.weak ? "true" : "false") << " (max gap to unresponsive baseline "
            << teamsec::format_number(weak.gap) << " at alpha " << teamsec::format_number(weak.worst_alpha) << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Team equilibria, leader-follower equilibria and emergent-security checks for attacked parallel servers"};
  app.require_subcommand(1);

  CommonFlags flags;
  bool numeric = false;
  std::string scenario_path;
  std::string out_path;
  std::string figure_id;
  std::vector<double> fig2_alphas;
  double verdict_tol = 1e-5;
  std::optional<double> resolution;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--tol", flags.tol, "solver residual tolerance (default 1e-10, env TEAMSEC_TOL)");
    sub->add_option("--max-iters", flags.max_iters, "maximum outer best-response iterations");
    sub->add_option("--seed", flags.seed, "seed for random initial profiles");
    sub->add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* solve = app.add_subcommand("solve", "solve one scenario and print the equilibrium");
  solve->add_option("scenario", scenario_path)->required();
  solve->add_flag("--numeric", numeric, "leader-follower scenarios: numeric leader search");
  add_common(solve);

  auto* sweep = app.add_subcommand("sweep", "run the scenario's alpha x r sweep to CSV");
  sweep->add_option("scenario", scenario_path)->required();
  sweep->add_option("--out", out_path, "output CSV path ('-' for stdout)")->required();
  sweep->add_flag("--numeric", numeric, "leader-follower scenarios: numeric leader search");
  add_common(sweep);

  auto* figure = app.add_subcommand("figure", "emit figure data (fig2, fig4, fig5) as CSV");
  figure->add_option("figure", figure_id)->required();
  figure->add_option("--out", out_path, "output CSV path ('-' for stdout)")->required();
  figure->add_flag("--numeric", numeric, "use the numeric solvers instead of closed forms");
  figure->add_option("--alphas", fig2_alphas, "fig2 attack strengths (default 0.5 1 2 4)");
  add_common(figure);

  auto* verify = app.add_subcommand("verify", "strong/weak emergent-security verdicts on an alpha grid");
  verify->add_option("scenario", scenario_path)->required();
  verify->add_option("--verdict-tol", verdict_tol, "cost tolerance for the verdicts");
  verify->add_option("--resolution", resolution, "lattice spacing of the optimum search");
  add_common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*solve) return run_solve(scenario_path, flags, numeric);
    if (*sweep) return run_sweep(scenario_path, out_path, flags, numeric);
    if (*figure) return run_figure(figure_id, out_path, flags, numeric, fig2_alphas);
    if (*verify) return run_verify(scenario_path, flags, verdict_tol, resolution);
  } catch (const teamsec::ValidationError& e) {
    std::cerr << "validation error:\n";
    for (const auto& v : e.violations()) {
      std::cerr << "  " << v.code;
      if (v.index) std::cerr << " (index " << *v.index << ")";
      std::cerr << ": " << v.message << '\n';
    }
    return kExitValidation;
  } catch (const teamsec::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const teamsec::DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const teamsec::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const teamsec::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}
