#include <gtest/gtest.h>

#include <random>

#include "teamsec/closed_form.hpp"
#include "teamsec/equilibrium_solvers.hpp"
#include "test_oracles.hpp"

using namespace teamsec;

namespace {

void expect_loads(const std::vector<double>& got, const std::vector<double>& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "server " << i + 1;
}

// Wardrop condition checked directly on delays.
double wardrop_violation(const GameInstance& g, const ServerSet& access, const std::vector<double>& y,
                         const std::vector<double>& background) {
  double worst = 0.0;
  for (int i : access) {
    const auto ii = static_cast<std::size_t>(i - 1);
    if (y[ii] <= 1e-12) continue;
    for (int j : access) {
      const auto jj = static_cast<std::size_t>(j - 1);
      worst = std::max(worst, g.delay_at(i, background[ii] + y[ii]) - g.delay_at(j, background[jj] + y[jj]));
    }
  }
  return worst;
}

}  // namespace

TEST(SolveWardrop, Examples) {
  expect_loads(solve_wardrop(GameInstance::identical_linear(2, 1.0), ServerSet::all(2), 2.0), {0.5, 1.5}, 1e-10);
  expect_loads(solve_wardrop(GameInstance::identical_linear(4, 0.0), ServerSet::all(4), 4.0), {1, 1, 1, 1}, 1e-10);
  expect_loads(solve_wardrop(GameInstance::identical_linear(3, 6.0), ServerSet::all(3), 3.0), {0, 1.5, 1.5}, 1e-10);
}

TEST(SolveWardrop, MatchesSymmetricBisectionOracle) {
  for (int n : {2, 3, 5}) {
    for (double alpha : {0.0, 0.3, 1.0, 2.5}) {
      const auto want = oracles::symmetric_wardrop(n, alpha, [](double x) { return x + x * x; });
      const auto g = GameInstance::identical(n, DelayFunction{0, 1, 1}, alpha);
      expect_loads(solve_wardrop(g, ServerSet::all(n), n), want, 1e-9);
    }
  }
}

TEST(SolveWardrop, Errors) {
  const auto g = GameInstance::identical_linear(2, 1.0);
  EXPECT_THROW(solve_wardrop(g, ServerSet{}, 1.0), InfeasibleError);
  EXPECT_THROW(solve_wardrop(g, ServerSet::all(2), -1.0), DomainError);
  const std::vector<double> short_bg{0.0};
  EXPECT_THROW(solve_wardrop(g, ServerSet::all(2), 1.0, short_bg), ValidationError);
}

TEST(SolveWardrop, PropertyWardropConditionHolds) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> ns(2, 6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = ns(rng);
    std::vector<DelayFunction> delays;
    for (int i = 0; i < n; ++i) delays.emplace_back(oracles::random_poly(rng, 3, 0.2));
    const GameInstance g(delays, 3.0 * u(rng));
    const double mass = n * u(rng);
    const auto background = oracles::random_simplex(rng, n, n - mass);
    const auto y = solve_wardrop(g, ServerSet::all(n), mass, background);
    EXPECT_NEAR(std::accumulate(y.begin(), y.end(), 0.0), mass, 1e-9);
    EXPECT_LE(wardrop_violation(g, ServerSet::all(n), y, background), 2e-10) << "trial " << trial;
  }
}

TEST(SolveSocialOptimum, Examples) {
  expect_loads(solve_social_optimum(GameInstance::identical_linear(2, 1.0), ServerSet::all(2), 2.0), {0.75, 1.25}, 1e-10);
  expect_loads(solve_social_optimum(GameInstance::identical_linear(3, 1.0), ServerSet::all(3), 3.0),
               {2.0 / 3.0, 7.0 / 6.0, 7.0 / 6.0}, 1e-10);
  expect_loads(solve_social_optimum(GameInstance::identical_linear(3, 0.0), ServerSet::all(3), 3.0), {1, 1, 1}, 1e-10);
}

TEST(SolveSocialOptimum, MatchesSimplexGridOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 2 + trial % 2;
    std::vector<std::vector<double>> coeffs;
    std::vector<DelayFunction> delays;
    for (int i = 0; i < n; ++i) {
      coeffs.push_back(oracles::random_poly(rng, 3, 0.1));
      delays.emplace_back(coeffs.back());
    }
    const double alpha = 0.5 * trial;
    const GameInstance g(delays, alpha);
    const auto y = solve_social_optimum(g, ServerSet::all(n), n);
    const auto grid = oracles::simplex_grid(coeffs, alpha, n == 2 ? 2000 : 1500);
    const double cost = system_cost(g, y);
    EXPECT_LE(cost, grid.cost + 1e-12) << "trial " << trial;
    EXPECT_NEAR(cost, grid.cost, 1e-5) << "trial " << trial;
  }
}

TEST(SolveTeamEquilibrium, Examples) {
  const auto g = GameInstance::identical_linear(2, 1.0);
  auto full = solve_team_equilibrium(g, SchedulerPopulation::full_access(2, 1.0));
  ASSERT_TRUE(full.converged);
  expect_loads(full.aggregate.loads(), {0.75, 1.25}, 1e-7);
  EXPECT_NEAR(full.cost, 1.4375, 1e-9);

  auto low = solve_team_equilibrium(g, SchedulerPopulation::full_access(2, 0.25));
  ASSERT_TRUE(low.converged);
  expect_loads(low.aggregate.loads(), {0.5, 1.5}, 1e-7);
  EXPECT_NEAR(low.cost, 1.5, 1e-9);

  auto con = solve_team_equilibrium(GameInstance::identical_linear(3, 1.0), SchedulerPopulation::constrained(3));
  ASSERT_TRUE(con.converged);
  expect_loads(con.aggregate.loads(), {1.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0}, 1e-7);
  EXPECT_NEAR(con.cost, 4.0 / 3.0, 1e-9);
}

TEST(SolveTeamEquilibrium, ReportInvariants) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const SolveSettings settings;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 4;
    const auto g = GameInstance::identical_linear(n, 4.0 * u(rng));
    const auto pop = SchedulerPopulation::full_access(n, std::vector<double>{0.4 * n * u(rng), 0.4 * n * u(rng)});
    const auto rep = solve_team_equilibrium(g, pop, settings);
    ASSERT_TRUE(rep.converged) << "trial " << trial;
    EXPECT_LE(rep.selfish_residual, settings.tolerance);
    EXPECT_LE(rep.machine_residual, settings.tolerance);
    EXPECT_NEAR(rep.cost, system_cost(g, rep.aggregate), 1e-12);
    for (int i = 2; i < n; ++i) EXPECT_NEAR(rep.aggregate[static_cast<std::size_t>(i)], rep.aggregate[1], 1e-7);
    for (std::size_t k = 0; k < pop.machines.size(); ++k) {
      const auto& b = rep.profile.per_machine[k];
      EXPECT_NEAR(std::accumulate(b.begin(), b.end(), 0.0), pop.machines[k].mass, 1e-9);
    }
    const auto res = equilibrium_residuals(g, pop, rep.profile);
    EXPECT_LE(res.selfish, 10 * settings.tolerance);
    EXPECT_LE(res.machine, 10 * settings.tolerance);
  }
}

TEST(SolveTeamEquilibrium, ZeroMachineMassIsWardrop) {
  const auto g = GameInstance::identical(3, DelayFunction{0, 1, 1}, 1.5);
  const auto rep = solve_team_equilibrium(g, SchedulerPopulation::full_access(3, 0.0));
  ASSERT_TRUE(rep.converged);
  EXPECT_NEAR(rep.cost, system_cost(g, solve_wardrop(g, ServerSet::all(3), 3.0)), 1e-8);
}

TEST(SolveTeamEquilibrium, ZeroSelfishMassIsSocialOptimum) {
  const GameInstance g({DelayFunction{0, 1, 1}, DelayFunction{0, 2}, DelayFunction{0, 0.5, 0, 1}}, 0.8);
  const auto rep = solve_team_equilibrium(g, SchedulerPopulation::full_access(3, 3.0));
  ASSERT_TRUE(rep.converged);
  EXPECT_NEAR(rep.cost, system_cost(g, solve_social_optimum(g, ServerSet::all(3), 3.0)), 1e-8);
}

TEST(SolveTeamEquilibrium, RandomStartsReachSameCost) {
  const auto g = GameInstance::identical_linear(3, 1.0);
  const auto pop = SchedulerPopulation::full_access(3, std::vector<double>{0.3, 0.5});
  const double want = team_cost_linear(3, 0.8, 1.0);
  std::mt19937_64 rng(17);
  for (int s = 0; s < 5; ++s) {
    const auto rep = solve_team_equilibrium(g, pop, {}, random_initial_profile(g, pop, rng));
    ASSERT_TRUE(rep.converged);
    EXPECT_NEAR(rep.cost, want, 1e-8);
  }
}

TEST(SolveTeamEquilibrium, NonConvergenceIsReported) {
  SolveSettings s;
  s.max_outer_iterations = 1;
  const auto rep = solve_team_equilibrium(GameInstance::identical_linear(2, 1.0), SchedulerPopulation::full_access(2, 0.6), s);
  EXPECT_FALSE(rep.converged);
  EXPECT_EQ(rep.iterations, 1);
}

TEST(SolveTeamEquilibrium, RejectsBadSettingsAndPopulation) {
  SolveSettings s;
  s.damping = 0.0;
  const auto g = GameInstance::identical_linear(2, 1.0);
  EXPECT_THROW(solve_team_equilibrium(g, SchedulerPopulation::full_access(2, 1.0), s), DomainError);
  EXPECT_THROW(solve_team_equilibrium(g, SchedulerPopulation::full_access(2, 3.0)), ValidationError);
}

TEST(SolveSelfishEquilibrium, ConstrainedMatchesClosedForm) {
  for (double alpha : {0.5, 1.0, 2.0}) {
    const auto rep = solve_selfish_equilibrium(GameInstance::identical_linear(3, alpha), SchedulerPopulation::constrained(3));
    ASSERT_TRUE(rep.converged);
    EXPECT_NEAR(rep.cost, constrained_team_cost(3, alpha), 1e-8);
  }
}

TEST(EquilibriumResiduals, Examples) {
  const auto g0 = GameInstance::identical_linear(2, 0.0);
  const auto full = SchedulerPopulation::full_access(2, 1.0);
  const auto r0 = equilibrium_residuals(g0, full, DisaggregatedProfile{{0.5, 0.5}, {{0.5, 0.5}}});
  EXPECT_NEAR(r0.selfish, 0.0, 1e-15);
  EXPECT_NEAR(r0.machine, 0.0, 1e-12);

  const auto g1 = GameInstance::identical_linear(2, 1.0);
  const auto r1 = equilibrium_residuals(g1, full, DisaggregatedProfile{{0.0, 1.0}, {{0.75, 0.25}}});
  EXPECT_NEAR(r1.selfish, 0.0, 1e-15);
  EXPECT_NEAR(r1.machine, 0.0, 1e-12);

  const auto none = SchedulerPopulation::full_access(2, 0.0);
  const auto r2 = equilibrium_residuals(g1, none, DisaggregatedProfile{{1.0, 1.0}, {}});
  EXPECT_NEAR(r2.selfish, 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(r2.machine, 0.0);
}

TEST(EquilibriumResiduals, Errors) {
  const auto g = GameInstance::identical_linear(2, 1.0);
  const auto full = SchedulerPopulation::full_access(2, 1.0);
  EXPECT_THROW(equilibrium_residuals(g, full, DisaggregatedProfile{{0.5, 0.5, 0.0}, {{0.5, 0.5}}}), ValidationError);
  EXPECT_THROW(equilibrium_residuals(g, full, DisaggregatedProfile{{0.5, 0.5}, {}}), ValidationError);
  SchedulerPopulation narrow = full;
  narrow.machines[0].access = ServerSet{2};
  EXPECT_THROW(equilibrium_residuals(g, narrow, DisaggregatedProfile{{0.5, 0.5}, {{0.5, 0.5}}}), ValidationError);
}
