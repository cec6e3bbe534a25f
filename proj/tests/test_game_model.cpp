#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "teamsec/game_model.hpp"
#include "test_oracles.hpp"

using namespace teamsec;

namespace {

bool has_code(const std::vector<Violation>& vs, const std::string& code) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.code == code; });
}

}  // namespace

TEST(EvalDelay, Examples) {
  EXPECT_DOUBLE_EQ(eval_delay(DelayFunction{0, 1}, 1.5, 0.0), 1.5);
  EXPECT_DOUBLE_EQ(eval_delay(DelayFunction{0, 1}, 0.5, 1.0), 1.5);
  // Oracle: explicit powers 0 + 1*2 + 2*4.
  EXPECT_DOUBLE_EQ(oracles::poly_by_powers({0, 1, 2}, 2.0), 10.0);
  EXPECT_DOUBLE_EQ(eval_delay(DelayFunction{0, 1, 2}, 2.0, 0.0), 10.0);
}

TEST(EvalDelay, NegativeLoadIsDomainError) {
  EXPECT_THROW(eval_delay(DelayFunction{0, 1}, -0.1), DomainError);
  EXPECT_THROW(eval_marginal_cost(DelayFunction{0, 1}, -1e-12), DomainError);
}

TEST(DelayFunction, RejectsNegativeCoefficients) {
  EXPECT_THROW(DelayFunction({0.0, -1.0}), DomainError);
  EXPECT_NO_THROW(DelayFunction({0.0, 0.0, 3.0}));
}

TEST(EvalMarginalCost, Examples) {
  EXPECT_DOUBLE_EQ(eval_marginal_cost(DelayFunction{0, 1}, 1.0, 0.0), 2.0);
  // d/dx[x * x] + 1 = 2x + 1 at 0.75, cross-checked by finite differences.
  const double fd = oracles::central_difference([](double x) { return x * x; }, 0.75) + 1.0;
  EXPECT_NEAR(fd, 2.5, 1e-8);
  EXPECT_DOUBLE_EQ(eval_marginal_cost(DelayFunction{0, 1}, 0.75, 1.0), 2.5);
  for (double x : {0.0, 0.3, 7.0}) EXPECT_DOUBLE_EQ(eval_marginal_cost(DelayFunction{2.5}, x, 0.5), 3.0);
}

TEST(EvalMarginalCost, PropertyDominatesDelayAndMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> xs(0.05, 3.0);
  std::uniform_real_distribution<double> bonus(0.0, 2.0);
  for (int trial = 0; trial < 500; ++trial) {
    const auto c = oracles::random_poly(rng, 4);
    const DelayFunction f(c);
    const double x = xs(rng);
    const double b = bonus(rng);
    const double mc = eval_marginal_cost(f, x, b);
    EXPECT_GE(mc, eval_delay(f, x, b));
    const double fd = oracles::central_difference([&](double y) { return y * oracles::poly_by_powers(c, y); }, x) + b;
    EXPECT_NEAR(mc, fd, 1e-6 * std::max(1.0, std::abs(fd))) << "trial " << trial;
  }
}

TEST(DelayFunction, UpperInverse) {
  const DelayFunction lin{0, 1};
  EXPECT_DOUBLE_EQ(lin.upper_inverse(2.5), 2.5);
  EXPECT_TRUE(std::isinf(lin.upper_inverse(-1.0)) && lin.upper_inverse(-1.0) < 0);
  const DelayFunction flat{3.0};
  EXPECT_TRUE(std::isinf(flat.upper_inverse(3.0)) && flat.upper_inverse(3.0) > 0);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> xs(0.0, 5.0);
  for (int trial = 0; trial < 300; ++trial) {
    auto c = oracles::random_poly(rng, 4);
    if (c.size() < 2) c.push_back(0.5);
    const DelayFunction f(c);
    const double x = xs(rng);
    EXPECT_NEAR(f.upper_inverse(f.value(x)), x, 1e-9 * std::max(1.0, x));
  }
}

TEST(SystemCost, Examples) {
  const auto g0 = GameInstance::identical_linear(2, 0.0);
  EXPECT_DOUBLE_EQ(system_cost(g0, LoadProfile({1.0, 1.0})), 1.0);
  const auto g1 = GameInstance::identical_linear(2, 1.0);
  EXPECT_DOUBLE_EQ(system_cost(g1, LoadProfile({0.75, 1.25})), 1.4375);
  EXPECT_DOUBLE_EQ(system_cost(g1, LoadProfile({0.5, 1.5})), 1.5);
}

TEST(SystemCost, ValidationErrors) {
  const auto g = GameInstance::identical_linear(2, 1.0);
  EXPECT_THROW(system_cost(g, LoadProfile({1.0, 1.0, 1.0})), ValidationError);
  const std::vector<double> bad_mass{1.0, 1.1};
  EXPECT_THROW(system_cost(g, bad_mass), ValidationError);
  EXPECT_THROW(LoadProfile({2.5, -0.5}), ValidationError);
}

TEST(SystemCost, PropertyAttackIdentityAndPermutationInvariance) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> ns(2, 6);
  std::uniform_real_distribution<double> alphas(0.0, 5.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = ns(rng);
    std::vector<DelayFunction> delays;
    for (int i = 0; i < n; ++i) delays.emplace_back(oracles::random_poly(rng, 3, 0.5));
    const double alpha = alphas(rng);
    const auto x = oracles::random_simplex(rng, n, n);
    const GameInstance attacked(delays, alpha, 1);
    const double with = system_cost(attacked, x);
    const double without = system_cost(attacked.with_alpha(0.0), x);
    EXPECT_NEAR(with, without + x[0] * alpha / n, 1e-12);

    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<DelayFunction> pd(delays.size());
    std::vector<double> px(x.size());
    int target = 1;
    for (int i = 0; i < n; ++i) {
      pd[static_cast<std::size_t>(perm[i])] = delays[static_cast<std::size_t>(i)];
      px[static_cast<std::size_t>(perm[i])] = x[static_cast<std::size_t>(i)];
      if (i == 0) target = perm[i] + 1;
    }
    EXPECT_NEAR(system_cost(GameInstance(pd, alpha, target), px), with, 1e-12);
  }
}

TEST(Validate, WellFormed) {
  const auto g = GameInstance::identical_linear(3, 1.0);
  EXPECT_TRUE(validate(g, SchedulerPopulation::full_access(3, 1.5)).empty());
  EXPECT_TRUE(validate(g, SchedulerPopulation::constrained(3)).empty());
}

TEST(Validate, InterceptMismatch) {
  const GameInstance g({DelayFunction{0, 1}, DelayFunction{1, 1}}, 0.0);
  const auto vs = validate(g, SchedulerPopulation::full_access(2, 1.0));
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].code, "intercept-mismatch");
  EXPECT_EQ(vs[0].index, 2);
}

TEST(Validate, MassOverflowAndAccessProblems) {
  const auto g = GameInstance::identical_linear(2, 0.0);
  EXPECT_TRUE(has_code(validate(g, SchedulerPopulation::full_access(2, 2.1)), "mass-overflow"));

  SchedulerPopulation p = SchedulerPopulation::full_access(2, 1.0);
  p.machines[0].access = ServerSet{1, 3};
  EXPECT_TRUE(has_code(validate(g, p), "bad-server-index"));
  p.machines[0].access = ServerSet{};
  EXPECT_TRUE(has_code(validate(g, p), "empty-access"));

  SchedulerPopulation q = SchedulerPopulation::full_access(2, 1.0);
  q.selfish_access = ServerSet{};
  EXPECT_TRUE(has_code(validate(g, q), "empty-access"));

  EXPECT_TRUE(has_code(validate(GameInstance::identical_linear(2, -1.0), q), "negative-alpha"));
  EXPECT_TRUE(has_code(validate(GameInstance(g.delays(), 0.0, 5), SchedulerPopulation::full_access(2, 1.0)),
                       "bad-attack-target"));
}

TEST(DisaggregatedProfile, AggregateSumsBlocks) {
  DisaggregatedProfile p{{0.0, 1.0}, {{0.75, 0.25}}};
  const auto x = p.aggregate();
  EXPECT_DOUBLE_EQ(x[0], 0.75);
  EXPECT_DOUBLE_EQ(x[1], 1.25);
}

TEST(SchedulerPopulation, RescaleKeepsProportions) {
  SchedulerPopulation p = SchedulerPopulation::full_access(3, std::vector<double>{1.0, 3.0});
  const auto q = p.with_machine_mass(3, 2.0);
  ASSERT_EQ(q.machines.size(), 2u);
  EXPECT_DOUBLE_EQ(q.machines[0].mass, 0.5);
  EXPECT_DOUBLE_EQ(q.machines[1].mass, 1.5);
  EXPECT_DOUBLE_EQ(q.selfish_mass(3), 1.0);
  EXPECT_TRUE(p.with_machine_mass(3, 0.0).machines.empty());
}
