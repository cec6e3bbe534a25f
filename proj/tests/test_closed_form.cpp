#include <gtest/gtest.h>

#include "teamsec/closed_form.hpp"
#include "test_oracles.hpp"

using namespace teamsec;

namespace {

const std::vector<int> kNs{2, 3, 5, 10};

std::vector<double> grid(double lo, double hi, int points) {
  std::vector<double> v;
  for (int k = 0; k < points; ++k) v.push_back(lo + (hi - lo) * k / (points - 1));
  return v;
}

std::vector<std::vector<double>> linear_coeffs(int n) { return std::vector<std::vector<double>>(static_cast<std::size_t>(n), {0.0, 1.0}); }

}  // namespace

TEST(PenetrationThreshold, Examples) {
  EXPECT_DOUBLE_EQ(penetration_threshold(2, 1.0), 0.75);
  for (int n : kNs) EXPECT_DOUBLE_EQ(penetration_threshold(n, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(penetration_threshold(2, 4.0), 0.0);
  EXPECT_DOUBLE_EQ(penetration_threshold(2, 9.0), 0.0);
  EXPECT_THROW(penetration_threshold(1, 0.0), DomainError);
  EXPECT_THROW(penetration_threshold(2, -0.5), DomainError);
}

TEST(LinearRegime, KneesCoincideAndLabels) {
  for (int n : kNs) {
    for (double alpha : grid(0.0, 4.0, 25)) {
      const auto reg = linear_regime(n, 0.0, alpha);
      EXPECT_LE(reg.r_bar, 1.0);
      EXPECT_DOUBLE_EQ(reg.lower_knee, reg.selfish_knee);
      EXPECT_GE(reg.selfish_knee, 0.0);
    }
  }
  EXPECT_EQ(linear_regime(2, 0.75, 1.0).label, RegimeLabel::optimal);
  EXPECT_EQ(linear_regime(2, 0.6, 1.0).label, RegimeLabel::intermediate);
  EXPECT_EQ(linear_regime(2, 0.5, 1.0).label, RegimeLabel::selfish);
  EXPECT_EQ(to_string(RegimeLabel::intermediate), "INTERMEDIATE");
  EXPECT_THROW(linear_regime(2, 2.5, 1.0), DomainError);
  EXPECT_THROW(linear_regime(2, -0.1, 1.0), DomainError);
}

TEST(TeamCostLinear, Examples) {
  EXPECT_NEAR(team_cost_linear(2, 1.0, 1.0), 1.4375, 1e-12);
  EXPECT_NEAR(team_cost_linear(2, 0.6, 1.0), 1.46, 1e-12);
  EXPECT_NEAR(team_cost_linear(2, 0.25, 1.0), 1.5, 1e-12);
}

TEST(TeamCostLinear, ContinuousAtKnees) {
  for (int n : kNs) {
    const double nn = n;
    for (double alpha : grid(0.05, 4.0, 25)) {
      const auto reg = linear_regime(n, 0.0, alpha);
      const double inter = [&](double r) { return std::min(nn / (nn - 1), (r * r + r * (alpha * (nn - 1) / nn - 2) + nn) / (nn - 1)); }(reg.r_bar);
      EXPECT_NEAR(inter, team_cost_linear(n, reg.r_bar, alpha), 1e-10) << n << " " << alpha;
      const double inter_low = std::min(nn / (nn - 1), (reg.selfish_knee * reg.selfish_knee +
                                                        reg.selfish_knee * (alpha * (nn - 1) / nn - 2) + nn) / (nn - 1));
      EXPECT_NEAR(inter_low, team_cost_linear(n, reg.selfish_knee, alpha), 1e-10) << n << " " << alpha;
    }
  }
}

TEST(TeamCostLinear, PropertyMonotoneAndBounded) {
  for (int n : kNs) {
    for (double alpha : grid(0.0, 4.0, 25)) {
      double prev = std::numeric_limits<double>::infinity();
      for (double r : grid(0.0, n, 100)) {
        const double c = team_cost_linear(n, r, alpha);
        EXPECT_LE(c, prev + 1e-12);
        EXPECT_LE(c, baseline_cost(n, alpha) + 1e-12);
        EXPECT_LE(c, n / (n - 1.0) + 1e-12);
        EXPECT_GE(c, optimal_cost_linear(n, alpha) - 1e-12);
        prev = c;
      }
    }
  }
}

TEST(OptimalCostLinear, SaturatesPastAbandonment) {
  // Beyond alpha = 2n/(n-1) the optimum empties server 1.
  for (int n : kNs) {
    for (double alpha : grid(0.0, 8.0, 41)) {
      EXPECT_NEAR(optimal_cost_linear(n, alpha), system_cost(GameInstance::identical_linear(n, alpha), optimal_profile_linear(n, alpha)),
                  1e-12);
    }
  }
}

TEST(OptimalProfileLinear, Examples) {
  EXPECT_EQ(optimal_profile_linear(2, 1.0).loads(), (std::vector<double>{0.75, 1.25}));
  EXPECT_EQ(optimal_profile_linear(3, 0.0).loads(), (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(optimal_profile_linear(3, 4.0).loads(), (std::vector<double>{0, 1.5, 1.5}));
  const auto grid_opt = oracles::simplex_grid(linear_coeffs(3), 4.0, 3000);
  EXPECT_NEAR(grid_opt.x[0], 0.0, 1e-12);
}

TEST(OptimalProfileLinear, NoLatticePointBeatsIt) {
  for (int n : {2, 3}) {
    for (double alpha : grid(0.0, 4.0, 9)) {
      const auto best = oracles::simplex_grid(linear_coeffs(n), alpha, n * 1000);
      const double c = system_cost(GameInstance::identical_linear(n, alpha), optimal_profile_linear(n, alpha));
      EXPECT_LE(c, best.cost + 1e-12) << n << " " << alpha;
    }
  }
}

TEST(SelfishProfileLinear, Examples) {
  EXPECT_EQ(selfish_profile_linear(2, 1.0).loads(), (std::vector<double>{0.5, 1.5}));
  EXPECT_EQ(selfish_profile_linear(2, 0.0).loads(), (std::vector<double>{1, 1}));
  const auto x = selfish_profile_linear(3, 2.0);
  EXPECT_EQ(x.loads(), (std::vector<double>{0, 1.5, 1.5}));
  // Abandonment: an empty attacked server still looks no better.
  EXPECT_GE(0.0 + 2.0, x[1]);
  for (int n : kNs) {
    for (double alpha : grid(0.0, 4.0, 25)) {
      EXPECT_NEAR(system_cost(GameInstance::identical_linear(n, alpha), selfish_profile_linear(n, alpha)),
                  selfish_cost_linear(n, alpha), 1e-12);
    }
  }
}

TEST(BaselineCost, Examples) {
  EXPECT_DOUBLE_EQ(baseline_cost(2, 1.0), 1.5);
  EXPECT_DOUBLE_EQ(baseline_cost(7, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(baseline_cost(3, 3.0), 2.0);
}

TEST(ConstrainedTeamCost, Examples) {
  EXPECT_NEAR(constrained_team_cost(3, 1.0), 4.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(constrained_team_cost(3, 2.0), 1.5);
  EXPECT_DOUBLE_EQ(constrained_team_cost(3, 0.0), 1.0);
  EXPECT_THROW(constrained_team_cost(2, 1.0), DomainError);
  for (int n : {3, 5, 10}) {
    for (double alpha : grid(0.0, 4.0, 25)) EXPECT_DOUBLE_EQ(constrained_team_cost(n, alpha), team_cost_linear(n, 0.0, alpha));
  }
}

TEST(TeamProfileLinear, CostMatchesFormula) {
  for (int n : kNs) {
    for (double alpha : grid(0.0, 4.0, 25)) {
      for (double r : grid(0.0, n, 21)) {
        EXPECT_NEAR(system_cost(GameInstance::identical_linear(n, alpha), team_profile_linear(n, r, alpha)),
                    team_cost_linear(n, r, alpha), 1e-12)
            << n << " " << alpha << " " << r;
      }
    }
  }
}
