#pragma once

// Closed forms for n identical servers with tau_i(x) = x, server 1 attacked
// with strength alpha.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "teamsec/game_model.hpp"

namespace teamsec {

enum class RegimeLabel { optimal, intermediate, selfish };

inline std::string_view to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::optimal: return "OPTIMAL";
    case RegimeLabel::intermediate: return "INTERMEDIATE";
    case RegimeLabel::selfish: return "SELFISH";
  }
  return "?";
}

struct LinearRegime {
  RegimeLabel label = RegimeLabel::optimal;
  double r_bar = 1.0;         // penetration threshold for global optimality
  double lower_knee = 1.0;    // r_bar - alpha(n-1)/(2n)
  double selfish_knee = 1.0;  // 1 - alpha(n-1)/n
};

namespace detail {

inline void require_linear_domain(int n, double alpha, int min_n = 2) {
  if (n < min_n) throw DomainError("closed form needs n >= " + std::to_string(min_n));
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("closed form needs finite alpha >= 0");
}

inline double clamp_threshold(double value, int n) { return std::clamp(value, 0.0, static_cast<double>(n)); }

}  // namespace detail

/// Smallest machine mass at which every team equilibrium is optimal.
inline double penetration_threshold(int n, double alpha) {
  detail::require_linear_domain(n, alpha);
  const double nn = n;
  return detail::clamp_threshold(1.0 - alpha * (nn - 1.0) / (2.0 * nn), n);
}

inline LinearRegime linear_regime(int n, double r, double alpha) {
  detail::require_linear_domain(n, alpha);
  if (!(r >= 0.0 && r <= n)) throw DomainError("machine mass r must lie in [0, n]");
  const double nn = n;
  const double raw_bar = 1.0 - alpha * (nn - 1.0) / (2.0 * nn);
  LinearRegime out;
  out.r_bar = detail::clamp_threshold(raw_bar, n);
  out.lower_knee = detail::clamp_threshold(raw_bar - alpha * (nn - 1.0) / (2.0 * nn), n);
  out.selfish_knee = detail::clamp_threshold(1.0 - alpha * (nn - 1.0) / nn, n);
  if (r >= out.r_bar) {
    out.label = RegimeLabel::optimal;
  } else if (r <= out.selfish_knee) {
    out.label = RegimeLabel::selfish;
  } else {
    out.label = RegimeLabel::intermediate;
  }
  return out;
}

/// Minimum attacked cost over the whole simplex. Past alpha = 2n/(n-1) the
/// attacked server is empty at the optimum and the cost saturates at
/// n/(n-1); below it the quadratic expression applies.
inline double optimal_cost_linear(int n, double alpha) {
  detail::require_linear_domain(n, alpha);
  const double nn = n;
  if (alpha >= 2.0 * nn / (nn - 1.0)) return nn / (nn - 1.0);
  return std::min(nn / (nn - 1.0), 1.0 + alpha / nn - alpha * alpha * (nn - 1.0) / (4.0 * nn * nn));
}

inline double baseline_cost(int n, double alpha) {
  detail::require_linear_domain(n, alpha);
  return 1.0 + alpha / static_cast<double>(n);
}

inline double selfish_cost_linear(int n, double alpha) {
  detail::require_linear_domain(n, alpha);
  const double nn = n;
  return std::min(nn / (nn - 1.0), 1.0 + alpha / nn);
}

inline double team_cost_linear(int n, double r, double alpha) {
  const auto regime = linear_regime(n, r, alpha);
  const double nn = n;
  switch (regime.label) {
    case RegimeLabel::optimal:
      return optimal_cost_linear(n, alpha);
    case RegimeLabel::intermediate:
      return std::min(nn / (nn - 1.0), (r * r + r * (alpha * (nn - 1.0) / nn - 2.0) + nn) / (nn - 1.0));
    case RegimeLabel::selfish:
      return selfish_cost_linear(n, alpha);
  }
  return nn / (nn - 1.0);
}

namespace detail {

inline LoadProfile attacked_split(int n, double x1) {
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  x[0] = x1;
  for (int i = 1; i < n; ++i) x[static_cast<std::size_t>(i)] = (n - x1) / (n - 1.0);
  return LoadProfile(std::move(x));
}

}  // namespace detail

inline LoadProfile optimal_profile_linear(int n, double alpha) {
  detail::require_linear_domain(n, alpha);
  const double nn = n;
  return detail::attacked_split(n, std::max(0.0, 1.0 - alpha * (nn - 1.0) / (2.0 * nn)));
}

inline LoadProfile selfish_profile_linear(int n, double alpha) {
  detail::require_linear_domain(n, alpha);
  const double nn = n;
  return detail::attacked_split(n, std::max(0.0, 1.0 - alpha * (nn - 1.0) / nn));
}

/// Aggregate team-equilibrium profile for the given regime: in the
/// intermediate regime all machine mass sits on the attacked server.
inline LoadProfile team_profile_linear(int n, double r, double alpha) {
  const auto regime = linear_regime(n, r, alpha);
  switch (regime.label) {
    case RegimeLabel::optimal: return optimal_profile_linear(n, alpha);
    case RegimeLabel::intermediate: return detail::attacked_split(n, r);
    case RegimeLabel::selfish: return selfish_profile_linear(n, alpha);
  }
  return optimal_profile_linear(n, alpha);
}

/// Cost when selfish jobs reach only {1,2} and machines only {2..n}; the
/// machines cannot push load onto the attacked server, so the outcome is the
/// fully selfish one.
inline double constrained_team_cost(int n, double alpha) {
  detail::require_linear_domain(n, alpha, 3);
  return selfish_cost_linear(n, alpha);
}

}  // namespace teamsec
