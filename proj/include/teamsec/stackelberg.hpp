#pragma once

// Leader-follower setting on n >= 3 identical linear servers: one leader with
// mass n-1 on servers {2..n}, a unit mass of selfish followers on {1,2},
// server 1 attacked with strength alpha.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

#include "teamsec/game_model.hpp"

namespace teamsec {

enum class StackelbergBranch { influencing, abandoning };

inline std::string_view to_string(StackelbergBranch b) {
  return b == StackelbergBranch::influencing ? "INFLUENCING" : "ABANDONING";
}

struct KktMultipliers {
  double lambda = 0.0;
  double mu1 = 0.0;  // follower indifference x_1 + alpha vs x_2
  double mu2 = 0.0;  // x_1 >= 0
};

struct StackelbergSolution {
  std::vector<double> leader;
  std::vector<double> follower;
  LoadProfile aggregate;
  double cost = 0.0;
  KktMultipliers multipliers;
  StackelbergBranch branch = StackelbergBranch::influencing;
};

struct KktResiduals {
  double stationarity = 0.0;     // max |.| over the per-server first-order equations
  double complementarity = 0.0;  // max |mu1 (x2 - x1 - alpha)|, |mu2 x1|
  double primal = 0.0;           // mass, x1 >= 0 and x1 + alpha >= x2 violations
  double dual = 0.0;             // negative parts of lambda, mu1, mu2
};

namespace detail {

inline void require_stackelberg_domain(int n, double alpha) {
  if (n < 3) throw DomainError("leader-follower setting needs n >= 3");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be finite and >= 0");
}

inline StackelbergBranch branch_of(const std::vector<double>& follower) {
  return follower[0] > 0.0 ? StackelbergBranch::influencing : StackelbergBranch::abandoning;
}

}  // namespace detail

/// Attack strength at which the optimal leader policy stops congesting
/// server 2: (2n/(n-2)) (2 - sqrt(2n/(n-1))).
inline double stackelberg_switch_alpha(int n) {
  detail::require_stackelberg_domain(n, 0.0);
  const double nn = n;
  return 2.0 * nn / (nn - 2.0) * (2.0 - std::sqrt(2.0 * nn / (nn - 1.0)));
}

/// Follower Nash split of the unit selfish mass between servers 1 and 2.
inline std::vector<double> follower_best_response(const std::vector<double>& leader, int n, double alpha) {
  detail::require_stackelberg_domain(n, alpha);
  std::vector<Violation> vs;
  if (static_cast<int>(leader.size()) != n) vs.push_back({"length-mismatch", std::nullopt, "leader vector length != n"});
  if (vs.empty()) {
    if (leader[0] != 0.0) vs.push_back({"leader-on-attacked", 1, "leader may not load server 1"});
    double sum = 0.0;
    for (std::size_t i = 0; i < leader.size(); ++i) {
      if (!(leader[i] >= 0.0)) vs.push_back({"negative-load", static_cast<int>(i + 1), "leader load must be >= 0"});
      sum += leader[i];
    }
    if (std::abs(sum - (n - 1.0)) > kMassTolerance) vs.push_back({"mass-mismatch", std::nullopt, "leader mass != n-1"});
  }
  if (!vs.empty()) throw ValidationError(std::move(vs));

  std::vector<double> follower(static_cast<std::size_t>(n), 0.0);
  follower[0] = std::clamp((1.0 + leader[1] - alpha) / 2.0, 0.0, 1.0);
  follower[1] = 1.0 - follower[0];
  return follower;
}

/// Leader vector with x_2 = `server2` and the rest split evenly over 3..n.
inline std::vector<double> symmetric_leader(int n, double server2) {
  std::vector<double> leader(static_cast<std::size_t>(n), 0.0);
  leader[1] = server2;
  for (int i = 2; i < n; ++i) leader[static_cast<std::size_t>(i)] = (n - 1.0 - server2) / (n - 2.0);
  return leader;
}

inline std::vector<double> optimal_leader_policy(int n, double alpha) {
  detail::require_stackelberg_domain(n, alpha);
  const double nn = n;
  const double x2 = alpha < stackelberg_switch_alpha(n) ? 1.0 - alpha * (nn - 2.0) / (2.0 * nn) : 1.0 / (nn - 1.0);
  return symmetric_leader(n, x2);
}

inline StackelbergBranch optimal_leader_branch(int n, double alpha) {
  detail::require_stackelberg_domain(n, alpha);
  return alpha < stackelberg_switch_alpha(n) ? StackelbergBranch::influencing : StackelbergBranch::abandoning;
}

/// Optimal leader-follower cost. Below the switch point the influencing
/// expression 1 + alpha/n - alpha^2 (n-2)/(8 n^2) applies; at and above it
/// the leader abandons and the cost is n/(n-1).
inline double stackelberg_cost(int n, double alpha) {
  detail::require_stackelberg_domain(n, alpha);
  const double nn = n;
  if (alpha >= stackelberg_switch_alpha(n)) return nn / (nn - 1.0);
  return std::min(nn / (nn - 1.0), 1.0 + alpha / nn - alpha * alpha * (nn - 2.0) / (8.0 * nn * nn));
}

/// Upper end of the alpha range on which the influencing stationary point
/// keeps x_1 >= 0.
inline double kkt_validity_limit(int n) {
  detail::require_stackelberg_domain(n, 0.0);
  return 4.0 * n / (3.0 * n - 2.0);
}

inline LoadProfile kkt_stationary_profile(int n, double alpha) {
  detail::require_stackelberg_domain(n, alpha);
  if (alpha > kkt_validity_limit(n)) throw DomainError("alpha beyond 4n/(3n-2): stationary point has x_1 < 0");
  const double nn = n;
  std::vector<double> x(static_cast<std::size_t>(n), 1.0 + alpha / (2.0 * nn));
  x[0] = 1.0 - alpha * (3.0 * nn - 2.0) / (4.0 * nn);
  x[1] = 1.0 + alpha * (nn + 2.0) / (4.0 * nn);
  return LoadProfile(renormalized(std::move(x), nn));
}

/// Multipliers read off the first-order system: lambda from the servers
/// beyond 2, mu1 from server 2, mu2 from server 1 (zero whenever the
/// indifference multiplier is active).
inline KktMultipliers recover_multipliers(const LoadProfile& x, double alpha) {
  const int n = x.n();
  detail::require_stackelberg_domain(n, alpha);
  KktMultipliers m;
  double acc = 0.0;
  for (int i = 2; i < n; ++i) acc += 2.0 * x[static_cast<std::size_t>(i)];
  m.lambda = acc / (n - 2.0);
  m.mu1 = 2.0 * x[1] - m.lambda;
  if (std::abs(m.mu1) <= 1e-12) m.mu1 = 0.0;
  m.mu2 = m.mu1 > 0.0 ? 0.0 : m.lambda - 2.0 * x[0] - alpha - m.mu1;
  if (std::abs(m.mu2) <= 1e-12) m.mu2 = 0.0;
  return m;
}

/// Residuals of the first-order system
///   2x_1 + alpha - lambda + mu1 + mu2 = 0,  2x_2 - lambda - mu1 = 0,
///   2x_i - lambda = 0 (i > 2),  mu1 (x_2 - x_1 - alpha) = 0,  mu2 x_1 = 0.
inline KktResiduals kkt_residuals(const LoadProfile& x, double alpha, const KktMultipliers& m) {
  const int n = x.n();
  detail::require_stackelberg_domain(n, alpha);
  KktResiduals r;
  r.stationarity = std::abs(2.0 * x[0] + alpha - m.lambda + m.mu1 + m.mu2);
  r.stationarity = std::max(r.stationarity, std::abs(2.0 * x[1] - m.lambda - m.mu1));
  for (int i = 2; i < n; ++i) r.stationarity = std::max(r.stationarity, std::abs(2.0 * x[static_cast<std::size_t>(i)] - m.lambda));
  r.complementarity = std::max(std::abs(m.mu1 * (x[1] - x[0] - alpha)), std::abs(m.mu2 * x[0]));
  double mass = 0.0;
  for (double v : x.loads()) mass += v;
  r.primal = std::max({std::abs(mass - n), std::max(0.0, -x[0]), std::max(0.0, x[1] - x[0] - alpha)});
  r.dual = std::max({0.0, -m.lambda, -m.mu1, -m.mu2});
  return r;
}

namespace detail {

inline StackelbergSolution assemble(int n, double alpha, std::vector<double> leader) {
  StackelbergSolution s;
  s.follower = follower_best_response(leader, n, alpha);
  std::vector<double> x(leader.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = leader[i] + s.follower[i];
  s.leader = std::move(leader);
  s.aggregate = LoadProfile(renormalized(std::move(x), n));
  s.cost = system_cost(GameInstance::identical_linear(n, alpha), s.aggregate);
  s.multipliers = recover_multipliers(s.aggregate, alpha);
  s.branch = branch_of(s.follower);
  return s;
}

inline double leader_cost(int n, double alpha, double server2) {
  // Closed-form follower response on the symmetric leader family.
  const double x1 = std::clamp((1.0 + server2 - alpha) / 2.0, 0.0, 1.0);
  const double x2 = server2 + (1.0 - x1);
  const double rest = (n - 1.0 - server2) / (n - 2.0);
  return (x1 * x1 + alpha * x1 + x2 * x2 + (n - 2.0) * rest * rest) / n;
}

}  // namespace detail

/// Solution induced by the closed-form optimal leader policy.
inline StackelbergSolution optimal_stackelberg(int n, double alpha) {
  return detail::assemble(n, alpha, optimal_leader_policy(n, alpha));
}

/// Numerical leader optimization over the symmetric family x^m =
/// (0, s, (n-1-s)/(n-2), ...): grid scan of s in [0, n-1], then
/// golden-section refinement around every grid-local minimum. Costs that
/// tie to 1e-15 prefer the branch in which followers abandon server 1, then
/// the smaller s.
inline StackelbergSolution solve_stackelberg_numeric(int n, double alpha, double grid_resolution = 1e-4) {
  detail::require_stackelberg_domain(n, alpha);
  if (!(grid_resolution > 0.0)) throw DomainError("grid resolution must be > 0");
  const double upper = n - 1.0;
  const auto cells = static_cast<std::size_t>(std::ceil(upper / grid_resolution));
  const double h = upper / static_cast<double>(cells);

  std::vector<double> values(cells + 1);
  for (std::size_t k = 0; k <= cells; ++k) values[k] = detail::leader_cost(n, alpha, k * h);

  auto refine = [&](double a, double b) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = detail::leader_cost(n, alpha, c);
    double fd = detail::leader_cost(n, alpha, d);
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
      if (fc <= fd) {
        b = d; d = c; fd = fc;
        c = b - phi * (b - a);
        fc = detail::leader_cost(n, alpha, c);
      } else {
        a = c; c = d; fc = fd;
        d = a + phi * (b - a);
        fd = detail::leader_cost(n, alpha, d);
      }
    }
    return 0.5 * (a + b);
  };

  struct Candidate {
    double s;
    double cost;
    bool abandoning;
  };
  std::vector<Candidate> candidates;
  for (std::size_t k = 0; k <= cells; ++k) {
    const bool left_ok = k == 0 || values[k] <= values[k - 1];
    const bool right_ok = k == cells || values[k] <= values[k + 1];
    if (!(left_ok && right_ok)) continue;
    const double a = k == 0 ? 0.0 : (k - 1) * h;
    const double b = k == cells ? upper : (k + 1) * h;
    double s = refine(a, b);
    // Endpoints of the cell beat a refined interior point only at a boundary minimum.
    for (double edge : {a, b, k * h}) {
      if (detail::leader_cost(n, alpha, edge) < detail::leader_cost(n, alpha, s)) s = edge;
    }
    const double follower1 = std::clamp((1.0 + s - alpha) / 2.0, 0.0, 1.0);
    candidates.push_back({s, detail::leader_cost(n, alpha, s), follower1 <= 0.0});
  }

  const Candidate* best = nullptr;
  for (const auto& c : candidates) {
    if (best == nullptr) { best = &c; continue; }
    const double tie = 1e-15 * std::max(1.0, std::abs(best->cost));
    if (c.cost < best->cost - tie) {
      best = &c;
    } else if (std::abs(c.cost - best->cost) <= tie) {
      if ((c.abandoning && !best->abandoning) || (c.abandoning == best->abandoning && c.s < best->s)) best = &c;
    }
  }
  return detail::assemble(n, alpha, symmetric_leader(n, best->s));
}

}  // namespace teamsec
