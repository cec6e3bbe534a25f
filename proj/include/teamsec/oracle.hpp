#pragma once

// Brute-force checks that do not share code paths with the solvers: simplex
// lattice search for optima, leader lattice search for the leader-follower
// game, and the strong/weak security classifiers built on them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "teamsec/equilibrium_solvers.hpp"
#include "teamsec/game_model.hpp"

namespace teamsec {

class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

inline constexpr double kMaxLatticePoints = 1e8;

struct GridOptimum {
  LoadProfile profile;
  double cost = 0.0;
};

namespace detail {

inline double binomial(double n, double k) {
  double out = 1.0;
  for (int i = 1; i <= static_cast<int>(k); ++i) out *= (n - k + i) / i;
  return out;
}

// Lattice points of {k in N^parts : sum k = units}.
inline double lattice_size(long long units, int parts) {
  return binomial(static_cast<double>(units + parts - 1), static_cast<double>(parts - 1));
}

struct LatticeBest {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<long long> point;
};

// Minimizes sum_i table[i][k_i] over compositions of `units` into
// table.size() parts whose first coordinate lies in [first_lo, first_hi).
// Visits points in lexicographic order and keeps the first minimizer.
inline LatticeBest lattice_min(const std::vector<std::vector<double>>& table, long long units, long long first_lo,
                               long long first_hi) {
  const int parts = static_cast<int>(table.size());
  LatticeBest best;
  std::vector<long long> k(static_cast<std::size_t>(parts), 0);
  auto recurse = [&](auto&& self, int depth, long long remaining, double partial) -> void {
    if (depth == parts - 1) {
      k[static_cast<std::size_t>(depth)] = remaining;
      const double c = partial + table[static_cast<std::size_t>(depth)][static_cast<std::size_t>(remaining)];
      if (c < best.cost) {
        best.cost = c;
        best.point = k;
      }
      return;
    }
    const long long lo = depth == 0 ? first_lo : 0;
    const long long hi = depth == 0 ? std::min(first_hi, remaining + 1) : remaining + 1;
    for (long long v = lo; v < hi; ++v) {
      k[static_cast<std::size_t>(depth)] = v;
      self(self, depth + 1, remaining - v,
           partial + table[static_cast<std::size_t>(depth)][static_cast<std::size_t>(v)]);
    }
  };
  if (parts == 1) {
    best.cost = table[0][static_cast<std::size_t>(units)];
    best.point = {units};
    return best;
  }
  recurse(recurse, 0, units, 0.0);
  return best;
}

// Splits the first coordinate range into contiguous chunks, one per worker,
// and reduces in chunk order so the result matches the sequential scan.
inline LatticeBest parallel_lattice_min(const std::vector<std::vector<double>>& table, long long units, int threads) {
  threads = std::max(1, threads);
  if (threads == 1 || table.size() == 1) return lattice_min(table, units, 0, units + 1);
  std::vector<LatticeBest> partial(static_cast<std::size_t>(threads));
  std::vector<std::thread> workers;
  const long long span = units + 1;
  for (int t = 0; t < threads; ++t) {
    const long long lo = span * t / threads;
    const long long hi = span * (t + 1) / threads;
    workers.emplace_back([&, t, lo, hi] { partial[static_cast<std::size_t>(t)] = lattice_min(table, units, lo, hi); });
  }
  for (auto& w : workers) w.join();
  LatticeBest best;
  for (auto& p : partial) {
    if (p.cost < best.cost) best = std::move(p);
  }
  return best;
}

}  // namespace detail

/// Minimum attacked cost over the scaled-simplex lattice with spacing
/// `resolution` (rounded so that n/spacing is an integer).
inline GridOptimum grid_search_optimum(const GameInstance& instance, double resolution = 1e-3, int threads = 1) {
  const int n = instance.n();
  if (n > 4) throw CapacityError("grid search is limited to n <= 4");
  if (!(resolution >= 1e-4)) throw DomainError("grid resolution must be >= 1e-4");
  const long long units = std::llround(static_cast<double>(n) / resolution);
  if (units < 1) throw DomainError("grid resolution coarser than the total mass");
  if (detail::lattice_size(units, n) > kMaxLatticePoints) {
    throw CapacityError("lattice exceeds 1e8 points; use a coarser resolution");
  }
  const double h = static_cast<double>(n) / static_cast<double>(units);

  std::vector<std::vector<double>> table(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(units + 1)));
  for (int id = 1; id <= n; ++id) {
    for (long long k = 0; k <= units; ++k) {
      const double x = static_cast<double>(k) * h;
      table[static_cast<std::size_t>(id - 1)][static_cast<std::size_t>(k)] = x * instance.delay_at(id, x);
    }
  }
  const auto best = detail::parallel_lattice_min(table, units, threads);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(best.point[i]) * h;
  GridOptimum out{LoadProfile(renormalized(std::move(x), n)), 0.0};
  out.cost = system_cost(instance, out.profile);
  return out;
}

/// Leader lattice search for the leader-follower game without the symmetric
/// reduction: every lattice split of mass n-1 over servers 2..n, followers
/// responding on {1,2}. Returns the best aggregate profile and cost.
inline GridOptimum grid_search_stackelberg(int n, double alpha, double resolution = 1e-2) {
  if (n < 3 || n > 4) throw CapacityError("leader lattice search needs 3 <= n <= 4");
  if (!(resolution >= 1e-4)) throw DomainError("grid resolution must be >= 1e-4");
  const long long units = std::llround((n - 1.0) / resolution);
  if (detail::lattice_size(units, n - 1) > kMaxLatticePoints) throw CapacityError("leader lattice exceeds 1e8 points");
  const double h = (n - 1.0) / static_cast<double>(units);

  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_x;
  std::vector<long long> k(static_cast<std::size_t>(n - 1), 0);
  auto evaluate = [&] {
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    for (int i = 1; i < n; ++i) x[static_cast<std::size_t>(i)] = static_cast<double>(k[static_cast<std::size_t>(i - 1)]) * h;
    // Unit of followers: equalize x_1 + alpha with server 2's load.
    const double s1 = std::clamp((1.0 + x[1] - alpha) / 2.0, 0.0, 1.0);
    x[0] = s1;
    x[1] += 1.0 - s1;
    double c = alpha * x[0];
    for (double v : x) c += v * v;
    c /= n;
    if (c < best) {
      best = c;
      best_x = x;
    }
  };
  auto recurse = [&](auto&& self, int depth, long long remaining) -> void {
    if (depth == n - 2) {
      k[static_cast<std::size_t>(depth)] = remaining;
      evaluate();
      return;
    }
    for (long long v = 0; v <= remaining; ++v) {
      k[static_cast<std::size_t>(depth)] = v;
      self(self, depth + 1, remaining - v);
    }
  };
  recurse(recurse, 0, units);
  GridOptimum out{LoadProfile(renormalized(std::move(best_x), n)), 0.0};
  out.cost = system_cost(GameInstance::identical_linear(n, alpha), out.profile);
  return out;
}

struct OracleOptions {
  double resolution = 1e-3;
  int multistarts = 5;
  std::uint64_t seed = 0;
  SolveSettings settings{};
  int threads = 1;
};

struct SecurityPoint {
  double alpha = 0.0;
  double team_cost = 0.0;      // worst cost over all starts
  double optimal_cost = 0.0;   // lattice optimum
  double baseline_cost = 0.0;  // no-attack lattice optimum, held fixed
  bool converged = true;
};

struct SecurityVerdict {
  bool strong = false;
  bool weak = false;
  double worst_alpha = 0.0;
  double gap = 0.0;
  bool conclusive = true;
  std::vector<SecurityPoint> points;
};

namespace detail {

inline std::vector<SecurityPoint> security_points(const GameInstance& instance, const SchedulerPopulation& population,
                                                  const std::vector<double>& alphas, const OracleOptions& opts) {
  const auto unresponsive = grid_search_optimum(instance.with_alpha(0.0), opts.resolution, opts.threads).profile;
  std::vector<SecurityPoint> out;
  for (std::size_t j = 0; j < alphas.size(); ++j) {
    const auto attacked = instance.with_alpha(alphas[j]);
    SecurityPoint p;
    p.alpha = alphas[j];
    auto first = solve_team_equilibrium(attacked, population, opts.settings);
    p.team_cost = first.cost;
    p.converged = first.converged;
    std::mt19937_64 rng(opts.seed + 0x9E3779B97F4A7C15ULL * (j + 1));
    for (int s = 0; s < opts.multistarts; ++s) {
      auto start = random_initial_profile(attacked, population, rng);
      auto rep = solve_team_equilibrium(attacked, population, opts.settings, start);
      p.team_cost = std::max(p.team_cost, rep.cost);
      p.converged = p.converged && rep.converged;
    }
    p.optimal_cost = grid_search_optimum(attacked, opts.resolution, opts.threads).cost;
    p.baseline_cost = system_cost(attacked, unresponsive);
    out.push_back(p);
  }
  return out;
}

enum class GapKind { strong, weak };

inline SecurityVerdict classify(std::vector<SecurityPoint> points, double tol, GapKind kind) {
  SecurityVerdict v;
  v.points = std::move(points);
  if (v.points.empty()) throw DomainError("security verdict needs a nonempty alpha grid");
  double strong_gap = -std::numeric_limits<double>::infinity();
  double weak_gap = -std::numeric_limits<double>::infinity();
  for (const auto& p : v.points) {
    v.conclusive = v.conclusive && p.converged;
    const double sg = p.team_cost - p.optimal_cost;
    const double wg = p.team_cost - p.baseline_cost;
    const double g = kind == GapKind::strong ? sg : wg;
    if (g > v.gap || &p == &v.points.front()) {
      v.gap = g;
      v.worst_alpha = p.alpha;
    }
    strong_gap = std::max(strong_gap, sg);
    weak_gap = std::max(weak_gap, wg);
  }
  if (v.conclusive) {
    v.strong = strong_gap <= tol;
    v.weak = weak_gap <= tol;
  }
  return v;
}

}  // namespace detail

/// Strong emergent security on a finite alpha grid: team cost (worst over
/// the default start plus random restarts) matches the lattice optimum.
inline SecurityVerdict verify_strong_security(const GameInstance& instance, const SchedulerPopulation& population,
                                              const std::vector<double>& alphas, double tol = 1e-5,
                                              const OracleOptions& opts = {}) {
  return detail::classify(detail::security_points(instance, population, alphas, opts), tol, detail::GapKind::strong);
}

/// Weak emergent security on a finite alpha grid: team cost never exceeds
/// the cost of the no-attack optimum held fixed.
inline SecurityVerdict verify_weak_security(const GameInstance& instance, const SchedulerPopulation& population,
                                            const std::vector<double>& alphas, double tol = 1e-5,
                                            const OracleOptions& opts = {}) {
  return detail::classify(detail::security_points(instance, population, alphas, opts), tol, detail::GapKind::weak);
}

struct MonotonicityResult {
  bool nonincreasing = true;
  bool conclusive = true;
  std::vector<double> costs;
};

inline MonotonicityResult monotonicity_sweep(const GameInstance& instance, const SchedulerPopulation& population_template,
                                             const std::vector<double>& r_grid, double alpha, double tol = 1e-8,
                                             const SolveSettings& settings = {}) {
  for (std::size_t j = 1; j < r_grid.size(); ++j) {
    if (!(r_grid[j] >= r_grid[j - 1])) throw DomainError("r grid must be ascending");
  }
  const auto attacked = instance.with_alpha(alpha);
  MonotonicityResult out;
  for (double r : r_grid) {
    auto rep = solve_team_equilibrium(attacked, population_template.with_machine_mass(instance.n(), r), settings);
    out.conclusive = out.conclusive && rep.converged;
    out.costs.push_back(rep.cost);
  }
  for (std::size_t j = 1; j < out.costs.size(); ++j) {
    if (out.costs[j] > out.costs[j - 1] + tol) out.nonincreasing = false;
  }
  return out;
}

/// Smallest machine mass on [0, n] whose team equilibrium reaches the social
/// optimum within `tol`, located by bisection (valid because team cost is
/// nonincreasing in r). Certifies a single alpha only.
inline double estimate_penetration_threshold(const GameInstance& instance, const SchedulerPopulation& population_template,
                                             double alpha, double tol = 1e-8, double r_tol = 1e-6,
                                             const SolveSettings& settings = {}) {
  const auto attacked = instance.with_alpha(alpha);
  const int n = instance.n();
  const auto opt = solve_social_optimum(attacked, ServerSet::all(n), instance.total_mass());
  const double target = system_cost(attacked, opt);
  auto optimal_at = [&](double r) {
    return solve_team_equilibrium(attacked, population_template.with_machine_mass(n, r), settings).cost <= target + tol;
  };
  if (optimal_at(0.0)) return 0.0;
  double lo = 0.0;
  double hi = instance.total_mass();
  while (hi - lo > r_tol) {
    const double mid = 0.5 * (lo + hi);
    if (optimal_at(mid)) hi = mid; else lo = mid;
  }
  return hi;
}

}  // namespace teamsec
