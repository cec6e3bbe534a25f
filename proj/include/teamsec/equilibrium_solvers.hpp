#pragma once

// Selfish (Wardrop) allocations, socially optimal allocations and team
// equilibria of mixed selfish/machine populations with per-scheduler access
// sets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "teamsec/game_model.hpp"

namespace teamsec {

struct SolveSettings {
  double tolerance = 1e-10;
  int max_outer_iterations = 10'000;
  double damping = 0.5;

  void check() const {
    if (!(tolerance > 0.0)) throw DomainError("SolveSettings: tolerance must be > 0");
    if (max_outer_iterations < 1) throw DomainError("SolveSettings: max_outer_iterations must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0)) throw DomainError("SolveSettings: damping must be in (0,1]");
  }
};

struct SolveReport {
  DisaggregatedProfile profile;
  LoadProfile aggregate;
  double cost = 0.0;
  double selfish_residual = 0.0;
  double machine_residual = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct Residuals {
  double selfish = 0.0;
  double machine = 0.0;
};

namespace detail {

// Selfish mass below this is treated as unused when measuring the Wardrop gap.
inline constexpr double kUsedMass = 1e-12;

inline void check_allocation_inputs(const GameInstance& instance, const ServerSet& access,
                                    double mass, std::span<const double> background) {
  if (static_cast<int>(background.size()) != instance.n()) {
    throw ValidationError("length-mismatch", "background length != n");
  }
  for (double b : background) {
    if (!(b >= 0.0)) throw ValidationError("negative-load", "background load must be >= 0");
  }
  if (!(mass >= 0.0)) throw DomainError("allocation mass must be nonnegative");
  for (int id : access) {
    if (id < 1 || id > instance.n()) {
      throw ValidationError("bad-server-index", "access id " + std::to_string(id) + " not in 1..n");
    }
  }
  if (mass > 0.0 && access.empty()) {
    throw InfeasibleError("positive mass with an empty access set");
  }
}

// Distributes `mass` over `access` so that level_i(background_i + y_i) +
// bonus_i is equal on every used server and no smaller on unused ones, by
// bisection on the common level. Flat (constant) level functions may absorb
// any amount at their level; ties go to the lowest server id.
inline std::vector<double> water_fill(const std::vector<DelayFunction>& levels,
                                      const GameInstance& instance, const ServerSet& access,
                                      double mass, std::span<const double> background) {
  const std::size_t n = background.size();
  std::vector<double> y(n, 0.0);
  if (mass <= 0.0) return y;

  auto amount = [&](int id, double level) {
    const auto i = static_cast<std::size_t>(id - 1);
    const double x = levels[i].upper_inverse(level - instance.bonus(id));
    return std::clamp(x - background[i], 0.0, mass);
  };
  auto total = [&](double level) {
    double s = 0.0;
    for (int id : access) s += amount(id, level);
    return s;
  };

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int id : access) {
    const auto i = static_cast<std::size_t>(id - 1);
    lo = std::min(lo, levels[i].value(background[i]) + instance.bonus(id));
    hi = std::max(hi, levels[i].value(background[i] + mass) + instance.bonus(id));
  }
  lo -= 1.0;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (total(mid) >= mass) hi = mid; else lo = mid;
  }

  double placed = 0.0;
  for (int id : access) {
    const auto i = static_cast<std::size_t>(id - 1);
    y[i] = amount(id, lo);
    placed += y[i];
  }
  double deficit = mass - placed;
  for (int id : access) {
    if (deficit <= 0.0) break;
    const auto i = static_cast<std::size_t>(id - 1);
    const double room = std::max(0.0, amount(id, hi) - y[i]);
    const double add = std::min(room, deficit);
    y[i] += add;
    deficit -= add;
  }
  return renormalized(std::move(y), mass);
}

inline std::vector<DelayFunction> marginal_functions(const GameInstance& instance) {
  std::vector<DelayFunction> out;
  out.reserve(instance.delays().size());
  for (const auto& f : instance.delays()) out.push_back(f.marginal_cost_function());
  return out;
}

enum class BlockKind { selfish, machine };

struct Block {
  BlockKind kind = BlockKind::selfish;
  ServerSet access;
  double mass = 0.0;
  std::vector<std::size_t> members;  // machine indices sharing this block
  std::vector<double> shares;        // member mass / block mass
  std::vector<double> loads;
};

inline std::vector<double> add(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

inline std::vector<double> sub(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, out[i] - b[i]);
  return out;
}

inline double unchecked_cost(const GameInstance& instance, std::span<const double> x) {
  double sum = 0.0;
  for (int id = 1; id <= instance.n(); ++id) {
    const double xi = x[static_cast<std::size_t>(id - 1)];
    sum += xi * (instance.delay(id).value(xi) + instance.bonus(id));
  }
  return sum / instance.total_mass();
}

inline double wardrop_gap(const GameInstance& instance, const ServerSet& access,
                          std::span<const double> own, std::span<const double> aggregate) {
  double min_delay = std::numeric_limits<double>::infinity();
  for (int id : access) {
    min_delay = std::min(min_delay, instance.delay_at(id, aggregate[static_cast<std::size_t>(id - 1)]));
  }
  double gap = 0.0;
  for (int id : access) {
    const auto i = static_cast<std::size_t>(id - 1);
    if (own[i] > kUsedMass) gap = std::max(gap, instance.delay_at(id, aggregate[i]) - min_delay);
  }
  return gap;
}

}  // namespace detail

inline std::vector<double> solve_wardrop(const GameInstance& instance, const ServerSet& access,
                                         double mass, std::span<const double> background) {
  detail::check_allocation_inputs(instance, access, mass, background);
  return detail::water_fill(instance.delays(), instance, access, mass, background);
}

inline std::vector<double> solve_wardrop(const GameInstance& instance, const ServerSet& access,
                                         double mass) {
  std::vector<double> zero(static_cast<std::size_t>(instance.n()), 0.0);
  return solve_wardrop(instance, access, mass, zero);
}

/// Minimizes the attacked system cost of background + y over y >= 0 on
/// `access` with sum(y) = mass, by equalizing marginal costs.
inline std::vector<double> solve_social_optimum(const GameInstance& instance, const ServerSet& access,
                                                double mass, std::span<const double> background) {
  detail::check_allocation_inputs(instance, access, mass, background);
  return detail::water_fill(detail::marginal_functions(instance), instance, access, mass, background);
}

inline std::vector<double> solve_social_optimum(const GameInstance& instance, const ServerSet& access,
                                                double mass) {
  std::vector<double> zero(static_cast<std::size_t>(instance.n()), 0.0);
  return solve_social_optimum(instance, access, mass, zero);
}

namespace detail {

inline Residuals block_residuals(const GameInstance& instance, const std::vector<Block>& blocks,
                                 const std::vector<double>& masses) {
  std::vector<double> aggregate(static_cast<std::size_t>(instance.n()), 0.0);
  for (const auto& b : blocks) aggregate = add(aggregate, b.loads);
  const double current = unchecked_cost(instance, aggregate);

  Residuals res;
  for (const auto& b : blocks) {
    if (b.kind == BlockKind::selfish) {
      res.selfish = std::max(res.selfish, wardrop_gap(instance, b.access, b.loads, aggregate));
      continue;
    }
    for (std::size_t j = 0; j < b.members.size(); ++j) {
      const double mk = masses[b.members[j]];
      if (mk <= 0.0) continue;
      std::vector<double> own(b.loads.size());
      for (std::size_t i = 0; i < own.size(); ++i) own[i] = b.shares[j] * b.loads[i];
      const auto background = sub(aggregate, own);
      const auto br = water_fill(marginal_functions(instance), instance, b.access, mk, background);
      const double best = unchecked_cost(instance, add(background, br));
      res.machine = std::max(res.machine, current - best);
    }
  }
  return res;
}

inline std::vector<double> uniform_on(const ServerSet& access, double mass, int n) {
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  if (access.empty() || mass <= 0.0) return v;
  for (int id : access) v[static_cast<std::size_t>(id - 1)] = mass / static_cast<double>(access.size());
  return v;
}

// Blocks: the selfish population first, then one block per distinct machine
// access set (or per distinct access set of converted machines when
// `machines_selfish`).
inline std::vector<Block> make_blocks(const GameInstance& instance, const SchedulerPopulation& population,
                                      bool machines_selfish) {
  const int n = instance.n();
  std::vector<Block> blocks;
  const double selfish_mass = population.selfish_mass(n);
  if (selfish_mass > 0.0) {
    Block b;
    b.kind = BlockKind::selfish;
    b.access = population.selfish_access;
    b.mass = selfish_mass;
    b.loads = uniform_on(b.access, b.mass, n);
    blocks.push_back(std::move(b));
  }
  std::map<ServerSet, std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < population.machines.size(); ++k) {
    if (population.machines[k].mass > 0.0) groups[population.machines[k].access].push_back(k);
  }
  for (auto& [access, members] : groups) {
    Block b;
    b.kind = machines_selfish ? BlockKind::selfish : BlockKind::machine;
    b.access = access;
    for (auto k : members) b.mass += population.machines[k].mass;
    for (auto k : members) b.shares.push_back(population.machines[k].mass / b.mass);
    b.members = members;
    b.loads = uniform_on(b.access, b.mass, n);
    blocks.push_back(std::move(b));
  }
  return blocks;
}

inline void seed_blocks(std::vector<Block>& blocks, const SchedulerPopulation& population,
                        const DisaggregatedProfile& initial) {
  for (auto& b : blocks) {
    std::vector<double> v(b.loads.size(), 0.0);
    if (b.members.empty()) {
      v = initial.selfish;
    } else {
      for (auto k : b.members) v = add(v, initial.per_machine.at(k));
    }
    if (v.size() != b.loads.size()) throw ValidationError("length-mismatch", "initial profile length != n");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!b.access.contains(static_cast<int>(i + 1))) v[i] = 0.0;
    }
    double s = 0.0;
    for (double x : v) s += std::max(x, 0.0);
    if (s > 0.0) b.loads = renormalized(std::move(v), b.mass);
  }
  (void)population;
}

inline DisaggregatedProfile to_profile(const std::vector<Block>& blocks, const SchedulerPopulation& population,
                                       int n) {
  DisaggregatedProfile p;
  p.selfish.assign(static_cast<std::size_t>(n), 0.0);
  p.per_machine.assign(population.machines.size(), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (const auto& b : blocks) {
    if (b.members.empty()) {
      p.selfish = renormalized(b.loads, b.mass);
      continue;
    }
    for (std::size_t j = 0; j < b.members.size(); ++j) {
      const double mk = population.machines[b.members[j]].mass;
      std::vector<double> share(b.loads.size());
      for (std::size_t i = 0; i < share.size(); ++i) share[i] = b.shares[j] * b.loads[i];
      p.per_machine[b.members[j]] = renormalized(std::move(share), mk);
    }
  }
  return p;
}

inline SolveReport run_best_response(const GameInstance& instance, const SchedulerPopulation& population,
                                     const SolveSettings& settings, bool machines_selfish,
                                     const std::optional<DisaggregatedProfile>& initial) {
  require_valid(instance, population);
  settings.check();
  const int n = instance.n();

  auto blocks = make_blocks(instance, population, machines_selfish);
  if (initial) seed_blocks(blocks, population, *initial);

  std::vector<double> masses;
  for (const auto& m : population.machines) masses.push_back(m.mass);

  const auto marginals = marginal_functions(instance);
  std::vector<double> total(static_cast<std::size_t>(n), 0.0);
  for (const auto& b : blocks) total = add(total, b.loads);

  double damping = settings.damping;
  double best_metric = std::numeric_limits<double>::infinity();
  int stall = 0;
  int iteration = 0;
  Residuals res = block_residuals(instance, blocks, masses);
  while (iteration < settings.max_outer_iterations &&
         !(res.selfish <= settings.tolerance && res.machine <= settings.tolerance)) {
    for (auto& b : blocks) {
      const auto background = sub(total, b.loads);
      const auto br = b.kind == BlockKind::selfish
                          ? water_fill(instance.delays(), instance, b.access, b.mass, background)
                          : water_fill(marginals, instance, b.access, b.mass, background);
      for (std::size_t i = 0; i < br.size(); ++i) {
        b.loads[i] = (1.0 - damping) * b.loads[i] + damping * br[i];
      }
      total = add(background, b.loads);
    }
    ++iteration;
    res = block_residuals(instance, blocks, masses);
    const double metric = std::max(res.selfish, res.machine);
    if (metric < best_metric) {
      best_metric = metric;
      stall = 0;
    } else if (++stall >= 1000) {
      damping *= 0.5;
      stall = 0;
    }
  }

  SolveReport report;
  report.profile = to_profile(blocks, population, n);
  report.aggregate = report.profile.aggregate();
  report.cost = system_cost(instance, report.aggregate);
  report.iterations = iteration;

  // Residuals of the returned (renormalized) profile.
  for (auto& b : blocks) b.loads = renormalized(b.loads, b.mass);
  res = block_residuals(instance, blocks, masses);
  report.selfish_residual = res.selfish;
  report.machine_residual = res.machine;
  report.converged = res.selfish <= settings.tolerance && res.machine <= settings.tolerance;
  return report;
}

}  // namespace detail

/// Damped alternating best response: the selfish block plays a Wardrop
/// response, machine blocks (grouped by access set) play constrained social
/// optima given everyone else.
inline SolveReport solve_team_equilibrium(const GameInstance& instance, const SchedulerPopulation& population,
                                          const SolveSettings& settings = {},
                                          const std::optional<DisaggregatedProfile>& initial = std::nullopt) {
  return detail::run_best_response(instance, population, settings, false, initial);
}

/// Every machine-scheduled job converted into a selfish job that keeps its
/// scheduler's access set. The converted classes are reported in the
/// per-machine slots.
inline SolveReport solve_selfish_equilibrium(const GameInstance& instance, const SchedulerPopulation& population,
                                             const SolveSettings& settings = {}) {
  auto report = detail::run_best_response(instance, population, settings, true, std::nullopt);
  return report;
}

inline Residuals equilibrium_residuals(const GameInstance& instance, const SchedulerPopulation& population,
                                       const DisaggregatedProfile& profile) {
  const int n = instance.n();
  const auto len = static_cast<std::size_t>(n);
  std::vector<Violation> vs;
  if (profile.selfish.size() != len) vs.push_back({"length-mismatch", 0, "selfish block length != n"});
  if (profile.per_machine.size() != population.machines.size()) {
    vs.push_back({"length-mismatch", std::nullopt, "machine block count != population size"});
  }
  for (std::size_t k = 0; k < profile.per_machine.size() && vs.empty(); ++k) {
    if (profile.per_machine[k].size() != len) {
      vs.push_back({"length-mismatch", static_cast<int>(k + 1), "machine block length != n"});
    }
  }
  if (!vs.empty()) throw ValidationError(std::move(vs));

  for (std::size_t i = 0; i < len; ++i) {
    const int id = static_cast<int>(i + 1);
    if (profile.selfish[i] > kMassTolerance && !population.selfish_access.contains(id)) {
      vs.push_back({"access-violation", id, "selfish load on an inaccessible server"});
    }
    for (std::size_t k = 0; k < population.machines.size(); ++k) {
      if (profile.per_machine[k][i] > kMassTolerance && !population.machines[k].access.contains(id)) {
        vs.push_back({"access-violation", id, "machine " + std::to_string(k + 1) + " load on an inaccessible server"});
      }
    }
  }
  if (!vs.empty()) throw ValidationError(std::move(vs));

  std::vector<detail::Block> blocks;
  {
    detail::Block b;
    b.kind = detail::BlockKind::selfish;
    b.access = population.selfish_access;
    b.loads = profile.selfish;
    blocks.push_back(std::move(b));
  }
  std::vector<double> masses;
  for (std::size_t k = 0; k < population.machines.size(); ++k) {
    detail::Block b;
    b.kind = detail::BlockKind::machine;
    b.access = population.machines[k].access;
    b.members = {k};
    b.shares = {1.0};
    b.loads = profile.per_machine[k];
    masses.push_back(std::accumulate(b.loads.begin(), b.loads.end(), 0.0));
    blocks.push_back(std::move(b));
  }
  return detail::block_residuals(instance, blocks, masses);
}

/// Random starting point: each block spread over its access set with
/// exponential (flat Dirichlet) weights.
inline DisaggregatedProfile random_initial_profile(const GameInstance& instance, const SchedulerPopulation& population,
                                                   std::mt19937_64& rng) {
  const int n = instance.n();
  std::exponential_distribution<double> draw(1.0);
  auto spread = [&](const ServerSet& access, double mass) {
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    for (int id : access) v[static_cast<std::size_t>(id - 1)] = draw(rng);
    return mass > 0.0 ? renormalized(std::move(v), mass) : std::vector<double>(static_cast<std::size_t>(n), 0.0);
  };
  DisaggregatedProfile p;
  p.selfish = spread(population.selfish_access, population.selfish_mass(n));
  for (const auto& m : population.machines) p.per_machine.push_back(spread(m.access, m.mass));
  return p;
}

}  // namespace teamsec
