#pragma once

// Static description of an attacked parallel-server scheduling game:
// polynomial delay functions, the attack, scheduler populations, load
// profiles and the (attacked) average-delay cost.
//
// Servers are identified by 1-based ids everywhere in the public surface
// (attack target, access sets, file formats). Load vectors are ordinary
// 0-based containers, so loads[0] is the load on server 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace teamsec {

inline constexpr double kMassTolerance = 1e-9;

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Violation {
  std::string code;  // e.g. "intercept-mismatch", "mass-overflow"
  std::optional<int> index;
  std::string message;
};

class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : std::invalid_argument(summarize(violations)),
        violations_(std::move(violations)) {}

  explicit ValidationError(const std::string& code, const std::string& message)
      : ValidationError(std::vector<Violation>{{code, std::nullopt, message}}) {}

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  static std::string summarize(const std::vector<Violation>& vs) {
    std::string out = "validation failed:";
    for (const auto& v : vs) {
      out += " [" + v.code;
      if (v.index) out += " @" + std::to_string(*v.index);
      out += "] " + v.message + ";";
    }
    return out;
  }

  std::vector<Violation> violations_;
};

/// Delay tau(x) = sum_j c_j x^j with c_j >= 0, which makes it convex and
/// nondecreasing on x >= 0.
class DelayFunction {
 public:
  DelayFunction() : coefficients_{0.0, 1.0} {}

  explicit DelayFunction(std::vector<double> coefficients)
      : coefficients_(std::move(coefficients)) {
    if (coefficients_.empty()) coefficients_.push_back(0.0);
    for (std::size_t j = 0; j < coefficients_.size(); ++j) {
      if (!(coefficients_[j] >= 0.0) || !std::isfinite(coefficients_[j])) {
        throw DomainError("delay coefficient c_" + std::to_string(j) +
                          " must be finite and nonnegative");
      }
    }
    while (coefficients_.size() > 1 && coefficients_.back() == 0.0) {
      coefficients_.pop_back();
    }
  }

  DelayFunction(std::initializer_list<double> coefficients)
      : DelayFunction(std::vector<double>(coefficients)) {}

  static DelayFunction linear() { return DelayFunction{0.0, 1.0}; }

  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  std::size_t degree() const noexcept { return coefficients_.size() - 1; }
  double intercept() const noexcept { return coefficients_.front(); }
  bool is_constant() const noexcept { return coefficients_.size() == 1; }

  double value(double x) const {
    double acc = 0.0;
    for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) {
      acc = acc * x + *it;
    }
    return acc;
  }

  double derivative(double x) const {
    double acc = 0.0;
    for (std::size_t j = coefficients_.size() - 1; j >= 1; --j) {
      acc = acc * x + static_cast<double>(j) * coefficients_[j];
    }
    return acc;
  }

  /// d/dx [x tau(x)] as a polynomial: coefficients (j+1) c_j.
  DelayFunction marginal_cost_function() const {
    std::vector<double> c(coefficients_.size());
    for (std::size_t j = 0; j < c.size(); ++j) {
      c[j] = static_cast<double>(j + 1) * coefficients_[j];
    }
    return DelayFunction(std::move(c));
  }

  /// sup{ x >= 0 : tau(x) <= v }. Returns -inf when v < tau(0) and +inf
  /// when tau is constant and v >= tau(0).
  double upper_inverse(double v) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double c0 = intercept();
    if (v < c0) return -inf;
    if (is_constant()) return inf;
    if (v == c0) return 0.0;
    if (degree() == 1) return (v - c0) / coefficients_[1];

    // Bracket [lo, hi] with tau(lo) <= v <= tau(hi), then Newton from the
    // right (monotone for convex increasing tau) guarded by bisection.
    double lo = 0.0;
    double hi = 1.0;
    while (value(hi) < v) {
      lo = hi;
      hi *= 2.0;
    }
    for (int it = 0; it < 200; ++it) {
      const double fh = value(hi) - v;
      if (fh <= 0.0) return hi;
      const double width = hi - lo;
      if (width <= 1e-15 * std::max(1.0, hi)) break;
      const double step = fh / derivative(hi);
      if (step <= 1e-15 * std::max(1.0, hi)) return hi;
      double next = hi - step;
      if (!(next > lo)) next = lo;
      if (hi - next < 0.5 * width) {
        hi = next;
        const double mid = 0.5 * (lo + hi);
        if (value(mid) <= v) lo = mid; else hi = mid;
      } else {
        hi = next;
      }
      if (value(hi) <= v) return hi;
    }
    return lo;
  }

  friend bool operator==(const DelayFunction&, const DelayFunction&) = default;

 private:
  std::vector<double> coefficients_;
};

inline double eval_delay(const DelayFunction& f, double x, double attack_bonus = 0.0) {
  if (!(x >= 0.0)) throw DomainError("eval_delay: load must be nonnegative");
  return f.value(x) + attack_bonus;
}

inline double eval_marginal_cost(const DelayFunction& f, double x, double attack_bonus = 0.0) {
  if (!(x >= 0.0)) throw DomainError("eval_marginal_cost: load must be nonnegative");
  return f.value(x) + x * f.derivative(x) + attack_bonus;
}

/// Sorted set of 1-based server ids.
class ServerSet {
 public:
  ServerSet() = default;
  ServerSet(std::initializer_list<int> ids) : ServerSet(std::vector<int>(ids)) {}
  explicit ServerSet(std::vector<int> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  }

  static ServerSet all(int n) {
    std::vector<int> ids(static_cast<std::size_t>(std::max(n, 0)));
    std::iota(ids.begin(), ids.end(), 1);
    return ServerSet(std::move(ids));
  }

  static ServerSet range(int first, int last) {
    std::vector<int> ids;
    for (int i = first; i <= last; ++i) ids.push_back(i);
    return ServerSet(std::move(ids));
  }

  bool contains(int id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }
  bool empty() const noexcept { return ids_.empty(); }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<int>& ids() const noexcept { return ids_; }
  auto begin() const noexcept { return ids_.begin(); }
  auto end() const noexcept { return ids_.end(); }

  friend bool operator==(const ServerSet&, const ServerSet&) = default;
  friend auto operator<=>(const ServerSet&, const ServerSet&) = default;

 private:
  std::vector<int> ids_;
};

/// n servers carrying total job mass n; server `attack_target` suffers an
/// additive delay degradation of `alpha`.
class GameInstance {
 public:
  GameInstance(std::vector<DelayFunction> delays, double alpha = 0.0, int attack_target = 1)
      : delays_(std::move(delays)), alpha_(alpha), attack_target_(attack_target) {
    if (delays_.empty()) throw DomainError("GameInstance needs at least one server");
  }

  static GameInstance identical(int n, const DelayFunction& f, double alpha = 0.0,
                                int attack_target = 1) {
    if (n < 1) throw DomainError("GameInstance needs at least one server");
    return GameInstance(std::vector<DelayFunction>(static_cast<std::size_t>(n), f), alpha,
                        attack_target);
  }

  static GameInstance identical_linear(int n, double alpha = 0.0) {
    return identical(n, DelayFunction::linear(), alpha);
  }

  int n() const noexcept { return static_cast<int>(delays_.size()); }
  double total_mass() const noexcept { return static_cast<double>(delays_.size()); }
  double alpha() const noexcept { return alpha_; }
  int attack_target() const noexcept { return attack_target_; }
  const std::vector<DelayFunction>& delays() const noexcept { return delays_; }
  const DelayFunction& delay(int id) const { return delays_.at(static_cast<std::size_t>(id - 1)); }

  /// Additive degradation seen by server `id`.
  double bonus(int id) const noexcept { return id == attack_target_ ? alpha_ : 0.0; }

  double delay_at(int id, double x) const { return eval_delay(delay(id), x, bonus(id)); }
  double marginal_at(int id, double x) const { return eval_marginal_cost(delay(id), x, bonus(id)); }

  GameInstance with_alpha(double alpha) const {
    GameInstance copy = *this;
    copy.alpha_ = alpha;
    return copy;
  }

  bool is_identical_linear() const {
    return std::all_of(delays_.begin(), delays_.end(),
                       [](const DelayFunction& f) { return f == DelayFunction::linear(); });
  }

 private:
  std::vector<DelayFunction> delays_;
  double alpha_;
  int attack_target_;
};

struct MachineScheduler {
  double mass = 0.0;
  ServerSet access;
};

struct SchedulerPopulation {
  std::vector<MachineScheduler> machines;
  ServerSet selfish_access;

  double machine_mass() const {
    double r = 0.0;
    for (const auto& m : machines) r += m.mass;
    return r;
  }
  double selfish_mass(int n) const { return std::max(0.0, static_cast<double>(n) - machine_mass()); }

  /// m machines with the given masses; every scheduler reaches every server.
  static SchedulerPopulation full_access(int n, const std::vector<double>& machine_masses) {
    SchedulerPopulation p;
    for (double r : machine_masses) {
      if (r > 0.0) p.machines.push_back({r, ServerSet::all(n)});
    }
    p.selfish_access = ServerSet::all(n);
    return p;
  }

  static SchedulerPopulation full_access(int n, double r) {
    return full_access(n, std::vector<double>{r});
  }

  /// Selfish jobs restricted to {1,2}; one machine scheduler with mass n-1
  /// restricted to {2..n}.
  static SchedulerPopulation constrained(int n) {
    SchedulerPopulation p;
    p.machines.push_back({static_cast<double>(n - 1), ServerSet::range(2, n)});
    p.selfish_access = ServerSet{1, 2};
    return p;
  }

  /// Same access structure with machine masses rescaled to total r
  /// (proportionally; a template without machines gets one full-access
  /// machine).
  SchedulerPopulation with_machine_mass(int n, double r) const {
    SchedulerPopulation p = *this;
    const double total = machine_mass();
    if (r <= 0.0) {
      p.machines.clear();
      return p;
    }
    if (p.machines.empty()) {
      p.machines.push_back({r, ServerSet::all(n)});
      return p;
    }
    for (auto& m : p.machines) {
      m.mass = total > 0.0 ? m.mass * r / total : r / static_cast<double>(p.machines.size());
    }
    return p;
  }
};

/// Aggregate loads, nonnegative, summing to the number of servers.
class LoadProfile {
 public:
  LoadProfile() = default;
  explicit LoadProfile(std::vector<double> loads) : loads_(std::move(loads)) {
    std::vector<Violation> vs;
    double sum = 0.0;
    for (std::size_t i = 0; i < loads_.size(); ++i) {
      if (!(loads_[i] >= 0.0)) {
        vs.push_back({"negative-load", static_cast<int>(i + 1), "load must be nonnegative"});
      }
      sum += loads_[i];
    }
    if (std::abs(sum - static_cast<double>(loads_.size())) > kMassTolerance) {
      vs.push_back({"mass-mismatch", std::nullopt,
                    "loads sum to " + std::to_string(sum) + ", expected " +
                        std::to_string(loads_.size())});
    }
    if (!vs.empty()) throw ValidationError(std::move(vs));
  }

  int n() const noexcept { return static_cast<int>(loads_.size()); }
  const std::vector<double>& loads() const noexcept { return loads_; }
  double operator[](std::size_t i) const { return loads_[i]; }
  /// Load on 1-based server `id`.
  double at(int id) const { return loads_.at(static_cast<std::size_t>(id - 1)); }

 private:
  std::vector<double> loads_;
};

/// Rescales a nonnegative vector to sum exactly (up to rounding) to `mass`.
inline std::vector<double> renormalized(std::vector<double> v, double mass) {
  for (auto& x : v) x = std::max(x, 0.0);
  const double sum = std::accumulate(v.begin(), v.end(), 0.0);
  if (sum > 0.0) {
    for (auto& x : v) x *= mass / sum;
  }
  return v;
}

/// Per-scheduler decomposition of an aggregate profile.
struct DisaggregatedProfile {
  std::vector<double> selfish;
  std::vector<std::vector<double>> per_machine;

  std::vector<double> aggregate_loads() const {
    std::vector<double> x = selfish;
    for (const auto& xm : per_machine) {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += xm[i];
    }
    return x;
  }

  LoadProfile aggregate() const {
    auto x = aggregate_loads();
    return LoadProfile(renormalized(std::move(x), static_cast<double>(selfish.size())));
  }
};

inline double system_cost(const GameInstance& instance, std::span<const double> loads) {
  if (static_cast<int>(loads.size()) != instance.n()) {
    throw ValidationError("length-mismatch", "profile length " + std::to_string(loads.size()) +
                                                 " != n = " + std::to_string(instance.n()));
  }
  double sum = 0.0;
  double total = 0.0;
  for (int id = 1; id <= instance.n(); ++id) {
    const double x = loads[static_cast<std::size_t>(id - 1)];
    if (!(x >= 0.0)) throw ValidationError("negative-load", "load must be nonnegative");
    total += x;
    sum += x * instance.delay_at(id, x);
  }
  if (std::abs(total - instance.total_mass()) > kMassTolerance) {
    throw ValidationError("mass-mismatch", "profile mass " + std::to_string(total) +
                                               " != " + std::to_string(instance.n()));
  }
  return sum / instance.total_mass();
}

inline double system_cost(const GameInstance& instance, const LoadProfile& profile) {
  return system_cost(instance, std::span<const double>(profile.loads()));
}

inline std::vector<Violation> validate(const GameInstance& instance,
                                       const SchedulerPopulation& population) {
  std::vector<Violation> out;
  const int n = instance.n();
  const double c0 = instance.delays().front().intercept();
  for (int id = 2; id <= n; ++id) {
    if (instance.delay(id).intercept() != c0) {
      out.push_back({"intercept-mismatch", id, "tau_i(0) differs from tau_1(0)"});
    }
  }
  if (instance.attack_target() < 1 || instance.attack_target() > n) {
    out.push_back({"bad-attack-target", instance.attack_target(), "attack target not in 1..n"});
  }
  if (!(instance.alpha() >= 0.0) || !std::isfinite(instance.alpha())) {
    out.push_back({"negative-alpha", std::nullopt, "attack strength must be finite and >= 0"});
  }
  for (std::size_t k = 0; k < population.machines.size(); ++k) {
    const auto& m = population.machines[k];
    const int idx = static_cast<int>(k + 1);
    if (!(m.mass > 0.0)) out.push_back({"nonpositive-machine-mass", idx, "r_k must be > 0"});
    if (m.access.empty()) out.push_back({"empty-access", idx, "machine access set is empty"});
    for (int id : m.access) {
      if (id < 1 || id > n) out.push_back({"bad-server-index", id, "machine access id not in 1..n"});
    }
  }
  if (population.machine_mass() > instance.total_mass() + kMassTolerance) {
    out.push_back({"mass-overflow", std::nullopt, "sum of machine masses exceeds n"});
  }
  if (population.selfish_access.empty()) {
    out.push_back({"empty-access", 0, "selfish access set is empty"});
  }
  for (int id : population.selfish_access) {
    if (id < 1 || id > n) out.push_back({"bad-server-index", id, "selfish access id not in 1..n"});
  }
  return out;
}

inline void require_valid(const GameInstance& instance, const SchedulerPopulation& population) {
  auto vs = validate(instance, population);
  if (!vs.empty()) throw ValidationError(std::move(vs));
}

}  // namespace teamsec
