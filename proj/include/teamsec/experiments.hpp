#pragma once

// Scenario files, parameter sweeps, CSV emission and figure data.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "teamsec/closed_form.hpp"
#include "teamsec/equilibrium_solvers.hpp"
#include "teamsec/game_model.hpp"
#include "teamsec/stackelberg.hpp"

namespace teamsec {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScenarioMode { team, stackelberg };

struct SweepSpec {
  std::optional<std::vector<double>> alphas;
  std::optional<std::vector<double>> rs;
};

struct Scenario {
  std::string name;
  ScenarioMode mode = ScenarioMode::team;
  GameInstance instance;
  SchedulerPopulation population;
  SweepSpec sweep;
  SolveSettings settings;
};

struct SweepRow {
  double alpha = 0.0;
  double r = 0.0;
  double team_cost = 0.0;
  double optimal_cost = 0.0;
  double baseline_cost = 0.0;
  double selfish_cost = 0.0;
  std::vector<double> team_loads;
  std::vector<double> optimal_loads;
  std::vector<double> selfish_loads;
  bool converged = true;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// 12 significant digits; negative zero prints as 0.
inline std::string format_number(double v) {
  if (v == 0.0) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string format_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j) out += ',';
    out += table.header[j];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += format_number(row[j]);
    }
    out += '\n';
  }
  return out;
}

inline CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    return cells;
  };
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      table.header = split(line);
      continue;
    }
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split(line)) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size() || cell.empty()) {
        throw FormatError("csv line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      row.push_back(v);
    }
    if (row.size() != table.header.size()) {
      throw FormatError("csv line " + std::to_string(lineno) + ": expected " + std::to_string(table.header.size()) +
                        " columns");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace detail {

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Callers write
/// into preallocated slots, so results do not depend on scheduling.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (int t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::vector<double> linspace(double from, double to, int points) {
  std::vector<double> out;
  for (int k = 0; k < points; ++k) {
    out.push_back(points == 1 ? from : from + (to - from) * static_cast<double>(k) / static_cast<double>(points - 1));
  }
  return out;
}

inline std::string line_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

using json = nlohmann::json;

inline std::vector<double> read_grid(const json& j, const std::string& key, std::vector<Violation>& vs) {
  std::vector<double> values;
  if (j.is_array()) {
    for (const auto& v : j) values.push_back(v.get<double>());
    if (values.empty()) vs.push_back({"bad-sweep", std::nullopt, key + " list is empty"});
  } else if (j.is_object()) {
    const double from = j.at("from").get<double>();
    const double to = j.at("to").get<double>();
    const int points = j.at("points").get<int>();
    if (points < 2) vs.push_back({"bad-sweep", std::nullopt, key + " range needs >= 2 points"});
    if (to < from) vs.push_back({"bad-sweep", std::nullopt, key + " range must be ascending"});
    values = linspace(from, to, std::max(points, 1));
  } else {
    throw FormatError("sweep." + key + " must be a list or {from, to, points}");
  }
  for (double v : values) {
    if (!(v >= 0.0)) {
      vs.push_back({"bad-sweep", std::nullopt, key + " values must be nonnegative"});
      break;
    }
  }
  return values;
}

inline ServerSet read_access(const json& j, int n) {
  if (j.is_null()) return ServerSet::all(n);
  return ServerSet(j.get<std::vector<int>>());
}

inline bool is_stackelberg_setting(const GameInstance& instance, const SchedulerPopulation& population) {
  const int n = instance.n();
  if (n < 3 || !instance.is_identical_linear() || instance.attack_target() != 1) return false;
  if (!(population.selfish_access == ServerSet{1, 2})) return false;
  if (std::abs(population.machine_mass() - (n - 1.0)) > kMassTolerance) return false;
  return std::all_of(population.machines.begin(), population.machines.end(),
                     [&](const MachineScheduler& m) { return m.access == ServerSet::range(2, n); });
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("scenario parse error at " + detail::line_context(text, e.byte) + ": " + e.what());
  }

  try {
    std::vector<Violation> vs;
    const auto& inst = doc.at("instance");
    const int n = inst.at("n").get<int>();
    if (n < 1) throw ValidationError("bad-n", "instance.n must be >= 1");

    std::vector<DelayFunction> delays;
    try {
      if (inst.contains("delays")) {
        for (const auto& c : inst.at("delays")) delays.emplace_back(c.get<std::vector<double>>());
        if (static_cast<int>(delays.size()) != n) {
          vs.push_back({"delay-count", std::nullopt, "instance.delays must list n delay functions"});
        }
      } else {
        const DelayFunction shared(inst.value("delay", std::vector<double>{0.0, 1.0}));
        delays.assign(static_cast<std::size_t>(n), shared);
      }
    } catch (const DomainError& e) {
      throw ValidationError("negative-coefficient", e.what());
    }
    if (delays.empty()) delays.assign(static_cast<std::size_t>(n), DelayFunction::linear());

    double alpha = 0.0;
    int target = 1;
    if (inst.contains("attack")) {
      alpha = inst.at("attack").value("alpha", 0.0);
      target = inst.at("attack").value("target", 1);
    }

    SchedulerPopulation population;
    if (doc.contains("population")) {
      const auto& pop = doc.at("population");
      for (const auto& m : pop.value("machines", json::array())) {
        population.machines.push_back({m.at("mass").get<double>(), detail::read_access(m.value("access", json()), n)});
      }
      population.selfish_access = detail::read_access(pop.value("selfish_access", json()), n);
    } else {
      population.selfish_access = ServerSet::all(n);
    }

    Scenario sc{doc.value("name", std::string("unnamed")), ScenarioMode::team,
                GameInstance(std::move(delays), alpha, target), std::move(population), {}, {}};

    const auto mode = doc.value("mode", std::string("team"));
    if (mode == "stackelberg") {
      sc.mode = ScenarioMode::stackelberg;
    } else if (mode != "team") {
      throw FormatError("mode must be \"team\" or \"stackelberg\"");
    }

    if (doc.contains("sweep")) {
      const auto& sw = doc.at("sweep");
      if (sw.contains("alpha")) sc.sweep.alphas = detail::read_grid(sw.at("alpha"), "alpha", vs);
      if (sw.contains("r")) {
        sc.sweep.rs = detail::read_grid(sw.at("r"), "r", vs);
        for (double r : *sc.sweep.rs) {
          if (r > n + kMassTolerance) {
            vs.push_back({"mass-overflow", std::nullopt, "sweep r exceeds n"});
            break;
          }
        }
      }
    }
    if (doc.contains("solver")) {
      const auto& s = doc.at("solver");
      sc.settings.tolerance = s.value("tolerance", sc.settings.tolerance);
      sc.settings.max_outer_iterations = s.value("max_outer_iterations", sc.settings.max_outer_iterations);
      sc.settings.damping = s.value("damping", sc.settings.damping);
      if (!(sc.settings.tolerance > 0.0)) vs.push_back({"bad-solver", std::nullopt, "tolerance must be > 0"});
      if (sc.settings.max_outer_iterations < 1) vs.push_back({"bad-solver", std::nullopt, "max_outer_iterations must be >= 1"});
      if (!(sc.settings.damping > 0.0 && sc.settings.damping <= 1.0)) {
        vs.push_back({"bad-solver", std::nullopt, "damping must be in (0, 1]"});
      }
    }

    auto model = validate(sc.instance, sc.population);
    vs.insert(vs.end(), model.begin(), model.end());
    if (sc.mode == ScenarioMode::stackelberg) {
      if (!detail::is_stackelberg_setting(sc.instance, sc.population)) {
        vs.push_back({"stackelberg-setting", std::nullopt,
                      "stackelberg mode needs n >= 3 identical linear servers, server 1 attacked, selfish access "
                      "{1,2} and machine mass n-1 on {2..n}"});
      }
      if (sc.sweep.rs) vs.push_back({"stackelberg-setting", std::nullopt, "stackelberg mode fixes r = n-1"});
    }
    if (!vs.empty()) throw ValidationError(std::move(vs));
    return sc;
  } catch (const json::exception& e) {
    throw FormatError(std::string("scenario schema error: ") + e.what());
  }
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

struct SweepOptions {
  int threads = 1;
  bool numeric = false;  // stackelberg mode: numeric leader search instead of the closed-form policy
  double numeric_resolution = 1e-4;
};

inline SweepRow solve_sweep_point(const Scenario& sc, double alpha, std::optional<double> r, const SweepOptions& opts) {
  const int n = sc.instance.n();
  const auto attacked = sc.instance.with_alpha(alpha);
  const auto population = r ? sc.population.with_machine_mass(n, *r) : sc.population;

  SweepRow row;
  row.alpha = alpha;
  row.r = population.machine_mass();

  const auto all = ServerSet::all(n);
  row.optimal_loads = solve_social_optimum(attacked, all, sc.instance.total_mass());
  row.optimal_cost = system_cost(attacked, row.optimal_loads);
  const auto unresponsive = solve_social_optimum(sc.instance.with_alpha(0.0), all, sc.instance.total_mass());
  row.baseline_cost = system_cost(attacked, unresponsive);

  const auto selfish = solve_selfish_equilibrium(attacked, population, sc.settings);
  row.selfish_cost = selfish.cost;
  row.selfish_loads = selfish.aggregate.loads();

  if (sc.mode == ScenarioMode::stackelberg) {
    const auto st = opts.numeric ? solve_stackelberg_numeric(n, alpha, opts.numeric_resolution) : optimal_stackelberg(n, alpha);
    row.team_cost = st.cost;
    row.team_loads = st.aggregate.loads();
    row.converged = selfish.converged;
  } else {
    const auto team = solve_team_equilibrium(attacked, population, sc.settings);
    row.team_cost = team.cost;
    row.team_loads = team.aggregate.loads();
    row.converged = team.converged && selfish.converged;
  }
  return row;
}

/// One row per (alpha, r) grid point, alpha-major. Missing grids fall back
/// to the scenario's own alpha and population.
inline std::vector<SweepRow> run_sweep(const Scenario& sc, const SweepOptions& opts = {}) {
  const auto alphas = sc.sweep.alphas.value_or(std::vector<double>{sc.instance.alpha()});
  std::vector<std::optional<double>> rs;
  if (sc.sweep.rs) {
    for (double r : *sc.sweep.rs) rs.emplace_back(r);
  } else {
    rs.emplace_back(std::nullopt);
  }
  std::vector<SweepRow> rows(alphas.size() * rs.size());
  detail::parallel_for(rows.size(), opts.threads, [&](std::size_t idx) {
    rows[idx] = solve_sweep_point(sc, alphas[idx / rs.size()], rs[idx % rs.size()], opts);
  });
  return rows;
}

inline CsvTable sweep_table(const std::vector<SweepRow>& rows, int n) {
  CsvTable t;
  t.header = {"alpha", "r", "team_cost", "optimal_cost", "baseline_cost", "selfish_cost", "converged"};
  for (int i = 1; i <= n; ++i) t.header.push_back("x_" + std::to_string(i));
  for (const auto& row : rows) {
    std::vector<double> v{row.alpha, row.r, row.team_cost, row.optimal_cost, row.baseline_cost, row.selfish_cost,
                          row.converged ? 1.0 : 0.0};
    v.insert(v.end(), row.team_loads.begin(), row.team_loads.end());
    t.rows.push_back(std::move(v));
  }
  return t;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows, int n) { return format_csv(sweep_table(rows, n)); }

enum class FigureId { fig2, fig4, fig5 };

inline FigureId parse_figure_id(const std::string& s) {
  if (s == "fig2") return FigureId::fig2;
  if (s == "fig4") return FigureId::fig4;
  if (s == "fig5") return FigureId::fig5;
  throw std::invalid_argument("unknown figure id '" + s + "' (expected fig2, fig4 or fig5)");
}

struct FigureOptions {
  bool numeric = false;
  int threads = 1;
  std::vector<double> fig2_alphas{0.5, 1.0, 2.0, 4.0};
  int fig2_points = 101;  // r grid over [0, 2]
  int fig4_points = 61;   // alpha grid over [0, 3]
  double stackelberg_resolution = 1e-4;
  SolveSettings settings{};
};

namespace detail {

inline CsvTable figure2_table(const FigureOptions& opts) {
  constexpr int n = 2;
  const auto rs = linspace(0.0, n, opts.fig2_points);
  CsvTable t;
  t.header = {"alpha", "r", "team_cost"};
  t.rows.resize(opts.fig2_alphas.size() * rs.size());
  parallel_for(t.rows.size(), opts.threads, [&](std::size_t idx) {
    const double alpha = opts.fig2_alphas[idx / rs.size()];
    const double r = rs[idx % rs.size()];
    double cost = 0.0;
    if (opts.numeric) {
      cost = solve_team_equilibrium(GameInstance::identical_linear(n, alpha), SchedulerPopulation::full_access(n, r),
                                    opts.settings)
                 .cost;
    } else {
      cost = team_cost_linear(n, r, alpha);
    }
    t.rows[idx] = {alpha, r, cost};
  });
  return t;
}

inline CsvTable figure4_table(const FigureOptions& opts) {
  constexpr int n = 3;
  const auto alphas = linspace(0.0, 3.0, opts.fig4_points);
  CsvTable t;
  t.header = {"alpha", "uninfluenced_cost", "stackelberg_cost", "optimal_cost"};
  t.rows.resize(alphas.size());
  parallel_for(alphas.size(), opts.threads, [&](std::size_t idx) {
    const double alpha = alphas[idx];
    if (opts.numeric) {
      const auto inst = GameInstance::identical_linear(n, alpha);
      const double uninf = solve_team_equilibrium(inst, SchedulerPopulation::constrained(n), opts.settings).cost;
      const double st = solve_stackelberg_numeric(n, alpha, opts.stackelberg_resolution).cost;
      const double opt = system_cost(inst, solve_social_optimum(inst, ServerSet::all(n), n));
      t.rows[idx] = {alpha, uninf, st, opt};
    } else {
      t.rows[idx] = {alpha, constrained_team_cost(n, alpha), stackelberg_cost(n, alpha), optimal_cost_linear(n, alpha)};
    }
  });
  return t;
}

inline CsvTable figure5_table(const FigureOptions& opts) {
  constexpr int n = 3;
  const auto alphas = linspace(0.0, 3.0, opts.fig4_points);
  CsvTable t;
  t.header = {"alpha"};
  for (const char* p : {"uninfluenced", "stackelberg"}) {
    for (int i = 1; i <= n; ++i) t.header.push_back(std::string(p) + "_x" + std::to_string(i));
    t.header.push_back(std::string(p) + "_selfish_x2");
  }
  for (int i = 1; i <= n; ++i) t.header.push_back("optimal_x" + std::to_string(i));
  t.rows.resize(alphas.size());
  parallel_for(alphas.size(), opts.threads, [&](std::size_t idx) {
    const double alpha = alphas[idx];
    std::vector<double> uninf;
    double uninf_s2 = 0.0;
    StackelbergSolution st;
    std::vector<double> opt;
    if (opts.numeric) {
      const auto inst = GameInstance::identical_linear(n, alpha);
      const auto team = solve_team_equilibrium(inst, SchedulerPopulation::constrained(n), opts.settings);
      uninf = team.aggregate.loads();
      uninf_s2 = team.profile.selfish[1];
      st = solve_stackelberg_numeric(n, alpha, opts.stackelberg_resolution);
      opt = solve_social_optimum(inst, ServerSet::all(n), n);
    } else {
      uninf = selfish_profile_linear(n, alpha).loads();
      uninf_s2 = 1.0 - uninf[0];
      st = optimal_stackelberg(n, alpha);
      opt = optimal_profile_linear(n, alpha).loads();
    }
    std::vector<double> row{alpha};
    row.insert(row.end(), uninf.begin(), uninf.end());
    row.push_back(uninf_s2);
    row.insert(row.end(), st.aggregate.loads().begin(), st.aggregate.loads().end());
    row.push_back(st.follower[1]);
    row.insert(row.end(), opt.begin(), opt.end());
    t.rows[idx] = std::move(row);
  });
  return t;
}

}  // namespace detail

inline CsvTable figure_table(FigureId id, const FigureOptions& opts = {}) {
  switch (id) {
    case FigureId::fig2: return detail::figure2_table(opts);
    case FigureId::fig4: return detail::figure4_table(opts);
    case FigureId::fig5: return detail::figure5_table(opts);
  }
  throw std::invalid_argument("unknown figure id");
}

inline std::string figure_data(FigureId id, const FigureOptions& opts = {}) { return format_csv(figure_table(id, opts)); }

}  // namespace teamsec
