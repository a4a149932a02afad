#pragma once

// Run configuration: model, d-sequence, truncation/solver/simulation/bounds
// settings and outputs. JSON in, JSON out; unknown fields are rejected.

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergobound/dsequence.hpp"
#include "ergobound/model.hpp"
#include "ergobound/time_function.hpp"
#include "json.hpp"

namespace ergobound {

inline constexpr const char* kToolVersion = "0.1.0";

namespace detail {

inline void check_fields(const nlohmann::json& j, const char* block,
                         std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::invalid_argument(std::string(block) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) throw std::invalid_argument("unknown field '" + it.key() + "' in " + block);
  }
}

}  // namespace detail

inline nlohmann::json model_to_json(const ModelSpec& m) {
  nlohmann::json j{{"class", std::string(to_string(m.queue_class))},
                   {"S", m.servers},
                   {"lambda", m.lambda.to_json()},
                   {"mu", m.mu.to_json()}};
  if (m.state_rules)
    j["state_rules"] = {{"lambda", m.state_rules->lambda.to_json()},
                        {"mu", m.state_rules->mu.to_json()}};
  return j;
}

inline ModelSpec model_from_json(const nlohmann::json& j) {
  detail::check_fields(j, "model", {"class", "S", "lambda", "mu", "state_rules"});
  ModelSpec m;
  m.queue_class = parse_queue_class(j.at("class").get<std::string>());
  const auto S = j.at("S").get<std::int64_t>();
  if (S < 1) throw std::invalid_argument("server count S must be >= 1");
  m.servers = static_cast<std::size_t>(S);
  m.lambda = TimeFunction::from_json(j.at("lambda"));
  m.mu = TimeFunction::from_json(j.at("mu"));
  if (j.contains("state_rules")) {
    const auto& r = j.at("state_rules");
    detail::check_fields(r, "state_rules", {"lambda", "mu"});
    StateRules rules;
    if (r.contains("lambda")) rules.lambda = StateRule::from_json(r.at("lambda"));
    if (r.contains("mu")) rules.mu = StateRule::from_json(r.at("mu"));
    m.state_rules = rules;
  }
  m.validate();
  return m;
}

/// lambda*(t; i) = i (1 + sin 2 pi t), mu*(t) = 3 + cos 2 pi t, S = 100.
inline ModelSpec case_model(QueueClass cls, double i, std::size_t S = 100) {
  ModelSpec m;
  m.queue_class = cls;
  m.servers = S;
  m.lambda = TimeFunction::sinusoid(i, i);
  m.mu = TimeFunction::cosinusoid(3.0, 1.0);
  return m;
}

struct TruncationConfig {
  std::size_t N_initial = 155;
  double tolerance = 1e-4;
  std::size_t N_cap = 4096;
};

struct SolverConfig {
  double tol = 1e-9;
  double t_star = 5.0;
  bool auto_raise_t_star = true;
};

struct SimulationConfig {
  std::size_t paths = 10000;
  std::uint64_t seed = 20160401;
  std::vector<double> grid{5.0, 5.25, 5.5, 5.75, 6.0};
  std::size_t x0 = 0;
};

struct BoundsConfig {
  double horizon = 10.0;
  std::size_t curve_points = 101;
  double quadrature_tol = 1e-8;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json"};
};

struct RunConfig {
  ModelSpec model;
  DSequence dsequence = DSequence::paper_s100();
  std::optional<std::string> dsequence_preset = "paper-S100";
  TruncationConfig truncation;
  SolverConfig solver;
  SimulationConfig simulation;
  BoundsConfig bounds;
  OutputConfig outputs;

  void validate() const {
    model.validate();
    if (truncation.N_initial < 1) throw std::invalid_argument("truncation.N_initial must be >= 1");
    if (truncation.N_cap < truncation.N_initial)
      throw std::invalid_argument("truncation.N_cap must be >= N_initial");
    if (!(truncation.tolerance > 0.0)) throw std::invalid_argument("truncation.tolerance must be > 0");
    if (!(solver.tol > 0.0)) throw std::invalid_argument("solver.tol must be > 0");
    if (!(solver.t_star >= 1.0)) throw std::invalid_argument("solver.t_star must be >= 1");
    if (simulation.paths < 1) throw std::invalid_argument("simulation.paths must be >= 1");
    if (simulation.x0 > truncation.N_initial)
      throw std::invalid_argument("simulation.x0 lies outside the truncated space");
    for (std::size_t k = 0; k < simulation.grid.size(); ++k)
      if (!(simulation.grid[k] >= 0.0) || (k > 0 && simulation.grid[k] < simulation.grid[k - 1]))
        throw std::invalid_argument("simulation.grid must be sorted and non-negative");
    if (!(bounds.horizon > 0.0)) throw std::invalid_argument("bounds.horizon must be > 0");
    if (bounds.curve_points < 2) throw std::invalid_argument("bounds.curve_points must be >= 2");
    if (!(bounds.quadrature_tol > 0.0)) throw std::invalid_argument("bounds.quadrature_tol must be > 0");
    for (const auto& f : outputs.formats)
      if (f != "csv" && f != "json") throw std::invalid_argument("unknown output format: " + f);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["model"] = model_to_json(model);
    j["dsequence"] = dsequence_preset ? nlohmann::json(*dsequence_preset) : dsequence.to_json();
    j["truncation"] = {{"N_initial", truncation.N_initial},
                       {"tolerance", truncation.tolerance},
                       {"N_cap", truncation.N_cap}};
    j["solver"] = {{"tol", solver.tol},
                   {"t_star", solver.t_star},
                   {"auto_raise_t_star", solver.auto_raise_t_star}};
    j["simulation"] = {{"paths", simulation.paths},
                       {"seed", simulation.seed},
                       {"grid", simulation.grid},
                       {"x0", simulation.x0}};
    j["bounds"] = {{"horizon", bounds.horizon},
                   {"curve_points", bounds.curve_points},
                   {"quadrature_tol", bounds.quadrature_tol}};
    j["outputs"] = {{"directory", outputs.directory}, {"formats", outputs.formats}};
    return j;
  }

  static RunConfig from_json(const nlohmann::json& j) {
    detail::check_fields(j, "config",
                         {"model", "dsequence", "truncation", "solver", "simulation", "bounds", "outputs"});
    RunConfig c;
    c.model = model_from_json(j.at("model"));
    if (j.contains("dsequence")) {
      const auto& d = j.at("dsequence");
      c.dsequence = DSequence::from_json(d);
      c.dsequence_preset = d.is_string() ? std::optional<std::string>(d.get<std::string>()) : std::nullopt;
    }
    if (j.contains("truncation")) {
      const auto& t = j.at("truncation");
      detail::check_fields(t, "truncation", {"N_initial", "tolerance", "N_cap"});
      c.truncation.N_initial = t.value("N_initial", c.truncation.N_initial);
      c.truncation.tolerance = t.value("tolerance", c.truncation.tolerance);
      c.truncation.N_cap = t.value("N_cap", c.truncation.N_cap);
    }
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      detail::check_fields(s, "solver", {"tol", "t_star", "auto_raise_t_star"});
      c.solver.tol = s.value("tol", c.solver.tol);
      c.solver.t_star = s.value("t_star", c.solver.t_star);
      c.solver.auto_raise_t_star = s.value("auto_raise_t_star", c.solver.auto_raise_t_star);
    }
    if (j.contains("simulation")) {
      const auto& s = j.at("simulation");
      detail::check_fields(s, "simulation", {"paths", "seed", "grid", "x0"});
      c.simulation.paths = s.value("paths", c.simulation.paths);
      c.simulation.seed = s.value("seed", c.simulation.seed);
      c.simulation.grid = s.value("grid", c.simulation.grid);
      c.simulation.x0 = s.value("x0", c.simulation.x0);
    }
    if (j.contains("bounds")) {
      const auto& b = j.at("bounds");
      detail::check_fields(b, "bounds", {"horizon", "curve_points", "quadrature_tol"});
      c.bounds.horizon = b.value("horizon", c.bounds.horizon);
      c.bounds.curve_points = b.value("curve_points", c.bounds.curve_points);
      c.bounds.quadrature_tol = b.value("quadrature_tol", c.bounds.quadrature_tol);
    }
    if (j.contains("outputs")) {
      const auto& o = j.at("outputs");
      detail::check_fields(o, "outputs", {"directory", "formats"});
      c.outputs.directory = o.value("directory", c.outputs.directory);
      c.outputs.formats = o.value("formats", c.outputs.formats);
    }
    c.validate();
    return c;
  }

  static RunConfig parse(const std::string& text) { return from_json(nlohmann::json::parse(text)); }
};

/// Names "case-i-10" ... "case-iv-50": class I..IV with lambda*(t; i), mu*, S = 100.
inline RunConfig preset_config(const std::string& name) {
  static const std::pair<const char*, QueueClass> classes[] = {
      {"iv", QueueClass::BatchBoth},
      {"iii", QueueClass::BatchService},
      {"ii", QueueClass::BatchArrival},
      {"i", QueueClass::BirthDeath}};
  for (const auto& [tag, cls] : classes)
    for (int i : {10, 20, 50})
      if (name == "case-" + std::string(tag) + "-" + std::to_string(i)) {
        RunConfig c;
        c.model = case_model(cls, i);
        return c;
      }
  throw std::invalid_argument("unknown preset: " + name);
}

inline std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const char* tag : {"i", "ii", "iii", "iv"})
    for (int i : {10, 20, 50}) out.push_back("case-" + std::string(tag) + "-" + std::to_string(i));
  return out;
}

/// FNV-1a over the canonical (key-sorted, compact) serialization.
inline std::string config_hash(const RunConfig& c) {
  const std::string s = c.to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Comment header shared by all CSV outputs.
inline void write_csv_header(std::ostream& os, const RunConfig& c,
                             std::initializer_list<std::pair<std::string, std::string>> extra = {}) {
  os << "# tool: ergobound " << kToolVersion << '\n'
     << "# config_hash: " << config_hash(c) << '\n'
     << "# class: " << to_string(c.model.queue_class) << '\n'
     << "# S: " << c.model.servers << '\n'
     << "# lambda: " << c.model.lambda.to_json().dump() << '\n'
     << "# mu: " << c.model.mu.to_json().dump() << '\n';
  for (const auto& [k, v] : extra) os << "# " << k << ": " << v << '\n';
}

}  // namespace ergobound
