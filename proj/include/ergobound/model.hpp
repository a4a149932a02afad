#pragma once

// The four queue classes and their per-state / per-batch intensities.
//
// Every rate factorizes as (coefficient depending on the state or batch
// size) x (base time function), so A(t) = lambda(t) A_lambda + mu(t) A_mu.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ergobound/time_function.hpp"
#include "json.hpp"

namespace ergobound {

enum class QueueClass {
  BirthDeath,    // I: state-dependent arrival and service
  BatchArrival,  // II: batch arrivals, state-dependent service
  BatchService,  // III: state-dependent arrival, batch service
  BatchBoth,     // IV: batch arrivals and batch service
};

inline constexpr QueueClass kAllClasses[] = {QueueClass::BirthDeath, QueueClass::BatchArrival,
                                             QueueClass::BatchService, QueueClass::BatchBoth};

inline std::string_view to_string(QueueClass c) {
  switch (c) {
    case QueueClass::BirthDeath: return "I";
    case QueueClass::BatchArrival: return "II";
    case QueueClass::BatchService: return "III";
    case QueueClass::BatchBoth: return "IV";
  }
  return "?";
}

inline QueueClass parse_queue_class(std::string_view s) {
  if (s == "I" || s == "BD" || s == "birth-death") return QueueClass::BirthDeath;
  if (s == "II" || s == "BatchArrival" || s == "batch-arrival") return QueueClass::BatchArrival;
  if (s == "III" || s == "BatchService" || s == "batch-service") return QueueClass::BatchService;
  if (s == "IV" || s == "BatchBoth" || s == "batch-both") return QueueClass::BatchBoth;
  throw std::invalid_argument("unknown queue class: " + std::string(s));
}

inline bool has_batch_arrivals(QueueClass c) {
  return c == QueueClass::BatchArrival || c == QueueClass::BatchBoth;
}
inline bool has_batch_service(QueueClass c) {
  return c == QueueClass::BatchService || c == QueueClass::BatchBoth;
}

/// State multiplier n -> m(n) applied to a base intensity (class I only).
struct StateRule {
  enum class Kind { Unit, MinServers, Table };

  Kind kind = Kind::Unit;
  std::vector<double> table;  // table[n]; the last entry extends to larger n

  static StateRule unit() { return {}; }
  static StateRule min_servers() { return {Kind::MinServers, {}}; }
  static StateRule from_table(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("state rule table must be non-empty");
    for (double v : values)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("state rule multipliers must be finite and non-negative");
    return {Kind::Table, std::move(values)};
  }

  double multiplier(std::size_t n, std::size_t servers) const {
    switch (kind) {
      case Kind::Unit: return 1.0;
      case Kind::MinServers: return static_cast<double>(std::min(n, servers));
      case Kind::Table: return n < table.size() ? table[n] : table.back();
    }
    return 0.0;
  }

  /// Index past which the multiplier no longer changes.
  std::size_t constant_from(std::size_t servers) const {
    switch (kind) {
      case Kind::Unit: return 0;
      case Kind::MinServers: return servers;
      case Kind::Table: return table.size() - 1;
    }
    return 0;
  }

  bool operator==(const StateRule&) const = default;

  nlohmann::json to_json() const {
    switch (kind) {
      case Kind::Unit: return {{"kind", "unit"}};
      case Kind::MinServers: return {{"kind", "min_n_S"}};
      case Kind::Table: return {{"kind", "table"}, {"values", table}};
    }
    return {};
  }

  static StateRule from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind"))
      throw std::invalid_argument("state rule needs a 'kind'");
    const std::string kind = j.at("kind");
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "kind" && !(kind == "table" && it.key() == "values"))
        throw std::invalid_argument("unknown state-rule field: " + it.key());
    if (kind == "unit") return unit();
    if (kind == "min_n_S") return min_servers();
    if (kind == "table") return from_table(j.at("values").get<std::vector<double>>());
    throw std::invalid_argument("unknown state-rule kind: " + kind);
  }
};

struct StateRules {
  StateRule lambda = StateRule::unit();
  StateRule mu = StateRule::min_servers();
  bool operator==(const StateRules&) const = default;
};

struct ModelSpec {
  QueueClass queue_class = QueueClass::BirthDeath;
  std::size_t servers = 1;
  TimeFunction lambda;
  TimeFunction mu;
  std::optional<StateRules> state_rules;  // class I only; defaults to {unit, min(n,S)}

  void validate() const {
    if (servers < 1) throw std::invalid_argument("server count S must be >= 1");
    if (state_rules && queue_class != QueueClass::BirthDeath)
      throw std::invalid_argument("state_rules are only supported for class I");
    if (lambda.inf() < 0.0 || mu.inf() < 0.0)
      throw std::invalid_argument("intensity functions must be non-negative");
  }

  const StateRules& rules() const {
    static const StateRules defaults{};
    return state_rules ? *state_rules : defaults;
  }

  bool is_time_constant() const { return lambda.is_constant() && mu.is_constant(); }
  bool is_periodic() const { return lambda.is_periodic() && mu.is_periodic(); }
};

/// Coefficient multiplying lambda(t): per state for classes I/III, per batch size for II/IV.
inline double arrival_coefficient(const ModelSpec& m, std::size_t k) {
  switch (m.queue_class) {
    case QueueClass::BirthDeath: return m.rules().lambda.multiplier(k, m.servers);
    case QueueClass::BatchService: return 1.0;
    case QueueClass::BatchArrival:
    case QueueClass::BatchBoth:
      if (k == 0 || k > m.servers) return 0.0;
      return 1.0 / (static_cast<double>(m.servers) * static_cast<double>(k));
  }
  return 0.0;
}

/// Coefficient multiplying mu(t): per state for classes I/II, per batch size for III/IV.
inline double service_coefficient(const ModelSpec& m, std::size_t k) {
  if (k == 0) return 0.0;
  switch (m.queue_class) {
    case QueueClass::BirthDeath: return m.rules().mu.multiplier(k, m.servers);
    case QueueClass::BatchArrival: return static_cast<double>(std::min(k, m.servers));
    case QueueClass::BatchService:
    case QueueClass::BatchBoth:
      if (k > m.servers) return 0.0;
      return 1.0 / static_cast<double>(k);
  }
  return 0.0;
}

namespace detail {
inline std::size_t checked_index(std::int64_t k, double t) {
  if (k < 0) throw std::domain_error("state/batch index must be non-negative");
  if (!(t >= 0.0)) throw std::domain_error("time must be non-negative");
  return static_cast<std::size_t>(k);
}
}  // namespace detail

inline double eval_lambda(const ModelSpec& m, std::int64_t k, double t) {
  const std::size_t idx = detail::checked_index(k, t);
  return arrival_coefficient(m, idx) * m.lambda(t);
}

inline double eval_mu(const ModelSpec& m, std::int64_t k, double t) {
  const std::size_t idx = detail::checked_index(k, t);
  return service_coefficient(m, idx) * m.mu(t);
}

/// Visits every transition out of `from` that stays inside {0..max_state}:
/// visit(to, lambda_coef, mu_coef), exactly one of the coefficients non-zero.
template <typename Visitor>
void for_each_transition(const ModelSpec& m, std::size_t from, std::size_t max_state,
                         Visitor&& visit) {
  const std::size_t S = m.servers;
  if (has_batch_arrivals(m.queue_class)) {
    for (std::size_t k = 1; k <= S && from + k <= max_state; ++k)
      visit(from + k, arrival_coefficient(m, k), 0.0);
  } else if (from + 1 <= max_state) {
    const double c = arrival_coefficient(m, from);
    if (c != 0.0) visit(from + 1, c, 0.0);
  }
  if (has_batch_service(m.queue_class)) {
    for (std::size_t k = 1; k <= std::min(from, S); ++k)
      visit(from - k, 0.0, service_coefficient(m, k));
  } else if (from >= 1) {
    const double c = service_coefficient(m, from);
    if (c != 0.0) visit(from - 1, 0.0, c);
  }
}

/// Total outflow coefficients (arrival part, service part) of a state in the truncated chain.
inline std::pair<double, double> outflow_coefficients(const ModelSpec& m, std::size_t from,
                                                      std::size_t max_state) {
  double a = 0.0, s = 0.0;
  for_each_transition(m, from, max_state, [&](std::size_t, double la, double mu) {
    a += la;
    s += mu;
  });
  return {a, s};
}

/// Dominating bound on sup_t max_{i<=N} |q_ii(t)| for the chain truncated to {0..N}.
/// Uses sup(lambda) and sup(mu) separately, so it can exceed the joint sup.
inline double local_bound_L(const ModelSpec& m, std::size_t N) {
  if (N < 1) throw std::invalid_argument("truncation size N must be >= 1");
  const double lam_sup = m.lambda.sup();
  const double mu_sup = m.mu.sup();
  double L = 0.0;
  for (std::size_t j = 0; j <= N; ++j) {
    const auto [a, s] = outflow_coefficients(m, j, N);
    L = std::max(L, lam_sup * a + mu_sup * s);
  }
  return L;
}

}  // namespace ergobound
