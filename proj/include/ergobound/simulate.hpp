#pragma once

// Monte-Carlo paths of the truncated chain by thinning against a constant
// dominating rate, plus the comparison against ODE trajectories.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ergobound/errors.hpp"
#include "ergobound/kolmogorov.hpp"
#include "ergobound/model.hpp"

namespace ergobound {

/// SplitMix64. Counter-style: path k uses the stream seeded by mix(seed, k).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on the open interval (0,1).
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  static SplitMix64 for_path(std::uint64_t seed, std::uint64_t path) {
    SplitMix64 a(seed);
    const std::uint64_t s = a.next();
    SplitMix64 b(s ^ (path * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
    return SplitMix64(b.next());
  }

 private:
  std::uint64_t state_;
};

/// Per-state transition lists of the truncated chain with a dominating rate.
class ThinningSampler {
 public:
  struct Candidate {
    double time = 0.0;
    std::size_t to = 0;
    bool accepted = false;
  };

  ThinningSampler(const ModelSpec& model, std::size_t N, double dominating_factor = 1.05)
      : model_(model), N_(N), offsets_(N + 2, 0) {
    model_.validate();
    for (std::size_t j = 0; j <= N; ++j) {
      for_each_transition(model_, j, N, [&](std::size_t to, double la, double mc) {
        edges_.push_back({to, la, mc});
      });
      offsets_[j + 1] = edges_.size();
    }
    L_dom_ = dominating_factor * local_bound_L(model_, N);
  }

  double dominating_rate() const { return L_dom_; }
  std::size_t N() const { return N_; }

  /// Draws the next candidate after time t from state x.
  Candidate next(double t, std::size_t x, SplitMix64& rng) const {
    Candidate c;
    c.to = x;
    if (L_dom_ <= 0.0) {
      c.time = std::numeric_limits<double>::infinity();
      return c;
    }
    c.time = t + rng.exponential(L_dom_);
    const double lam = model_.lambda(c.time);
    const double mu = model_.mu(c.time);
    double total = 0.0;
    for (std::size_t e = offsets_[x]; e < offsets_[x + 1]; ++e)
      total += lam * edges_[e].lam + mu * edges_[e].mu;
    if (total > L_dom_ * (1.0 + 1e-12))
      throw SolverError("thinning: outflow " + std::to_string(total) + " at t = " +
                        std::to_string(c.time) + " exceeds dominating rate " + std::to_string(L_dom_));
    double u = rng.uniform() * L_dom_;
    if (u >= total) return c;
    for (std::size_t e = offsets_[x]; e < offsets_[x + 1]; ++e) {
      u -= lam * edges_[e].lam + mu * edges_[e].mu;
      if (u < 0.0) {
        c.to = edges_[e].to;
        c.accepted = true;
        return c;
      }
    }
    // rounding left u marginally positive: take the last edge with nonzero rate
    for (std::size_t e = offsets_[x + 1]; e-- > offsets_[x];)
      if (lam * edges_[e].lam + mu * edges_[e].mu > 0.0) {
        c.to = edges_[e].to;
        c.accepted = true;
        break;
      }
    return c;
  }

 private:
  struct Edge {
    std::size_t to;
    double lam, mu;
  };
  ModelSpec model_;
  std::size_t N_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  double L_dom_ = 0.0;
};

struct SimConfig {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  std::vector<double> sample_times;  // sorted, >= 0; the horizon is the last one
  std::size_t x0 = 0;
  std::size_t N = 155;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct EmpiricalDistribution {
  std::vector<double> times;
  std::size_t n_paths = 0;
  std::size_t N = 0;
  std::vector<std::vector<std::uint64_t>> counts;  // counts[time][state]

  double p_hat(std::size_t i, std::size_t k) const {
    return static_cast<double>(counts[i][k]) / static_cast<double>(n_paths);
  }
  double se(std::size_t i, std::size_t k) const {
    const double p = p_hat(i, k);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n_paths));
  }
  double mean(std::size_t i) const {
    double m = 0.0;
    for (std::size_t k = 0; k < counts[i].size(); ++k) m += static_cast<double>(k) * p_hat(i, k);
    return m;
  }
  double variance(std::size_t i) const {
    const double m = mean(i);
    double v = 0.0;
    for (std::size_t k = 0; k < counts[i].size(); ++k) {
      const double dk = static_cast<double>(k) - m;
      v += dk * dk * p_hat(i, k);
    }
    return v;
  }
  double mean_se(std::size_t i) const { return std::sqrt(variance(i) / static_cast<double>(n_paths)); }
};

inline EmpiricalDistribution simulate(const ModelSpec& model, const SimConfig& cfg) {
  if (cfg.n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  if (cfg.x0 > cfg.N) throw std::invalid_argument("x0 lies outside the truncated space");
  for (std::size_t k = 0; k < cfg.sample_times.size(); ++k) {
    if (!(cfg.sample_times[k] >= 0.0)) throw std::invalid_argument("sample times must be >= 0");
    if (k > 0 && cfg.sample_times[k] < cfg.sample_times[k - 1])
      throw std::invalid_argument("sample times must be sorted");
  }
  const ThinningSampler sampler(model, cfg.N);
  const std::size_t nt = cfg.sample_times.size();

  unsigned T = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  T = static_cast<unsigned>(std::min<std::size_t>(T, cfg.n_paths));
  std::vector<std::vector<std::vector<std::uint64_t>>> partial(
      T, std::vector<std::vector<std::uint64_t>>(nt, std::vector<std::uint64_t>(cfg.N + 1, 0)));
  std::vector<std::exception_ptr> errors(T);

  auto worker = [&](unsigned w) {
    try {
      auto& hist = partial[w];
      for (std::size_t path = w; path < cfg.n_paths; path += T) {
        SplitMix64 rng = SplitMix64::for_path(cfg.seed, path);
        double t = 0.0;
        std::size_t x = cfg.x0;
        std::size_t si = 0;
        while (si < nt) {
          const auto c = sampler.next(t, x, rng);
          while (si < nt && cfg.sample_times[si] < c.time) ++hist[si++][x];
          if (si == nt) break;
          t = c.time;
          x = c.to;
        }
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < T; ++w) pool.emplace_back(worker, w);
  worker(0);
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  EmpiricalDistribution emp;
  emp.times = cfg.sample_times;
  emp.n_paths = cfg.n_paths;
  emp.N = cfg.N;
  emp.counts.assign(nt, std::vector<std::uint64_t>(cfg.N + 1, 0));
  for (unsigned w = 0; w < T; ++w)
    for (std::size_t i = 0; i < nt; ++i)
      for (std::size_t k = 0; k <= cfg.N; ++k) emp.counts[i][k] += partial[w][i][k];
  return emp;
}

/// z threshold: 3 for up to 10 comparisons, otherwise Bonferroni at family level 0.027.
inline double z_threshold(std::size_t comparisons) {
  if (comparisons <= 10) return 3.0;
  // two-sided normal quantile by bisection on erfc
  const double target = 0.027 / static_cast<double>(comparisons);
  double lo = 3.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > target) lo = mid; else hi = mid;
  }
  return hi;
}

struct ComparisonRow {
  double t = 0.0;
  double tv = 0.0;  // (1/2) sum_k |p_hat_k - p_k|
  double p0_hat = 0.0, p0_ode = 0.0, z_p0 = 0.0;
  double mean_hat = 0.0, mean_ode = 0.0, z_mean = 0.0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  double threshold = 3.0;
  double max_abs_z = 0.0;
  bool pass = true;
};

inline ComparisonReport compare_to_ode(const EmpiricalDistribution& emp, const Trajectory& traj) {
  if (emp.times.size() != traj.times.size())
    throw std::invalid_argument("compare_to_ode: grids have different lengths");
  if (emp.N != traj.N) throw std::invalid_argument("compare_to_ode: truncation sizes differ");
  for (std::size_t i = 0; i < emp.times.size(); ++i)
    if (std::abs(emp.times[i] - traj.times[i]) > 1e-12)
      throw std::invalid_argument("compare_to_ode: grid times differ at index " + std::to_string(i));

  auto z = [](double diff, double se) {
    if (se > 0.0) return diff / se;
    return diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  };
  const double n = static_cast<double>(emp.n_paths);
  ComparisonReport rep;
  rep.threshold = z_threshold(2 * emp.times.size());
  for (std::size_t i = 0; i < emp.times.size(); ++i) {
    const auto& p = traj.states[i];
    ComparisonRow row;
    row.t = emp.times[i];
    for (std::size_t k = 0; k < p.size(); ++k) row.tv += std::abs(emp.p_hat(i, k) - p[k]);
    row.tv *= 0.5;
    const auto c = characteristics(p);
    double var = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double dk = static_cast<double>(k) - c.mean;
      var += dk * dk * p[k];
    }
    row.p0_ode = c.p0;
    row.p0_hat = emp.p_hat(i, 0);
    row.z_p0 = z(row.p0_hat - row.p0_ode, std::sqrt(std::max(0.0, c.p0 * (1.0 - c.p0)) / n));
    row.mean_ode = c.mean;
    row.mean_hat = emp.mean(i);
    row.z_mean = z(row.mean_hat - row.mean_ode, std::sqrt(std::max(0.0, var) / n));
    rep.max_abs_z = std::max({rep.max_abs_z, std::abs(row.z_p0), std::abs(row.z_mean)});
    rep.rows.push_back(row);
  }
  rep.pass = rep.max_abs_z < rep.threshold;
  return rep;
}

/// Rows (t, state, count, p_hat, se); states never visited are skipped.
inline void write_empirical_csv(std::ostream& os, const EmpiricalDistribution& emp) {
  const auto old = os.precision(17);
  os << "t,state,count,p_hat,se\n";
  for (std::size_t i = 0; i < emp.times.size(); ++i)
    for (std::size_t k = 0; k <= emp.N; ++k)
      if (emp.counts[i][k] > 0)
        os << emp.times[i] << ',' << k << ',' << emp.counts[i][k] << ',' << emp.p_hat(i, k) << ','
           << emp.se(i, k) << '\n';
  os.precision(old);
}

}  // namespace ergobound
