#pragma once

// Forward Kolmogorov system dp/dt = A(t) p on the truncated state space,
// transient/limiting characteristics, and bound-vs-trajectory experiments.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergobound/bounds.hpp"
#include "ergobound/dsequence.hpp"
#include "ergobound/errors.hpp"
#include "ergobound/generator.hpp"
#include "ergobound/model.hpp"

namespace ergobound {

/// Sparse A(t) = lambda(t) A_lambda + mu(t) A_mu for the truncated chain.
class GeneratorOperator {
 public:
  GeneratorOperator(const ModelSpec& model, std::size_t N)
      : model_(model), N_(N), arrival_out_(N + 1, 0.0), service_out_(N + 1, 0.0) {
    if (N < 1) throw std::invalid_argument("truncation size N must be >= 1");
    model_.validate();
    for (std::size_t j = 0; j <= N; ++j)
      for_each_transition(model_, j, N, [&](std::size_t to, double la, double mc) {
        if (la != 0.0) {
          arrivals_.push_back({static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(to), la});
          arrival_out_[j] += la;
        }
        if (mc != 0.0) {
          services_.push_back({static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(to), mc});
          service_out_[j] += mc;
        }
      });
    L_ = local_bound_L(model_, N);
  }

  /// out = A(t) p.
  void apply(double t, std::span<const double> p, std::span<double> out) const {
    const double lam = model_.lambda(t);
    const double mu = model_.mu(t);
    for (std::size_t j = 0; j <= N_; ++j)
      out[j] = -(lam * arrival_out_[j] + mu * service_out_[j]) * p[j];
    for (const auto& e : arrivals_) out[e.to] += lam * e.coef * p[e.from];
    for (const auto& e : services_) out[e.to] += mu * e.coef * p[e.from];
  }

  std::size_t N() const { return N_; }
  double L() const { return L_; }
  const ModelSpec& model() const { return model_; }

 private:
  struct Edge {
    std::uint32_t from, to;
    double coef;
  };
  ModelSpec model_;
  std::size_t N_;
  std::vector<Edge> arrivals_;
  std::vector<Edge> services_;
  std::vector<double> arrival_out_;
  std::vector<double> service_out_;
  double L_ = 0.0;
};

struct SolverOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double negativity_floor = -1e-10;  // steps producing smaller entries are rejected
  double mass_drift_limit = 1e-9;    // |sum p - 1| beyond this aborts
  double step_ceiling_factor = 0.5;  // h <= factor / L
  std::size_t max_steps = 50'000'000;

  static SolverOptions from_tolerance(double tol) {
    SolverOptions o;
    o.rtol = tol;
    o.atol = tol * 1e-3;
    return o;
  }
};

struct SolverStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double max_error_ratio = 0.0;  // largest accepted scaled error estimate
  double max_mass_drift = 0.0;
  double min_entry = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::size_t N = 0;
  SolverStats stats;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct DormandPrince {
  static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

/// Integrates from p0 at t0 and records the state at each sample time (sorted, >= t0).
inline Trajectory solve(const GeneratorOperator& op, std::span<const double> p0, double t0,
                        std::span<const double> sample_times, const SolverOptions& opt = {}) {
  using DP = detail::DormandPrince;
  const std::size_t n = op.N() + 1;
  if (p0.size() != n) throw std::invalid_argument("initial distribution has the wrong size");
  double mass = 0.0;
  for (double v : p0) {
    if (v < 0.0) throw std::invalid_argument("initial distribution has negative entries");
    mass += v;
  }
  if (std::abs(mass - 1.0) > 1e-9) throw std::invalid_argument("initial distribution must sum to 1");
  for (std::size_t k = 0; k < sample_times.size(); ++k) {
    if (sample_times[k] < t0) throw std::invalid_argument("sample times must be >= t0");
    if (k > 0 && sample_times[k] < sample_times[k - 1])
      throw std::invalid_argument("sample times must be sorted");
  }

  Trajectory traj;
  traj.N = op.N();
  std::vector<double> y(p0.begin(), p0.end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n);

  const double L = op.L();
  const double h_max = L > 0.0 ? opt.step_ceiling_factor / L : std::numeric_limits<double>::infinity();
  double t = t0;
  double h = std::min(h_max, 1e-3);
  op.apply(t, y, k1);
  std::size_t next = 0;

  auto record = [&] {
    while (next < sample_times.size() && sample_times[next] <= t) {
      traj.times.push_back(sample_times[next]);
      traj.states.push_back(y);
      ++next;
    }
  };
  record();

  while (next < sample_times.size()) {
    const double target = sample_times[next];
    if (traj.stats.accepted + traj.stats.rejected > opt.max_steps)
      throw SolverError("step budget exhausted (L = " + std::to_string(L) + ")");
    double step = std::min({h, h_max, target - t});
    const bool hits_target = step >= target - t;
    if (step < 1e-13 * std::max(1.0, std::abs(t)) && !hits_target)
      throw SolverError("step size fell below floor at t = " + std::to_string(t) +
                        "; stiffness bound L = " + std::to_string(L));

    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * DP::a21 * k1[i];
    op.apply(t + DP::c[1] * step, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * (DP::a31 * k1[i] + DP::a32 * k2[i]);
    op.apply(t + DP::c[2] * step, tmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + step * (DP::a41 * k1[i] + DP::a42 * k2[i] + DP::a43 * k3[i]);
    op.apply(t + DP::c[3] * step, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + step * (DP::a51 * k1[i] + DP::a52 * k2[i] + DP::a53 * k3[i] + DP::a54 * k4[i]);
    op.apply(t + DP::c[4] * step, tmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + step * (DP::a61 * k1[i] + DP::a62 * k2[i] + DP::a63 * k3[i] +
                              DP::a64 * k4[i] + DP::a65 * k5[i]);
    const double t_new = hits_target ? target : t + step;
    op.apply(t_new, tmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + step * (DP::b1 * k1[i] + DP::b3 * k3[i] + DP::b4 * k4[i] + DP::b5 * k5[i] +
                               DP::b6 * k6[i]);
    op.apply(t_new, ynew, k7);

    double err = 0.0;
    double min_entry = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double e = step * (DP::e1 * k1[i] + DP::e3 * k3[i] + DP::e4 * k4[i] + DP::e5 * k5[i] +
                               DP::e6 * k6[i] + DP::e7 * k7[i]);
      const double scale = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err = std::max(err, std::abs(e) / scale);
      min_entry = std::min(min_entry, ynew[i]);
    }

    if (err <= 1.0 && min_entry >= opt.negativity_floor) {
      t = t_new;
      y.swap(ynew);
      k1.swap(k7);
      ++traj.stats.accepted;
      traj.stats.max_error_ratio = std::max(traj.stats.max_error_ratio, err);
      traj.stats.min_entry = std::min(traj.stats.min_entry, min_entry);
      double s = 0.0;
      for (double v : y) s += v;
      const double drift = std::abs(s - 1.0);
      traj.stats.max_mass_drift = std::max(traj.stats.max_mass_drift, drift);
      if (drift > opt.mass_drift_limit)
        throw SolverError("probability mass drifted by " + std::to_string(drift));
      const double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (!hits_target || step >= h) h = std::max(h, step) * grow;
      record();
    } else {
      ++traj.stats.rejected;
      const double shrink = err > 1.0 ? std::clamp(0.9 * std::pow(err, -0.25), 0.1, 0.5) : 0.5;
      h = step * shrink;
    }
  }
  return traj;
}

inline Trajectory solve(const ModelSpec& model, std::size_t N, std::span<const double> p0,
                        double t0, std::span<const double> sample_times,
                        const SolverOptions& opt = {}) {
  return solve(GeneratorOperator(model, N), p0, t0, sample_times, opt);
}

inline std::vector<double> unit_vector(std::size_t N, std::size_t state) {
  if (state > N) throw std::invalid_argument("state outside the truncated space");
  std::vector<double> p(N + 1, 0.0);
  p[state] = 1.0;
  return p;
}

struct Characteristics {
  double p0 = 0.0;
  double mean = 0.0;
};

inline Characteristics characteristics(std::span<const double> p) {
  Characteristics c;
  if (p.empty()) return c;
  c.p0 = p[0];
  for (std::size_t k = 1; k < p.size(); ++k) c.mean += static_cast<double>(k) * p[k];
  return c;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k)
    v[k] = n == 1 ? a : a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  return v;
}

struct LimitingOptions {
  std::size_t N_initial = 155;
  double truncation_tol = 1e-4;
  std::size_t N_cap = 4096;
  double t_star = 5.0;
  bool auto_raise_t_star = true;
  double t_star_max = 20.0;
  double solver_tol = 1e-9;
  std::size_t points = 201;  // samples per unit window
};

struct LimitingCharacteristics {
  double t_star = 0.0;
  std::vector<double> times;  // window [t*, t*+1]
  std::vector<double> p0_curve;
  std::vector<double> mean_curve;
  double truncation_error_estimate = 0.0;  // sup-window change from N to 2N
  double period_drift = 0.0;               // sup-window change from [t*-1, t*] to [t*, t*+1]
  std::size_t N_used = 0;
  bool flagged = false;  // error estimate above tolerance
};

namespace detail {

struct WindowCurves {
  std::vector<double> p0, mean, prev_p0, prev_mean;
};

inline WindowCurves window_curves(const ModelSpec& model, std::size_t N, double t_star,
                                  const LimitingOptions& opt) {
  const auto prev = linspace(t_star - 1.0, t_star, opt.points);
  const auto cur = linspace(t_star, t_star + 1.0, opt.points);
  std::vector<double> samples(prev);
  samples.insert(samples.end(), cur.begin() + 1, cur.end());
  const auto p0 = unit_vector(N, 0);
  const auto traj = solve(model, N, p0, 0.0, samples, SolverOptions::from_tolerance(opt.solver_tol));
  WindowCurves w;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const auto c = characteristics(traj.states[k]);
    if (k < opt.points) {
      w.prev_p0.push_back(c.p0);
      w.prev_mean.push_back(c.mean);
    }
    if (k >= opt.points - 1) {
      w.p0.push_back(c.p0);
      w.mean.push_back(c.mean);
    }
  }
  return w;
}

inline double sup_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace detail

/// Idle probability and mean on [t*, t*+1] from X(0) = 0, with truncation
/// controlled by doubling N until the window curves move less than the tolerance.
inline LimitingCharacteristics limiting_regime(const ModelSpec& model, const LimitingOptions& opt = {}) {
  if (!model.is_periodic())
    throw UnsupportedModeError("limiting regime needs 1-periodic intensities");
  if (opt.t_star < 1.0) throw std::invalid_argument("t_star must be >= 1");
  std::size_t N = opt.N_initial;
  double t_star = opt.t_star;
  for (;;) {
    if (2 * N > opt.N_cap)
      throw TruncationError("truncation doubling exceeded the cap N = " + std::to_string(opt.N_cap));
    auto coarse = detail::window_curves(model, N, t_star, opt);
    double drift = std::max(detail::sup_gap(coarse.p0, coarse.prev_p0),
                            detail::sup_gap(coarse.mean, coarse.prev_mean));
    while (opt.auto_raise_t_star && drift > 10.0 * opt.truncation_tol && t_star < opt.t_star_max) {
      t_star += 1.0;
      coarse = detail::window_curves(model, N, t_star, opt);
      drift = std::max(detail::sup_gap(coarse.p0, coarse.prev_p0),
                       detail::sup_gap(coarse.mean, coarse.prev_mean));
    }
    const auto fine = detail::window_curves(model, 2 * N, t_star, opt);
    const double change = std::max(detail::sup_gap(coarse.p0, fine.p0),
                                   detail::sup_gap(coarse.mean, fine.mean));
    if (change < opt.truncation_tol) {
      LimitingCharacteristics out;
      out.t_star = t_star;
      out.times = linspace(t_star, t_star + 1.0, opt.points);
      out.p0_curve = std::move(coarse.p0);
      out.mean_curve = std::move(coarse.mean);
      out.truncation_error_estimate = change;
      out.period_drift = drift;
      out.N_used = N;
      out.flagged = drift > 10.0 * opt.truncation_tol;
      return out;
    }
    N *= 2;
  }
}

/// Rates for a chain truncated to {0..N}: the closed-form aggregates combined
/// with the truncated D B D^{-1} column rates, so the bounds stay valid for
/// the finite chain actually integrated.
class TruncatedEnvelope {
 public:
  TruncatedEnvelope(const ModelSpec& model, const DSequence& d, std::size_t N)
      : closed_(model, d), N_(N) {}

  RateValues at(double t) const {
    RateValues v = closed_.aggregate(t);
    const auto red = build_reduced(build_A(closed_.model(), N_, t));
    const Matrix bs = transform_Bstar(red.B, closed_.dsequence());
    v.alpha = std::min(v.alpha, -log_norm(bs));
    double beta_trunc = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < bs.cols(); ++j) beta_trunc = std::max(beta_trunc, -bs.column_sum(j));
    v.beta = std::max(v.beta, beta_trunc);
    v.chi = std::max(v.chi, log_norm(-bs));
    return v;
  }

  PositivityVerdict positivity(double t, double tol = 1e-12) const {
    const auto red = build_reduced(build_A(closed_.model(), N_, t));
    return check_positivity(transform_Bstar(red.B, closed_.dsequence()), tol);
  }

  BoundCurves curves(double tol = 1e-10) const {
    const ModelSpec& m = closed_.model();
    if (m.is_time_constant()) {
      const auto v = at(0.0);
      return BoundCurves(RateIntegral([a = v.alpha](double) { return a; }, true, v.alpha),
                         RateIntegral([b = v.beta](double) { return b; }, true, v.beta),
                         RateIntegral([c = v.chi](double) { return c; }, true, v.chi));
    }
    const bool periodic = m.is_periodic();
    return BoundCurves(RateIntegral([this](double t) { return at(t).alpha; }, periodic, {}, tol),
                       RateIntegral([this](double t) { return at(t).beta; }, periodic, {}, tol),
                       RateIntegral([this](double t) { return at(t).chi; }, periodic, {}, tol));
  }

  const ClosedFormRates& closed() const { return closed_; }

 private:
  ClosedFormRates closed_;
  std::size_t N_;
};

struct ConvergenceRow {
  double t = 0.0;
  double l1 = 0.0;       // ||p_a - p_b||_1
  double norm_1D = 0.0;  // ||z_a - z_b||_1D
  double norm_1E = 0.0;  // ||z_a - z_b||_1E
  double upper_1D = 0.0;
  double lower_1D_chi = 0.0;
  std::optional<double> lower_1D_beta;
  double l1_upper = 0.0;
  std::optional<double> expectation_upper;
  bool pass = true;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  bool positivity_ok = false;
  bool sign_condition = false;
  double initial_1D = 0.0;
  bool pass = true;
};

/// Solves from two initial distributions and checks the measured distances
/// against the two-sided ||.||_1D envelope, the l1 and ||.||_1E upper bounds,
/// and (under the sign condition) the beta lower bound.
inline ConvergenceTable convergence_experiment(const ModelSpec& model, const DSequence& d,
                                               std::size_t N, std::span<const double> pa,
                                               std::span<const double> pb,
                                               std::span<const double> times,
                                               const SolverOptions& opt = {}, double slack = 1e-8) {
  ConvergenceTable table;
  const TruncatedEnvelope env(model, d, N);
  table.positivity_ok = true;
  const std::size_t grid = model.is_time_constant() ? 1 : 64;
  for (std::size_t k = 0; k < grid; ++k)
    if (!env.positivity(static_cast<double>(k) / grid).ok) table.positivity_ok = false;
  if (!table.positivity_ok)
    throw PreconditionError("off-diagonal positivity of D B D^-1 fails for this model and d");

  const double t0 = times.empty() ? 0.0 : times.front();
  const auto ta = solve(model, N, pa, t0, times, opt);
  const auto tb = solve(model, N, pb, t0, times, opt);
  const auto curves = env.curves();

  auto z_diff = [](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> z(a.size() - 1);
    for (std::size_t k = 1; k < a.size(); ++k) z[k - 1] = a[k] - b[k];
    return z;
  };
  const auto z0 = z_diff(ta.states.front(), tb.states.front());
  table.initial_1D = norm_1D(z0, d);
  table.sign_condition = sign_condition(ta.states.front(), tb.states.front());
  std::optional<double> W;
  if (d.tail_ratio() > 1.0) W = compute_W(d).W;

  for (std::size_t k = 0; k < ta.times.size(); ++k) {
    ConvergenceRow row;
    row.t = ta.times[k];
    const auto z = z_diff(ta.states[k], tb.states[k]);
    row.norm_1D = norm_1D(z, d);
    row.norm_1E = norm_1E(z);
    row.l1 = std::abs(ta.states[k][0] - tb.states[k][0]) + norm_1(z);
    row.upper_1D = curves.upper_1D(t0, row.t, table.initial_1D);
    row.lower_1D_chi = curves.lower_1D_chi(t0, row.t, table.initial_1D);
    row.l1_upper = curves.total_variation_upper(t0, row.t, table.initial_1D);
    if (table.sign_condition)
      row.lower_1D_beta = curves.lower_1D_beta(t0, row.t, table.initial_1D, true);
    if (W) row.expectation_upper = curves.expectation_upper(t0, row.t, table.initial_1D, *W);
    const double tol = slack * std::max(1.0, table.initial_1D);
    row.pass = row.l1 <= row.l1_upper + tol && row.norm_1D <= row.upper_1D + tol &&
               row.norm_1D >= row.lower_1D_chi - tol &&
               (!row.lower_1D_beta || row.norm_1D >= *row.lower_1D_beta - tol) &&
               (!row.expectation_upper || row.norm_1E <= *row.expectation_upper + tol);
    table.pass = table.pass && row.pass;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace ergobound
