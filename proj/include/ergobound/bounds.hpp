#pragma once

// Closed-form column rates alpha_i(t), chi_i(t) of the D-transformed reduced
// generator for the four queue classes, their aggregates, the periodic
// constants (a, K, R, F) and the convergence-bound curves built from them.
//
// Sign convention: the i-th column of D B D^{-1} sums to -alpha_i(t), and its
// absolute column sum is chi_i(t) whenever the off-diagonal part is non-negative.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ergobound/dsequence.hpp"
#include "ergobound/errors.hpp"
#include "ergobound/generator.hpp"
#include "ergobound/matrix.hpp"
#include "ergobound/model.hpp"
#include "ergobound/quadrature.hpp"
#include "json.hpp"

namespace ergobound {

struct ColumnRates {
  double alpha = 0.0;
  double chi = 0.0;
};

/// alpha_i and chi_i from rate accessors. `lam(k)` and `mu(k)` are indexed the
/// way the class indexes them: by state for state-dependent rates, by batch
/// size for batch rates. Index 0 of a state-dependent service rate must be 0.
template <typename Lambda, typename Mu>
ColumnRates closed_form_rates(QueueClass cls, std::size_t servers, const DSequence& d,
                              std::size_t i, Lambda&& lam, Mu&& mu) {
  if (i < 1) throw std::domain_error("column index must be >= 1");
  const std::size_t S = servers;
  auto r = [&d](std::size_t num, std::size_t den) { return d.ratio(num, den); };

  // Batch-service transfer term sum_{k=1}^{i-1} (mu_{i-k} - mu_i) d_k / d_i.
  auto batch_transfer = [&] {
    double s = 0.0;
    const std::size_t k0 = i > S ? i - S : 1;
    for (std::size_t k = k0; k < i; ++k) s += mu(i - k) * r(k, i);
    const double mui = mu(i);
    if (mui != 0.0)
      for (std::size_t k = 1; k < i; ++k) s -= mui * r(k, i);
    return s;
  };
  auto batch_served = [&] {
    double s = 0.0;
    for (std::size_t k = 1; k <= std::min(i, S); ++k) s += mu(k);
    return s;
  };

  ColumnRates out;
  switch (cls) {
    case QueueClass::BirthDeath: {
      const double down = r(i - 1, i) * mu(i - 1);
      const double up = r(i + 1, i) * lam(i);
      out.alpha = mu(i) - down + lam(i - 1) - up;
      out.chi = mu(i) + down + lam(i - 1) + up;
      break;
    }
    case QueueClass::BatchArrival: {
      const double down = r(i - 1, i) * mu(i - 1);
      double lam_total = 0.0, lam_weighted = 0.0;
      for (std::size_t k = 1; k <= S; ++k) {
        const double lk = lam(k);
        lam_total += lk;
        lam_weighted += r(k + i, i) * lk;
      }
      out.alpha = mu(i) - down + lam_total - lam_weighted;
      out.chi = mu(i) + down + lam_total + lam_weighted;
      break;
    }
    case QueueClass::BatchService: {
      // Leading term is the total batch-service outflow sum_{k<=min(i,S)} mu_k.
      const double served = batch_served();
      const double transfer = batch_transfer();
      const double up = r(i + 1, i) * lam(i);
      out.alpha = served - transfer + lam(i - 1) - up;
      out.chi = served + transfer + lam(i - 1) + up;
      break;
    }
    case QueueClass::BatchBoth: {
      double lam_total = 0.0, lam_weighted = 0.0;
      for (std::size_t k = 1; k <= S; ++k) {
        const double lk = lam(k);
        lam_total += lk;
        lam_weighted += r(k + i, i) * lk;
      }
      const double neg_diag = batch_served() + lam_total;
      const double transfer = batch_transfer();
      out.alpha = neg_diag - transfer - lam_weighted;
      out.chi = neg_diag + transfer + lam_weighted;
      break;
    }
  }
  return out;
}

namespace detail {
inline void check_column_args(std::int64_t i, double t) {
  if (i < 1) throw std::domain_error("column index must be >= 1");
  if (!(t >= 0.0)) throw std::domain_error("time must be non-negative");
}
}  // namespace detail

inline double alpha_i(const ModelSpec& model, const DSequence& d, std::int64_t i, double t) {
  detail::check_column_args(i, t);
  auto lam = [&](std::size_t k) { return eval_lambda(model, static_cast<std::int64_t>(k), t); };
  auto mu = [&](std::size_t k) { return eval_mu(model, static_cast<std::int64_t>(k), t); };
  return closed_form_rates(model.queue_class, model.servers, d, static_cast<std::size_t>(i), lam,
                           mu)
      .alpha;
}

inline double chi_i(const ModelSpec& model, const DSequence& d, std::int64_t i, double t) {
  detail::check_column_args(i, t);
  auto lam = [&](std::size_t k) { return eval_lambda(model, static_cast<std::int64_t>(k), t); };
  auto mu = [&](std::size_t k) { return eval_mu(model, static_cast<std::int64_t>(k), t); };
  return closed_form_rates(model.queue_class, model.servers, d, static_cast<std::size_t>(i), lam,
                           mu)
      .chi;
}

/// sup_j (m_jj + sum_{i != j} |m_ij|) over columns 1..max_col (all if 0).
inline double log_norm(const Matrix& M, std::size_t max_col = 0) {
  const std::size_t cols = max_col == 0 ? M.cols() : std::min(max_col, M.cols());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < M.rows(); ++i) s += i == j ? M(i, j) : std::abs(M(i, j));
    best = std::max(best, s);
  }
  return best;
}

/// Index from which alpha_i and chi_i no longer depend on i: the d-sequence is
/// geometric, every state multiplier has saturated and batch windows of width
/// S sit entirely inside the geometric tail.
inline std::size_t eventually_constant_index(const ModelSpec& model, const DSequence& d) {
  const std::size_t S = model.servers;
  std::size_t saturation = S;
  if (model.queue_class == QueueClass::BirthDeath) {
    const auto& rules = model.rules();
    saturation = std::max(rules.lambda.constant_from(S), rules.mu.constant_from(S));
  }
  return std::max(d.head_length(), saturation) + S + 1;
}

struct RateValues {
  double alpha = 0.0;  // inf_i alpha_i(t)
  double beta = 0.0;   // sup_i alpha_i(t)
  double chi = 0.0;    // sup_i chi_i(t)
  std::size_t alpha_index = 0;
  std::size_t beta_index = 0;
  std::size_t chi_index = 0;
};

/// alpha_i(t) = lambda(t) a^lam_i + mu(t) a^mu_i: the closed forms are linear in
/// the rates, so coefficients are tabulated once and every t costs O(J_max).
class ClosedFormRates {
 public:
  ClosedFormRates(ModelSpec model, DSequence d, std::size_t j_max = 0)
      : model_(std::move(model)), d_(std::move(d)) {
    model_.validate();
    constant_from_ = eventually_constant_index(model_, d_);
    j_max_ = std::max(j_max, constant_from_ + 50);
    coef_.resize(j_max_ + 1);
    auto lam_coef = [&](std::size_t k) { return arrival_coefficient(model_, k); };
    auto mu_coef = [&](std::size_t k) { return service_coefficient(model_, k); };
    auto zero = [](std::size_t) { return 0.0; };
    for (std::size_t i = 1; i <= j_max_; ++i) {
      const auto from_lam = closed_form_rates(model_.queue_class, model_.servers, d_, i, lam_coef, zero);
      const auto from_mu = closed_form_rates(model_.queue_class, model_.servers, d_, i, zero, mu_coef);
      coef_[i] = {from_lam.alpha, from_mu.alpha, from_lam.chi, from_mu.chi};
    }
    const auto& tail = coef_[j_max_];
    const auto& start = coef_[constant_from_];
    auto same = [](double a, double b) {
      return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
    };
    tail_confirmed_ = same(tail.alpha_lam, start.alpha_lam) && same(tail.alpha_mu, start.alpha_mu) &&
                      same(tail.chi_lam, start.chi_lam) && same(tail.chi_mu, start.chi_mu);
  }

  double alpha_i(std::size_t i, double t) const {
    const auto& c = coef_.at(std::min(i, j_max_));
    return c.alpha_lam * model_.lambda(t) + c.alpha_mu * model_.mu(t);
  }
  double chi_i(std::size_t i, double t) const {
    const auto& c = coef_.at(std::min(i, j_max_));
    return c.chi_lam * model_.lambda(t) + c.chi_mu * model_.mu(t);
  }

  RateValues aggregate(double t) const {
    const double lam = model_.lambda(t);
    const double mu = model_.mu(t);
    RateValues v;
    v.alpha = std::numeric_limits<double>::infinity();
    v.beta = -std::numeric_limits<double>::infinity();
    v.chi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i <= j_max_; ++i) {
      const auto& c = coef_[i];
      const double a = c.alpha_lam * lam + c.alpha_mu * mu;
      const double x = c.chi_lam * lam + c.chi_mu * mu;
      if (a < v.alpha) {
        v.alpha = a;
        v.alpha_index = i;
      }
      if (a > v.beta) {
        v.beta = a;
        v.beta_index = i;
      }
      if (x > v.chi) {
        v.chi = x;
        v.chi_index = i;
      }
    }
    return v;
  }

  double alpha(double t) const { return aggregate(t).alpha; }
  double beta(double t) const { return aggregate(t).beta; }
  double chi(double t) const { return aggregate(t).chi; }

  /// alpha_i for i >= constant_from(), the value the infinite tail contributes.
  double tail_alpha(double t) const { return alpha_i(j_max_, t); }

  std::size_t j_max() const { return j_max_; }
  std::size_t constant_from() const { return constant_from_; }
  bool tail_confirmed() const { return tail_confirmed_; }
  const ModelSpec& model() const { return model_; }
  const DSequence& dsequence() const { return d_; }

 private:
  struct Coefficients {
    double alpha_lam = 0.0, alpha_mu = 0.0, chi_lam = 0.0, chi_mu = 0.0;
  };
  ModelSpec model_;
  DSequence d_;
  std::size_t j_max_ = 0;
  std::size_t constant_from_ = 0;
  bool tail_confirmed_ = false;
  std::vector<Coefficients> coef_;
};

struct AggregateResult {
  RateValues values;
  bool tail_confirmed = false;  // false: inf/sup only cover the scanned range
  std::size_t j_max = 0;
};

inline AggregateResult aggregate(const ModelSpec& model, const DSequence& d, double t,
                                 std::size_t j_max = 0) {
  ClosedFormRates rates(model, d, j_max);
  return {rates.aggregate(t), rates.tail_confirmed(), rates.j_max()};
}

/// Integral of a scalar rate function with shortcuts for constant and
/// 1-periodic integrands (whole periods reuse the one-period integral).
class RateIntegral {
 public:
  RateIntegral(std::function<double(double)> f, bool periodic, std::optional<double> constant,
               double tol = 1e-10)
      : f_(std::move(f)), periodic_(periodic), constant_(constant), tol_(tol) {
    if (periodic_ && !constant_) period_ = adaptive_simpson(f_, 0.0, 1.0, tol_).value;
  }

  double operator()(double s, double t) const {
    if (t < s) return -(*this)(t, s);
    if (constant_) return *constant_ * (t - s);
    if (!periodic_) return adaptive_simpson(f_, s, t, tol_ * std::max(1.0, t - s)).value;
    return from_zero(t) - from_zero(s);
  }

  double value(double t) const { return f_(t); }

 private:
  double from_zero(double t) const {
    const double whole = std::floor(t);
    return whole * period_ + adaptive_simpson(f_, 0.0, t - whole, tol_).value;
  }

  std::function<double(double)> f_;
  bool periodic_;
  std::optional<double> constant_;
  double tol_;
  double period_ = 0.0;
};

struct PeriodicConstants {
  double a = 0.0;  // integral of alpha over one period
  double K = 0.0;  // sup_{|t-s|<=1} integral_s^t alpha
  double R = 1.0;  // e^K (1 in the homogeneous branch)
  double F = 0.0;  // sup_t ||f(t)||_1D
  double quadrature_error_estimate = 0.0;
  bool homogeneous = false;
};

/// f(t) only carries arrivals out of state 0, so f(t) = lambda(t) * f_coef.
inline std::vector<double> forcing_coefficients(const ModelSpec& model) {
  const std::size_t reach = has_batch_arrivals(model.queue_class) ? model.servers : 1;
  std::vector<double> f(reach, 0.0);
  for_each_transition(model, 0, reach, [&](std::size_t to, double la, double) {
    if (to >= 1) f[to - 1] += la;
  });
  return f;
}

inline double forcing_bound_F(const ModelSpec& model, const DSequence& d) {
  const auto coef = forcing_coefficients(model);
  return model.lambda.sup() * norm_1D(coef, d);
}

namespace detail {

/// max_{s in [0,1], s <= t <= s+1} (c(t) - c(s)) for the cumulative integral c
/// tabulated on a uniform grid over [0,2] with `n` cells per unit.
inline std::pair<std::size_t, std::size_t> best_window(const std::vector<double>& c,
                                                       std::size_t n) {
  std::size_t bi = 0, bj = 0;
  double best = 0.0;
  for (std::size_t i = 0; i <= n; ++i)
    for (std::size_t j = i; j <= i + n; ++j)
      if (c[j] - c[i] > best) {
        best = c[j] - c[i];
        bi = i;
        bj = j;
      }
  return {bi, bj};
}

}  // namespace detail

inline PeriodicConstants periodic_constants(const ClosedFormRates& rates,
                                            double quadrature_tol = 1e-8,
                                            std::size_t grid = 2048) {
  const ModelSpec& model = rates.model();
  if (!model.is_periodic())
    throw UnsupportedModeError(
        "periodic constants need 1-periodic intensities; use the raw bound curves instead");
  PeriodicConstants pc;
  pc.F = forcing_bound_F(model, rates.dsequence());
  if (model.is_time_constant()) {
    const double alpha = rates.alpha(0.0);
    pc.homogeneous = true;
    pc.a = alpha;
    pc.K = std::max(alpha, 0.0);
    pc.R = 1.0;
    return pc;
  }
  auto alpha = [&rates](double t) { return rates.alpha(t); };
  const auto whole = adaptive_simpson(alpha, 0.0, 1.0, quadrature_tol);
  pc.a = whole.value;
  pc.quadrature_error_estimate = whole.error_estimate;

  // Cumulative integral on [0,2] via periodic extension.
  const double h = 1.0 / static_cast<double>(grid);
  std::vector<double> c(2 * grid + 1, 0.0);
  for (std::size_t k = 0; k < grid; ++k) {
    const auto cell = adaptive_simpson(alpha, k * h, (k + 1) * h, quadrature_tol * h);
    c[k + 1] = c[k] + cell.value;
    pc.quadrature_error_estimate += cell.error_estimate;
  }
  for (std::size_t k = 1; k <= grid; ++k) c[grid + k] = c[grid] + c[k];
  const auto [bi, bj] = detail::best_window(c, grid);
  double K = c[bj] - c[bi];

  // Refine both endpoints on a finer local grid around the best pair.
  if (bj > bi && bj - bi < grid) {
    constexpr int kSub = 64;
    const double s0 = bi * h, t0 = bj * h;
    auto cum = [&](double x) {  // c(x) from the nearest grid node
      const double xf = std::clamp(x, 0.0, 2.0);
      const auto node = static_cast<std::size_t>(std::floor(xf / h));
      const std::size_t base = std::min(node, 2 * grid);
      const double xn = base * h;
      return c[base] + adaptive_simpson(alpha, xn, xf, quadrature_tol * h).value;
    };
    for (int a = -kSub; a <= kSub; ++a) {
      const double s = s0 + a * h / kSub;
      if (s < 0.0 || s > 1.0) continue;
      const double cs = cum(s);
      for (int b = -kSub; b <= kSub; b += 4) {
        const double t = t0 + b * h / kSub;
        if (t < s || t - s > 1.0 || t > 2.0) continue;
        K = std::max(K, cum(t) - cs);
      }
    }
  }
  pc.K = std::max({K, pc.a, 0.0});
  pc.R = std::exp(pc.K);
  return pc;
}

inline PeriodicConstants periodic_constants(const ModelSpec& model, const DSequence& d,
                                            double quadrature_tol = 1e-8) {
  return periodic_constants(ClosedFormRates(model, d), quadrature_tol);
}

/// Certified lower bound alpha on the decay parameter of a time-homogeneous chain;
/// nullopt when alpha <= 0 (no certificate).
inline std::optional<double> decay_parameter_bound(const ModelSpec& model, const DSequence& d) {
  if (!model.is_time_constant())
    throw UnsupportedModeError("decay-parameter bound needs time-constant intensities");
  const double alpha = ClosedFormRates(model, d).alpha(0.0);
  if (!(alpha > 0.0)) return std::nullopt;
  return alpha;
}

/// True when D(p_a - p_b) >= 0, i.e. every tail sum of z_a - z_b is non-negative.
inline bool sign_condition(std::span<const double> pa, std::span<const double> pb,
                           double tol = 1e-15) {
  double tail = 0.0;
  for (std::size_t k = pa.size(); k-- > 1;) {
    tail += pa[k] - pb[k];
    if (tail < -tol) return false;
  }
  return true;
}

/// Evaluable bound curves from integrals of alpha, beta and chi.
class BoundCurves {
 public:
  BoundCurves(RateIntegral alpha, RateIntegral beta, RateIntegral chi)
      : alpha_(std::move(alpha)), beta_(std::move(beta)), chi_(std::move(chi)) {}

  static BoundCurves from_rates(const ClosedFormRates& rates, double tol = 1e-10) {
    const ModelSpec& m = rates.model();
    const bool periodic = m.is_periodic();
    if (m.is_time_constant()) {
      const auto v = rates.aggregate(0.0);
      return BoundCurves(RateIntegral([a = v.alpha](double) { return a; }, true, v.alpha),
                         RateIntegral([b = v.beta](double) { return b; }, true, v.beta),
                         RateIntegral([c = v.chi](double) { return c; }, true, v.chi));
    }
    return BoundCurves(RateIntegral([&rates](double t) { return rates.alpha(t); }, periodic, {}, tol),
                       RateIntegral([&rates](double t) { return rates.beta(t); }, periodic, {}, tol),
                       RateIntegral([&rates](double t) { return rates.chi(t); }, periodic, {}, tol));
  }

  double alpha_integral(double s, double t) const { return alpha_(s, t); }
  double beta_integral(double s, double t) const { return beta_(s, t); }
  double chi_integral(double s, double t) const { return chi_(s, t); }

  /// Upper side of the two-sided ||.||_1D envelope.
  double upper_1D(double s, double t, double initial_1D) const {
    return std::exp(-alpha_(s, t)) * initial_1D;
  }
  /// Lower side of the two-sided ||.||_1D envelope, via chi.
  double lower_1D_chi(double s, double t, double initial_1D) const {
    return std::exp(-chi_(s, t)) * initial_1D;
  }
  /// Lower bound via beta; only valid when D(p*(s) - p**(s)) >= 0.
  double lower_1D_beta(double s, double t, double initial_1D, bool sign_condition_holds) const {
    if (!sign_condition_holds)
      throw PreconditionError("beta lower bound needs D(p*(s) - p**(s)) >= 0 componentwise");
    return std::exp(-beta_(s, t)) * initial_1D;
  }
  /// l1 distance bound: 4 e^{-int alpha} ||z*(s) - z**(s)||_1D.
  double total_variation_upper(double s, double t, double initial_z_1D) const {
    return 4.0 * std::exp(-alpha_(s, t)) * initial_z_1D;
  }
  /// ||.||_1E bound: (2/W) e^{-int alpha} ||z*(s) - z**(s)||_1D.
  double expectation_upper(double s, double t, double initial_z_1D, double W) const {
    return 2.0 / W * std::exp(-alpha_(s, t)) * initial_z_1D;
  }

  /// Distance to the limiting regime from p(0) = e_0: (4FR/a) e^{-at}.
  static double limit_distance(const PeriodicConstants& pc, double t) {
    return 4.0 * pc.F * pc.R / pc.a * std::exp(-pc.a * t);
  }
  /// Distance of the mean to the limiting mean from p(0) = e_0: (FR/(a W*)) e^{-at}.
  static double limit_mean_distance(const PeriodicConstants& pc, double W_star, double t) {
    return pc.F * pc.R / (pc.a * W_star) * std::exp(-pc.a * t);
  }

 private:
  RateIntegral alpha_;
  RateIntegral beta_;
  RateIntegral chi_;
};

enum class ErgodicityVerdict { WeaklyErgodic, StronglyErgodic, Inconclusive };

inline const char* to_string(ErgodicityVerdict v) {
  switch (v) {
    case ErgodicityVerdict::WeaklyErgodic: return "weakly-ergodic";
    case ErgodicityVerdict::StronglyErgodic: return "strongly-ergodic";
    case ErgodicityVerdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct BoundsOptions {
  double quadrature_tol = 1e-8;
  double positivity_tol = 1e-12;
  std::size_t positivity_grid = 64;  // time points per period for the positivity scan
  double horizon = 10.0;             // curve span, and the certification horizon if not periodic
  std::size_t curve_points = 101;
};

struct CurveSample {
  double t = 0.0;
  double exp_alpha = 0.0;  // e^{-int_0^t alpha}
  double exp_beta = 0.0;
  double exp_chi = 0.0;
  std::optional<double> limit_distance;       // (4FR/a) e^{-at}
  std::optional<double> limit_mean_distance;  // (FR/(aW*)) e^{-at}
};

struct BoundsReport {
  ErgodicityVerdict verdict = ErgodicityVerdict::Inconclusive;
  bool positivity_ok = false;
  PositivityVerdict positivity;
  double positivity_witness_time = 0.0;
  bool tail_confirmed = false;
  bool horizon_limited = false;
  std::size_t j_max = 0;
  std::optional<NormConstants> norms;
  std::optional<PeriodicConstants> periodic;
  std::optional<double> decay_lower_bound;
  double alpha_integral_horizon = 0.0;  // int_0^H alpha
  double tail_alpha_min = 0.0;          // min over the period grid of the constant tail alpha_i
  std::vector<CurveSample> curves;
  std::vector<std::string> notes;
};

/// Positivity of the infinite D B D^{-1}, checked on a truncation wide enough
/// that every column up to j_max is exact.
inline std::pair<PositivityVerdict, double> check_model_positivity(const ClosedFormRates& rates,
                                                                   const BoundsOptions& opt) {
  const ModelSpec& m = rates.model();
  const std::size_t cols = rates.j_max();
  const std::size_t N = cols + m.servers + 1;
  std::vector<double> times;
  if (m.is_time_constant()) {
    times = {0.0};
  } else {
    const double span = m.is_periodic() ? 1.0 : opt.horizon;
    const std::size_t n = m.is_periodic() ? opt.positivity_grid
                                          : opt.positivity_grid * static_cast<std::size_t>(
                                                                      std::ceil(opt.horizon));
    for (std::size_t k = 0; k < n; ++k) times.push_back(span * k / static_cast<double>(n));
  }
  PositivityVerdict worst;
  double worst_t = 0.0;
  bool first = true;
  for (double t : times) {
    const auto red = build_reduced(build_A(m, N, t));
    const auto v = check_positivity(transform_Bstar(red.B, rates.dsequence()), opt.positivity_tol, cols);
    if (first || v.worst_value < worst.worst_value) {
      worst = v;
      worst_t = t;
      first = false;
    }
    if (!v.ok) return {v, t};
  }
  return {worst, worst_t};
}

inline BoundsReport compute_bounds(const ModelSpec& model, const DSequence& d,
                                   const BoundsOptions& opt = {}) {
  BoundsReport rep;
  const ClosedFormRates rates(model, d);
  rep.j_max = rates.j_max();
  rep.tail_confirmed = rates.tail_confirmed();
  if (!rep.tail_confirmed) rep.notes.push_back("alpha_i not constant past the scan; inf covers scanned range only");

  std::tie(rep.positivity, rep.positivity_witness_time) = check_model_positivity(rates, opt);
  rep.positivity_ok = rep.positivity.ok;

  if (d.tail_ratio() > 1.0)
    rep.norms = compute_W(d);
  else
    rep.notes.push_back("tail ratio 1: W and W* are not attained (infimum 0)");

  double tail_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < 256; ++k) tail_min = std::min(tail_min, rates.tail_alpha(k / 256.0));
  rep.tail_alpha_min = tail_min;

  const auto curves = BoundCurves::from_rates(rates, 1e-10);
  rep.alpha_integral_horizon = curves.alpha_integral(0.0, opt.horizon);

  if (model.is_periodic()) {
    rep.periodic = periodic_constants(rates, opt.quadrature_tol);
  } else {
    rep.horizon_limited = true;
    rep.notes.push_back("non-periodic intensities: certification limited to the horizon");
  }

  if (!rep.positivity_ok) {
    rep.verdict = ErgodicityVerdict::Inconclusive;
    rep.notes.push_back("off-diagonal positivity of D B D^-1 fails");
  } else if (model.is_time_constant()) {
    rep.decay_lower_bound = decay_parameter_bound(model, d);
    rep.verdict = rep.decay_lower_bound ? ErgodicityVerdict::StronglyErgodic
                                        : ErgodicityVerdict::Inconclusive;
  } else if (rep.periodic && rep.periodic->a > 0.0) {
    rep.verdict = ErgodicityVerdict::WeaklyErgodic;
  } else {
    rep.verdict = ErgodicityVerdict::Inconclusive;
  }

  const bool certified = rep.verdict != ErgodicityVerdict::Inconclusive;
  const std::size_t n = std::max<std::size_t>(opt.curve_points, 2);
  for (std::size_t k = 0; k < n; ++k) {
    CurveSample s;
    s.t = opt.horizon * k / static_cast<double>(n - 1);
    s.exp_alpha = std::exp(-curves.alpha_integral(0.0, s.t));
    s.exp_beta = std::exp(-curves.beta_integral(0.0, s.t));
    s.exp_chi = std::exp(-curves.chi_integral(0.0, s.t));
    if (certified && rep.periodic && rep.periodic->a > 0.0) {
      s.limit_distance = BoundCurves::limit_distance(*rep.periodic, s.t);
      if (rep.norms) s.limit_mean_distance = BoundCurves::limit_mean_distance(*rep.periodic, rep.norms->W_star, s.t);
    }
    rep.curves.push_back(s);
  }
  return rep;
}

inline nlohmann::json to_json(const BoundsReport& rep) {
  using nlohmann::json;
  json j;
  j["verdict"] = to_string(rep.verdict);
  j["positivity"] = {{"ok", rep.positivity_ok},
                     {"worst_offdiagonal", rep.positivity.worst_value},
                     {"witness_row", rep.positivity.row},
                     {"witness_col", rep.positivity.col},
                     {"witness_time", rep.positivity_witness_time}};
  j["tail_confirmed"] = rep.tail_confirmed;
  j["horizon_limited"] = rep.horizon_limited;
  j["j_max"] = rep.j_max;
  j["alpha_integral_horizon"] = rep.alpha_integral_horizon;
  j["tail_alpha_min"] = rep.tail_alpha_min;
  if (rep.norms)
    j["norm_constants"] = {{"W", rep.norms->W},
                           {"W_index", rep.norms->W_index},
                           {"W_star", rep.norms->W_star},
                           {"W_star_index", rep.norms->W_star_index}};
  else
    j["norm_constants"] = nullptr;
  if (rep.periodic)
    j["periodic_constants"] = {{"a", rep.periodic->a},
                               {"K", rep.periodic->K},
                               {"R", rep.periodic->R},
                               {"F", rep.periodic->F},
                               {"homogeneous", rep.periodic->homogeneous},
                               {"quadrature_error_estimate", rep.periodic->quadrature_error_estimate}};
  else
    j["periodic_constants"] = nullptr;
  j["decay_lower_bound"] = rep.decay_lower_bound ? json(*rep.decay_lower_bound) : json(nullptr);
  j["notes"] = rep.notes;
  return j;
}

}  // namespace ergobound
