#pragma once

#include <cmath>
#include <cstddef>

namespace ergobound {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

namespace detail {

template <typename F>
QuadratureResult simpson_step(F& f, double a, double b, double fa, double fm, double fb,
                              double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return {left + right + delta / 15.0, std::abs(delta) / 15.0};
  const auto l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
  const auto r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
  return {l.value + r.value, l.error_estimate + r.error_estimate};
}

}  // namespace detail

/// Adaptive Simpson on [a,b] with Richardson correction. Handles the kinks
/// that min/max over closed forms produce by local refinement.
template <typename F>
QuadratureResult adaptive_simpson(F&& f, double a, double b, double tol = 1e-8,
                                  int max_depth = 48) {
  if (a == b) return {};
  // Start from a few panels so a kink exactly at the midpoint cannot fool
  // the first error estimate.
  constexpr int kPanels = 8;
  QuadratureResult total;
  const double h = (b - a) / kPanels;
  double fa = f(a);
  for (int p = 0; p < kPanels; ++p) {
    const double x0 = a + h * p;
    const double x1 = p + 1 == kPanels ? b : a + h * (p + 1);
    const double xm = 0.5 * (x0 + x1);
    const double fm = f(xm);
    const double fb = f(x1);
    const double whole = (x1 - x0) / 6.0 * (fa + 4.0 * fm + fb);
    const auto r = detail::simpson_step(f, x0, x1, fa, fm, fb, whole, tol / kPanels, max_depth);
    total.value += r.value;
    total.error_estimate += r.error_estimate;
    fa = fb;
  }
  return total;
}

}  // namespace ergobound
