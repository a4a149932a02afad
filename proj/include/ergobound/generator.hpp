#pragma once

// Truncated transposed intensity matrix A(t), the reduced system (B(t), f(t))
// obtained by eliminating p_0, and the D-transform B*(t) = D B(t) D^{-1}.
//
// Truncation convention: arrivals that would leave {0..N} are deleted and the
// diagonal only counts transitions that stay inside, so columns of A sum to 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergobound/dsequence.hpp"
#include "ergobound/errors.hpp"
#include "ergobound/matrix.hpp"
#include "ergobound/model.hpp"

namespace ergobound {

/// A(t) with a_{to,from} = rate(from -> to); column index is the source state.
inline Matrix build_A(const ModelSpec& model, std::size_t N, double t) {
  if (N < 1) throw std::invalid_argument("truncation size N must be >= 1");
  if (!(t >= 0.0)) throw std::domain_error("time must be non-negative");
  const double lam = model.lambda(t);
  const double mu = model.mu(t);
  Matrix A(N + 1, N + 1);
  for (std::size_t j = 0; j <= N; ++j) {
    double out = 0.0;
    for_each_transition(model, j, N, [&](std::size_t to, double la, double mc) {
      const double rate = la * lam + mc * mu;
      A(to, j) += rate;
      out += rate;
    });
    A(j, j) = -out;
  }
  return A;
}

struct ReducedSystem {
  Matrix B;               // b_ij = a_ij - a_i0, i,j = 1..N (stored 0-based)
  std::vector<double> f;  // f_i = a_i0
};

inline ReducedSystem build_reduced(const Matrix& A, double tol = 1e-12) {
  if (A.rows() != A.cols() || A.rows() < 2)
    throw InvalidGeneratorError("A must be square with at least two states");
  const std::size_t n = A.rows() - 1;
  for (std::size_t j = 0; j <= n; ++j) {
    const double s = A.column_sum(j);
    const double scale = std::max(1.0, A.column_abs_sum(j));
    if (std::abs(s) > tol * scale)
      throw InvalidGeneratorError("column " + std::to_string(j) + " of A sums to " +
                                  std::to_string(s) + ", not 0");
  }
  ReducedSystem r{Matrix(n, n), std::vector<double>(n)};
  for (std::size_t i = 1; i <= n; ++i) {
    r.f[i - 1] = A(i, 0);
    for (std::size_t j = 1; j <= n; ++j) r.B(i - 1, j - 1) = A(i, j) - A(i, 0);
  }
  return r;
}

struct DMatrices {
  Matrix D;     // D_ik = d_i for k >= i
  Matrix Dinv;  // upper bidiagonal: 1/d_i on the diagonal, -1/d_{i+1} above
};

inline DMatrices build_D(const DSequence& d, std::size_t N) {
  if (N < 1) throw std::invalid_argument("size must be >= 1");
  DMatrices m{Matrix(N, N), Matrix(N, N)};
  for (std::size_t i = 0; i < N; ++i) {
    const double di = d(static_cast<std::int64_t>(i + 1));
    for (std::size_t k = i; k < N; ++k) m.D(i, k) = di;
    m.Dinv(i, i) = 1.0 / di;
    if (i + 1 < N) m.Dinv(i, i + 1) = -1.0 / d(static_cast<std::int64_t>(i + 2));
  }
  return m;
}

/// D B D^{-1} using the bidiagonal D^{-1} (column differences) followed by
/// the upper-triangular D (weighted suffix sums); O(N^2), no dense products.
inline Matrix transform_Bstar(const Matrix& B, const DSequence& d) {
  if (B.rows() != B.cols()) throw std::invalid_argument("B must be square");
  const std::size_t n = B.rows();
  // C = B D^{-1}: column j is (B_j - B_{j-1}) / d_j  (1-based j, B_0 = 0).
  Matrix C(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double inv = 1.0 / d(static_cast<std::int64_t>(j + 1));
    for (std::size_t i = 0; i < n; ++i) {
      const double prev = j > 0 ? B(i, j - 1) : 0.0;
      C(i, j) = (B(i, j) - prev) * inv;
    }
  }
  // Bstar = D C: row i is d_i * sum_{k >= i} C_k.
  Matrix out(n, n);
  std::vector<double> suffix(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    const double di = d(static_cast<std::int64_t>(i + 1));
    for (std::size_t j = 0; j < n; ++j) {
      suffix[j] += C(i, j);
      out(i, j) = di * suffix[j];
    }
  }
  return out;
}

struct PositivityVerdict {
  bool ok = true;
  double worst_value = 0.0;  // most negative off-diagonal entry seen
  std::size_t row = 0;       // 1-based indices of the witness
  std::size_t col = 0;
};

/// Off-diagonal non-negativity of B*, scanning columns 1..max_col (all if 0).
inline PositivityVerdict check_positivity(const Matrix& Bstar, double tol = 1e-12,
                                          std::size_t max_col = 0) {
  PositivityVerdict v;
  const std::size_t cols = max_col == 0 ? Bstar.cols() : std::min(max_col, Bstar.cols());
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < Bstar.rows(); ++i) {
      if (i == j) continue;
      if (Bstar(i, j) < worst) {
        worst = Bstar(i, j);
        v.row = i + 1;
        v.col = j + 1;
      }
    }
  if (worst == std::numeric_limits<double>::infinity()) return v;
  v.worst_value = worst;
  v.ok = worst >= -tol;
  if (v.ok) v.row = v.col = 0;
  return v;
}

struct RateMatrices {
  double t = 0.0;
  std::size_t N = 0;
  Matrix A;
  Matrix B;
  std::vector<double> f;
  Matrix Bstar;
};

inline RateMatrices build_rate_matrices(const ModelSpec& model, const DSequence& d, std::size_t N,
                                        double t) {
  RateMatrices r;
  r.t = t;
  r.N = N;
  r.A = build_A(model, N, t);
  auto red = build_reduced(r.A);
  r.B = std::move(red.B);
  r.f = std::move(red.f);
  r.Bstar = transform_Bstar(r.B, d);
  return r;
}

namespace detail {
inline void write_matrix_block(std::ostream& os, const char* name, const Matrix& M) {
  os << "# matrix: " << name << " (" << M.rows() << "x" << M.cols() << ")\n";
  for (std::size_t i = 0; i < M.rows(); ++i) {
    for (std::size_t j = 0; j < M.cols(); ++j) os << (j ? "," : "") << M(i, j);
    os << '\n';
  }
}
}  // namespace detail

/// Debug dump of A, B and B* at one time point, row-major.
inline void write_matrices_csv(std::ostream& os, const RateMatrices& r, QueueClass cls) {
  const auto old_precision = os.precision(17);
  os << "# N: " << r.N << "\n# t: " << r.t << "\n# class: " << to_string(cls) << '\n';
  detail::write_matrix_block(os, "A", r.A);
  detail::write_matrix_block(os, "B", r.B);
  detail::write_matrix_block(os, "Bstar", r.Bstar);
  os.precision(old_precision);
}

}  // namespace ergobound
