#pragma once

// Dense factorizations built on Jacobi rotations. Inputs are small (dims up to
// a few hundred); clarity and determinism take priority over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "schatten_lab/matrix.hpp"

namespace schatten {

struct SvdFactorization {
  Matrix U;                   // m x m orthogonal
  std::vector<double> sigma;  // min(m, n) values, descending
  Matrix V;                   // n x n orthogonal
};

struct SymEigFactorization {
  Matrix U;                    // n x n orthogonal, column j pairs with lambda[j]
  std::vector<double> lambda;  // descending
};

namespace linalg_config {
/// Sweep cap shared by both Jacobi iterations.
inline constexpr int max_sweeps = 30;
/// One-sided Jacobi rotates a column pair while |<w_p, w_q>| > pair_tol·|w_p|·|w_q|.
inline constexpr double pair_tol = 1e-15;
/// Two-sided Jacobi stops once the off-diagonal Frobenius mass is at most off_tol·|M|_F.
inline constexpr double off_tol = 1e-14;
}  // namespace linalg_config

namespace detail {

inline void require_finite(const Matrix& m, const char* what) {
  require(m.all_finite(), std::string(what) + ": input has non-finite entries");
}

/// Indices that sort `values` descending; ties keep ascending index order.
inline std::vector<std::size_t> descending_order(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

/// Extends `basis` (orthonormal columns in its leading `filled` columns, flagged
/// by `have`) to a full orthonormal basis by Gram-Schmidt on coordinate vectors.
inline void complete_orthonormal(Matrix& basis, std::vector<bool>& have) {
  const std::size_t n = basis.rows();
  for (std::size_t j = 0; j < basis.cols(); ++j) {
    if (have[j]) continue;
    double best_norm = -1.0;
    std::vector<double> best;
    for (std::size_t e = 0; e < n; ++e) {
      std::vector<double> v(n, 0.0);
      v[e] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < basis.cols(); ++k) {
          if (!have[k]) continue;
          double proj = 0.0;
          for (std::size_t i = 0; i < n; ++i) proj += basis(i, k) * v[i];
          for (std::size_t i = 0; i < n; ++i) v[i] -= proj * basis(i, k);
        }
      }
      const double nv = norm2(v);
      if (nv > best_norm + 1e-12) {
        best_norm = nv;
        best = std::move(v);
      }
      if (best_norm > 0.7) break;
    }
    for (double& x : best) x /= best_norm;
    basis.set_col(j, best);
    have[j] = true;
  }
}

/// One-sided Jacobi for a tall (rows >= cols) matrix.
inline SvdFactorization svd_tall(const Matrix& m) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  // Column-major working copy so column rotations touch contiguous memory.
  std::vector<std::vector<double>> w(cols, std::vector<double>(rows));
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) w[j][i] = m(i, j);
  Matrix v = Matrix::identity(cols);

  for (int sweep = 0; sweep < linalg_config::max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        const double alpha = dot(w[p], w[p]);
        const double beta = dot(w[q], w[q]);
        const double gamma = dot(w[p], w[q]);
        if (gamma == 0.0 || std::abs(gamma) <= linalg_config::pair_tol * std::sqrt(alpha) * std::sqrt(beta))
          continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double wp = w[p][i];
          const double wq = w[q][i];
          w[p][i] = c * wp - s * wq;
          w[q][i] = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < cols; ++i) {
          const double vp = v(i, p);
          const double vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> norms(cols);
  for (std::size_t j = 0; j < cols; ++j) norms[j] = norm2(w[j]);
  const auto order = descending_order(norms);
  const double top = cols ? norms[order[0]] : 0.0;
  // Columns this small carry only rounding noise; their left vectors come from
  // basis completion instead of normalization.
  const double null_cut = static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * top;

  SvdFactorization out{Matrix(rows, rows), std::vector<double>(cols), Matrix(cols, cols)};
  std::vector<bool> have(rows, false);
  for (std::size_t k = 0; k < cols; ++k) {
    const std::size_t j = order[k];
    out.sigma[k] = norms[j];
    for (std::size_t i = 0; i < cols; ++i) out.V(i, k) = v(i, j);
    if (norms[j] > null_cut && norms[j] > 0.0) {
      for (std::size_t i = 0; i < rows; ++i) out.U(i, k) = w[j][i] / norms[j];
      have[k] = true;
    }
  }
  complete_orthonormal(out.U, have);
  return out;
}

}  // namespace detail

/// Full SVD M = U·[Σ 0]·Vᵀ by one-sided Jacobi with cyclic sweeps.
///
/// A pair of columns is rotated while its normalized inner product exceeds
/// linalg_config::pair_tol; iteration ends after a sweep without rotations or
/// after linalg_config::max_sweeps sweeps. Singular values come out descending;
/// ties keep the order the sweeps left them in. The zero matrix yields zero
/// singular values with identity factors.
inline SvdFactorization svd(const Matrix& m) {
  detail::require_finite(m, "svd");
  detail::require(m.rows() > 0 && m.cols() > 0, "svd: empty matrix");
  if (m.rows() >= m.cols()) return detail::svd_tall(m);
  auto t = detail::svd_tall(m.transpose());
  return SvdFactorization{std::move(t.V), std::move(t.sigma), std::move(t.U)};
}

inline std::vector<double> singular_values(const Matrix& m) { return svd(m).sigma; }

/// Symmetric eigendecomposition by cyclic two-sided Jacobi on (M + Mᵀ)/2.
///
/// Stops once the off-diagonal Frobenius mass is at most
/// linalg_config::off_tol·|M|_F or after linalg_config::max_sweeps sweeps.
inline SymEigFactorization sym_eig(const Matrix& m) {
  detail::require(m.is_square(), "sym_eig: matrix must be square");
  detail::require_finite(m, "sym_eig");
  const std::size_t n = m.rows();
  Matrix a = symmetrize(m);
  Matrix v = Matrix::identity(n);
  const double threshold = linalg_config::off_tol * a.frobenius_norm();

  for (int sweep = 0; sweep < linalg_config::max_sweeps; ++sweep) {
    if (off_diagonal_norm(a) <= threshold) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(1.0, theta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
  const auto order = detail::descending_order(diag);
  SymEigFactorization out{Matrix(n, n), std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.lambda[k] = diag[order[k]];
    for (std::size_t i = 0; i < n; ++i) out.U(i, k) = v(i, order[k]);
  }
  return out;
}

/// Ξ(Z) = [[0, Z], [Zᵀ, 0]], an (m+n) x (m+n) symmetric matrix.
inline Matrix dilation(const Matrix& z) {
  detail::require_finite(z, "dilation");
  const std::size_t m = z.rows();
  const std::size_t n = z.cols();
  Matrix x(m + n, m + n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      x(i, m + j) = z(i, j);
      x(m + j, i) = z(i, j);
    }
  return x;
}

/// U·Diag(d)·Uᵀ, symmetric by construction.
inline Matrix spectral_reconstruct(const Matrix& u, std::span<const double> d) {
  const std::size_t n = u.rows();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d.size(); ++k) acc += u(i, k) * d[k] * u(j, k);
      out(i, j) = acc;
      out(j, i) = acc;
    }
  return out;
}

/// U·Diag(fn(λ))·Uᵀ for symmetric M.
inline Matrix apply_spectral(const SymEigFactorization& eig, const std::function<double(double)>& fn) {
  std::vector<double> d(eig.lambda.size());
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = fn(eig.lambda[j]);
  return spectral_reconstruct(eig.U, d);
}

struct QrFactorization {
  Matrix Q;  // m x m orthogonal
  Matrix R;  // m x n upper triangular
};

/// Householder QR with the diagonal of R made nonnegative.
inline QrFactorization qr(const Matrix& a) {
  detail::require_finite(a, "qr");
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Matrix r = a;
  Matrix q = Matrix::identity(m);
  const std::size_t steps = m == 0 ? 0 : std::min(m - 1, n);
  for (std::size_t k = 0; k < steps; ++k) {
    std::vector<double> v(m - k);
    for (std::size_t i = k; i < m; ++i) v[i - k] = r(i, k);
    const double alpha = norm2(v);
    if (alpha == 0.0) continue;
    v[0] += std::copysign(alpha, v[0]);
    const double vnorm2 = dot(v, v);
    if (vnorm2 == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += v[i - k] * r(i, j);
      s = 2.0 * s / vnorm2;
      for (std::size_t i = k; i < m; ++i) r(i, j) -= s * v[i - k];
    }
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t l = k; l < m; ++l) s += q(i, l) * v[l - k];
      s = 2.0 * s / vnorm2;
      for (std::size_t l = k; l < m; ++l) q(i, l) -= s * v[l - k];
    }
  }
  for (std::size_t k = 0; k < std::min(m, n); ++k) {
    if (r(k, k) < 0.0) {
      for (std::size_t j = 0; j < n; ++j) r(k, j) = -r(k, j);
      for (std::size_t i = 0; i < m; ++i) q(i, k) = -q(i, k);
    }
    for (std::size_t i = k + 1; i < m; ++i) r(i, k) = 0.0;
  }
  return {std::move(q), std::move(r)};
}

/// Orthogonal factor of the QR decomposition; snaps a nearly orthogonal matrix back onto O(n).
inline Matrix orthonormalize(const Matrix& q) { return qr(q).Q; }

/// Haar-distributed orthogonal matrix from the QR of an n x n Gaussian.
template <class Rng>
Matrix random_orthogonal(std::size_t n, Rng& rng) {
  return qr(rng.gaussian(n, n)).Q;
}

/// Matrix exponential by scaling and squaring of a degree-18 Taylor polynomial.
inline Matrix expm(const Matrix& a) {
  detail::require(a.is_square(), "expm: matrix must be square");
  detail::require_finite(a, "expm");
  const std::size_t n = a.rows();
  double norm1 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(a(i, j));
    norm1 = std::max(norm1, s);
  }
  int squarings = 0;
  if (norm1 > 0.25) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.25)));
  const Matrix x = a * std::ldexp(1.0, -squarings);
  Matrix result = Matrix::identity(n);
  Matrix term = Matrix::identity(n);
  for (int k = 1; k <= 18; ++k) {
    term = term * x;
    term *= 1.0 / k;
    result += term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

/// Count of singular values above max(rows, cols)·eps·σ₁.
inline std::size_t numerical_rank(std::span<const double> sigma, std::size_t rows, std::size_t cols) {
  if (sigma.empty() || sigma[0] == 0.0) return 0;
  const double cut = static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * sigma[0];
  return static_cast<std::size_t>(std::count_if(sigma.begin(), sigma.end(), [&](double s) { return s > cut; }));
}

inline std::size_t rank(const Matrix& m) { return numerical_rank(singular_values(m), m.rows(), m.cols()); }

/// Spectral norm |M| = σ₁(M).
inline double spectral_norm(const Matrix& m) { return singular_values(m).front(); }

/// Minimum-norm solution of B·z = y for B of full row rank (rows <= cols),
/// via Householder QR of Bᵀ.
inline std::vector<double> min_norm_solve(const Matrix& b, std::span<const double> y) {
  const std::size_t l = b.rows();
  const std::size_t n = b.cols();
  detail::require(l <= n, "min_norm_solve: needs rows <= cols");
  detail::require(y.size() == l, "min_norm_solve: right-hand side length mismatch");
  Matrix r = b.transpose();  // n x l
  std::vector<std::vector<double>> reflectors;
  reflectors.reserve(l);
  for (std::size_t k = 0; k < l; ++k) {
    std::vector<double> v(n - k);
    for (std::size_t i = k; i < n; ++i) v[i - k] = r(i, k);
    const double alpha = norm2(v);
    if (alpha != 0.0) {
      v[0] += std::copysign(alpha, v[0]);
      const double vv = dot(v, v);
      for (std::size_t j = k; j < l; ++j) {
        double s = 0.0;
        for (std::size_t i = k; i < n; ++i) s += v[i - k] * r(i, j);
        s = 2.0 * s / vv;
        for (std::size_t i = k; i < n; ++i) r(i, j) -= s * v[i - k];
      }
    }
    reflectors.push_back(std::move(v));
  }
  // Rᵀ w = y by forward substitution.
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < l; ++i) {
    double s = y[i];
    for (std::size_t k = 0; k < i; ++k) s -= r(k, i) * w[k];
    detail::require<InvalidInput>(r(i, i) != 0.0, "min_norm_solve: rank-deficient system");
    w[i] = s / r(i, i);
  }
  // z = H_0 H_1 ... H_{l-1} [w; 0].
  for (std::size_t kk = l; kk-- > 0;) {
    const auto& v = reflectors[kk];
    const double vv = dot(v, v);
    if (vv == 0.0) continue;
    double s = 0.0;
    for (std::size_t i = kk; i < n; ++i) s += v[i - kk] * w[i];
    s = 2.0 * s / vv;
    for (std::size_t i = kk; i < n; ++i) w[i] -= s * v[i - kk];
  }
  return w;
}

}  // namespace schatten
