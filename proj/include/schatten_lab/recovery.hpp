#pragma once

// Low-rank recovery from linear measurements: measurement operators, an IRLS
// solver for the Schatten-p heuristic, nullspace-condition sampling, failure
// witnesses, Property (E) induced matrices and RIP estimation.
//
// The nullspace condition is only ever sampled. Deciding it exactly is hard in
// general, so a clean sample is evidence, never proof; a witness is proof.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "schatten_lab/errors.hpp"
#include "schatten_lab/gauge.hpp"
#include "schatten_lab/linalg.hpp"
#include "schatten_lab/matrix.hpp"
#include "schatten_lab/rng.hpp"

namespace schatten {

/// 𝒜: ℝ^{m×n} → ℝˡ stored as an l × mn matrix acting on column-major vec(X).
struct MeasurementOperator {
  Matrix matrix;
  std::size_t m = 0;
  std::size_t n = 0;

  MeasurementOperator() = default;
  MeasurementOperator(Matrix a, std::size_t rows, std::size_t cols) : matrix(std::move(a)), m(rows), n(cols) {
    detail::require(m > 0 && n > 0 && matrix.rows() > 0 && matrix.cols() == m * n,
                    "MeasurementOperator: matrix must be l x (m*n) with l >= 1");
  }

  std::size_t l() const noexcept { return matrix.rows(); }

  std::vector<double> apply(const Matrix& x) const {
    detail::require(x.rows() == m && x.cols() == n, "MeasurementOperator::apply: shape mismatch");
    return matrix * std::span<const double>(vec(x));
  }

  /// 𝒜*(y) = unvec(Aᵀ·y).
  Matrix adjoint(std::span<const double> y) const {
    detail::require(y.size() == l(), "MeasurementOperator::adjoint: length mismatch");
    std::vector<double> v(m * n, 0.0);
    for (std::size_t r = 0; r < l(); ++r)
      for (std::size_t c = 0; c < v.size(); ++c) v[c] += matrix(r, c) * y[r];
    return unvec(v, m, n);
  }
};

/// Entries iid N(0, 1/l) drawn from Rng(seed) in row-major order.
inline MeasurementOperator gaussian_operator(std::size_t m, std::size_t n, std::size_t l, std::uint64_t seed) {
  detail::require(l >= 1 && m >= 1 && n >= 1, "gaussian_operator: dimensions must be positive");
  Rng rng(seed);
  return {rng.gaussian(l, m * n, 1.0 / std::sqrt(static_cast<double>(l))), m, n};
}

/// A_{U,V} ∈ ℝ^{l×m} with column j equal to 𝒜(u_j·v_jᵀ), so that
/// A_{U,V}·x = 𝒜(U·[Diag(x) 0]·Vᵀ). Needs m ≤ n.
inline Matrix induced_matrix(const MeasurementOperator& op, const Matrix& u, const Matrix& v) {
  detail::require(op.m <= op.n, "induced_matrix: needs m <= n");
  detail::require(u.is_square() && u.rows() == op.m && v.is_square() && v.rows() == op.n,
                  "induced_matrix: U must be m x m and V n x n");
  detail::require(orthogonality_residual(u) <= 1e-8 * static_cast<double>(op.m) &&
                      orthogonality_residual(v) <= 1e-8 * static_cast<double>(op.n),
                  "induced_matrix: U and V must be orthogonal");
  Matrix out(op.l(), op.m);
  for (std::size_t j = 0; j < op.m; ++j) {
    Matrix rank_one(op.m, op.n);
    for (std::size_t a = 0; a < op.m; ++a)
      for (std::size_t b = 0; b < op.n; ++b) rank_one(a, b) = u(a, j) * v(b, j);
    out.set_col(j, op.apply(rank_one));
  }
  return out;
}

struct RecoveryInstance {
  MeasurementOperator op;
  std::vector<double> y;
  double eta = 0.0;
  double p = 1.0;
  std::optional<Matrix> ground_truth;
};

/// Instance with y = 𝒜(X̄).
inline RecoveryInstance make_instance(MeasurementOperator op, const Matrix& ground_truth, double p, double eta = 0.0) {
  auto y = op.apply(ground_truth);
  return {std::move(op), std::move(y), eta, p, ground_truth};
}

/// Rank-k product of Gaussian factors scaled to unit Frobenius norm.
inline Matrix low_rank_ground_truth(std::size_t m, std::size_t n, std::size_t k, Rng& rng) {
  detail::require(k >= 1 && k <= std::min(m, n), "low_rank_ground_truth: need 1 <= k <= min(m, n)");
  Matrix left = rng.gaussian(m, k);
  Matrix right = rng.gaussian(k, n);
  Matrix x = left * right;
  return x * (1.0 / x.frobenius_norm());
}

struct IrlsConfig {
  int max_iters = 1000;       // total reweighting steps
  int level_iters = 100;      // steps per smoothing level
  double eps_init = 1.0;
  double eps_shrink = 0.1;
  double eps_min = 1e-10;
  double inner_tol = 1e-9;
};

struct IrlsResult {
  Matrix x;
  int iterations = 0;
  double eps = 0.0;          // final smoothing level
  double residual = 0.0;     // ‖𝒜(X) − y‖₂
  std::vector<double> surrogate;  // tr((XXᵀ + εI)^{p/2}) after each step at that step's ε
};

namespace detail {

/// Equivalent full-row-rank system: rows Σ_r·V_rᵀ and right-hand side U_rᵀ·y.
struct ReducedSystem {
  Matrix b;
  std::vector<double> y;
};

inline ReducedSystem reduce_system(const MeasurementOperator& op, std::span<const double> y, double eta) {
  auto f = svd(op.matrix);
  const std::size_t r = numerical_rank(f.sigma, op.matrix.rows(), op.matrix.cols());
  const std::size_t l = op.l();
  std::vector<double> uty(l, 0.0);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t k = 0; k < l; ++k) uty[i] += f.U(k, i) * y[k];
  double outside = 0.0;
  for (std::size_t i = r; i < l; ++i) outside += uty[i] * uty[i];
  outside = std::sqrt(outside);
  if (outside > eta + 1e-10 * (1.0 + norm2(y)))
    throw Infeasible("irls_solve: measurements are inconsistent (residual " + std::to_string(outside) +
                     " outside the range of the operator)");
  ReducedSystem out{Matrix(r, op.matrix.cols()), std::vector<double>(uty.begin(), uty.begin() + r)};
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t c = 0; c < op.matrix.cols(); ++c) out.b(i, c) = f.sigma[i] * f.V(c, i);
  return out;
}

/// (XXᵀ + εI)^{power}.
inline Matrix smoothed_power(const Matrix& x, double eps, double power) {
  auto e = sym_eig(x * x.transpose());
  std::vector<double> d(e.lambda.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::pow(std::max(e.lambda[i], 0.0) + eps, power);
  return spectral_reconstruct(e.U, d);
}

inline double smoothed_objective(const Matrix& x, double eps, double p) {
  auto e = sym_eig(x * x.transpose());
  double s = 0.0;
  for (double lam : e.lambda) s += std::pow(std::max(lam, 0.0) + eps, p / 2.0);
  return s;
}

/// Rows of B·(I ⊗ S): row r becomes vec(S·R_r) where R_r = unvec(row r).
inline Matrix weight_rows(const Matrix& b, const Matrix& s, std::size_t m, std::size_t n) {
  Matrix out(b.rows(), b.cols());
  for (std::size_t r = 0; r < b.rows(); ++r) {
    const Matrix row = unvec(b.row(r), m, n);
    const auto v = vec(s * row);
    for (std::size_t c = 0; c < v.size(); ++c) out(r, c) = v[c];
  }
  return out;
}

/// min ‖z‖ subject to ‖B·z − y‖₂ ≤ eta, by bisection on the ridge parameter
/// in log space; returns the feasible end of the bracket.
inline std::vector<double> ridge_to_ball(const Matrix& b, std::span<const double> y, double eta, double tol) {
  if (norm2(y) <= eta) return std::vector<double>(b.cols(), 0.0);
  auto f = svd(b);
  const std::size_t r = std::min(b.rows(), b.cols());
  std::vector<double> uty(r, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t k = 0; k < b.rows(); ++k) uty[i] += f.U(k, i) * y[k];
  const auto solve = [&](double lambda) {
    std::vector<double> z(b.cols(), 0.0);
    for (std::size_t i = 0; i < r; ++i) {
      if (f.sigma[i] == 0.0) continue;
      const double c = f.sigma[i] / (f.sigma[i] * f.sigma[i] + lambda) * uty[i];
      for (std::size_t k = 0; k < b.cols(); ++k) z[k] += c * f.V(k, i);
    }
    return z;
  };
  const auto residual = [&](const std::vector<double>& z) {
    auto bz = b * std::span<const double>(z);
    for (std::size_t i = 0; i < bz.size(); ++i) bz[i] -= y[i];
    return norm2(bz);
  };
  const double top = f.sigma.empty() ? 1.0 : std::max(f.sigma[0] * f.sigma[0], 1e-300);
  double lo = std::log(top) - 40.0;
  double hi = std::log(top) + 40.0;
  auto best = solve(std::exp(lo));
  if (residual(best) > eta) return best;  // ball unreachable to working precision; closest point
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    auto z = solve(std::exp(mid));
    const double res = residual(z);
    if (res <= eta) {
      lo = mid;
      best = std::move(z);
      if (eta - res <= tol) break;
    } else {
      hi = mid;
    }
  }
  return best;
}

}  // namespace detail

/// Iteratively reweighted least squares on tr((XXᵀ + εI)^{p/2}).
///
/// Each step minimizes tr(Xᵀ·W·X) with W = (XXᵀ + εI)^{p/2−1} over the
/// feasible set; for fixed ε this majorize-minimize step cannot raise the
/// smoothed objective. A smoothing level ends when the relative change of X
/// drops below inner_tol or after level_iters steps, and ε then shrinks by
/// eps_shrink down to eps_min. With eta > 0 the feasible set is the residual
/// ball and the inner problem is a ridge fit bisected onto its boundary.
inline IrlsResult irls_solve(const RecoveryInstance& inst, const IrlsConfig& config = {}) {
  const auto& op = inst.op;
  detail::require(inst.p > 0.0 && inst.p <= 1.0, "irls_solve: p must lie in (0, 1]");
  detail::require(inst.eta >= 0.0 && std::isfinite(inst.eta), "irls_solve: eta must be nonnegative");
  detail::require(inst.y.size() == op.l(), "irls_solve: y has the wrong length");
  detail::require(config.eps_init > 0.0 && config.eps_min > 0.0 && config.eps_shrink > 0.0 &&
                      config.eps_shrink < 1.0 && config.max_iters >= 1 && config.level_iters >= 1,
                  "irls_solve: invalid configuration");

  const auto sys = detail::reduce_system(op, inst.y, inst.eta);
  const std::size_t m = op.m;
  const std::size_t n = op.n;
  const auto solve_weighted = [&](const Matrix& s) {
    const Matrix b = detail::weight_rows(sys.b, s, m, n);
    const auto z = inst.eta > 0.0 ? detail::ridge_to_ball(b, sys.y, inst.eta, config.inner_tol)
                                  : (b.rows() == 0 ? std::vector<double>(m * n, 0.0) : min_norm_solve(b, sys.y));
    return s * unvec(z, m, n);
  };

  IrlsResult out;
  out.eps = config.eps_init;
  out.x = solve_weighted(Matrix::identity(m));
  int level_steps = 0;
  for (int it = 0; it < config.max_iters; ++it) {
    const Matrix s = detail::smoothed_power(out.x, out.eps, (1.0 - inst.p / 2.0) / 2.0);
    Matrix next = solve_weighted(s);
    const double change = (next - out.x).frobenius_norm() / (1.0 + out.x.frobenius_norm());
    out.x = std::move(next);
    out.surrogate.push_back(detail::smoothed_objective(out.x, out.eps, inst.p));
    ++out.iterations;
    ++level_steps;
    if (change <= config.inner_tol || level_steps >= config.level_iters) {
      if (out.eps <= config.eps_min && change <= config.inner_tol) break;
      out.eps = std::max(out.eps * config.eps_shrink, config.eps_min);
      level_steps = 0;
    }
  }
  auto r = op.apply(out.x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= inst.y[i];
  out.residual = norm2(r);
  return out;
}

inline double relative_error(const Matrix& estimate, const Matrix& truth) {
  const double scale = truth.frobenius_norm();
  return (estimate - truth).frobenius_norm() / (scale > 0.0 ? scale : 1.0);
}

/// Orthonormal basis of 𝒩(𝒜) reshaped to m × n matrices.
inline std::vector<Matrix> nullspace_basis(const MeasurementOperator& op) {
  auto f = svd(op.matrix);
  const std::size_t r = numerical_rank(f.sigma, op.matrix.rows(), op.matrix.cols());
  std::vector<Matrix> basis;
  const std::size_t dim = op.m * op.n;
  std::vector<double> v(dim);
  for (std::size_t j = r; j < dim; ++j) {
    for (std::size_t i = 0; i < dim; ++i) v[i] = f.V(i, j);
    basis.push_back(unvec(v, op.m, op.n));
  }
  return basis;
}

/// Σ_{i>k} σᵢᵖ(Z) − Σ_{i≤k} σᵢᵖ(Z); positive on every nonzero Z ∈ 𝒩(𝒜) is the
/// recovery condition for rank-k matrices.
inline double nullspace_margin(const Matrix& z, double p, std::size_t k) {
  const auto sigma = resolved_singular_values(z);
  detail::require(k >= 1 && k < sigma.size(), "nullspace_margin: need 1 <= k < min(m, n)");
  double head = 0.0;
  double tail = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) (i < k ? head : tail) += std::pow(sigma[i], p);
  return tail - head;
}

struct NullspaceSample {
  double min_margin = std::numeric_limits<double>::infinity();
  std::optional<Matrix> witness;  // the sample attaining min_margin, when it is ≤ 0
  std::size_t violations = 0;
  std::size_t samples = 0;
};

/// Samples unit-Frobenius Z = Σ cᵢ·basisᵢ with Gaussian cᵢ from Rng(seed).
inline NullspaceSample nullspace_condition_sample(const MeasurementOperator& op, double p, std::size_t k,
                                                  std::size_t trials, std::uint64_t seed) {
  detail::require(p > 0.0 && p <= 1.0, "nullspace_condition_sample: p must lie in (0, 1]");
  detail::require(k >= 1 && k < std::min(op.m, op.n), "nullspace_condition_sample: need 1 <= k < min(m, n)");
  detail::require(trials >= 1, "nullspace_condition_sample: trials must be positive");
  const auto basis = nullspace_basis(op);
  if (basis.empty()) throw EmptyNullspace("nullspace_condition_sample: operator is injective, condition holds vacuously");
  Rng rng(seed);
  NullspaceSample out;
  for (std::size_t t = 0; t < trials; ++t) {
    Matrix z(op.m, op.n);
    for (const auto& b : basis) z += b * rng.normal();
    const double norm = z.frobenius_norm();
    if (norm == 0.0) continue;
    z *= 1.0 / norm;
    const double margin = nullspace_margin(z, p, k);
    ++out.samples;
    if (margin <= 0.0) ++out.violations;
    if (margin < out.min_margin) {
      out.min_margin = margin;
      if (margin <= 0.0) out.witness = z;
    }
  }
  return out;
}

struct FailureWitness {
  Matrix xbar;        // −U·[Σ₁ᵏ 0]·Vᵀ, rank ≤ k
  Matrix xbar_prime;  // U·[Σ_{k+1}ᵐ 0]·Vᵀ, same measurements as X̄, no larger Schatten-p objective
};

/// Splits Z ∈ 𝒩(𝒜) with nonpositive margin into X̄′ − X̄ = Z. Then 𝒜(X̄′) = 𝒜(X̄)
/// and ‖X̄′‖_p^p ≤ ‖X̄‖_p^p, so X̄ is not the unique minimizer for y = 𝒜(X̄).
inline FailureWitness failure_witness(const Matrix& z, double p, std::size_t k) {
  detail::require(p > 0.0 && p <= 1.0, "failure_witness: p must lie in (0, 1]");
  const std::size_t q = std::min(z.rows(), z.cols());
  detail::require(k >= 1 && k < q, "failure_witness: need 1 <= k < min(m, n)");
  auto f = svd(z);
  double head = 0.0;
  double tail = 0.0;
  for (std::size_t i = 0; i < q; ++i) (i < k ? head : tail) += std::pow(f.sigma[i], p);
  if (tail - head > 1e-12 * (head + tail))
    throw InvalidWitness("failure_witness: Z has positive margin " + std::to_string(tail - head));
  std::vector<double> top(q, 0.0);
  std::vector<double> rest(q, 0.0);
  for (std::size_t i = 0; i < q; ++i) (i < k ? top : rest)[i] = f.sigma[i];
  const Matrix vt = f.V.transpose();
  return {(f.U * Matrix::rect_diag(z.rows(), z.cols(), top) * vt) * -1.0,
          f.U * Matrix::rect_diag(z.rows(), z.cols(), rest) * vt};
}

struct WitnessCheck {
  std::size_t rank_xbar = 0;
  double difference_residual = 0.0;  // ‖X̄′ − X̄ − Z‖_F
  double measurement_gap = 0.0;      // ‖𝒜(X̄′) − 𝒜(X̄)‖₂
  double objective_xbar = 0.0;       // ‖X̄‖_p^p
  double objective_prime = 0.0;      // ‖X̄′‖_p^p
  bool ok = false;
};

/// Checks rank(X̄) ≤ k, X̄′ − X̄ = Z to 1e−9, 𝒜(X̄′) = 𝒜(X̄) to 1e−9 of scale
/// and ‖X̄′‖_p^p ≤ ‖X̄‖_p^p + 1e−12 of scale, all recomputed from scratch.
inline WitnessCheck check_witness(const FailureWitness& w, const Matrix& z, const MeasurementOperator& op, double p,
                                  std::size_t k) {
  WitnessCheck c;
  c.rank_xbar = rank(w.xbar);
  c.difference_residual = (w.xbar_prime - w.xbar - z).frobenius_norm();
  auto a1 = op.apply(w.xbar_prime);
  const auto a0 = op.apply(w.xbar);
  for (std::size_t i = 0; i < a1.size(); ++i) a1[i] -= a0[i];
  c.measurement_gap = norm2(a1);
  c.objective_xbar = schatten_p_power(w.xbar, p);
  c.objective_prime = schatten_p_power(w.xbar_prime, p);
  const double scale = 1.0 + z.frobenius_norm();
  const double op_scale = scale * (1.0 + op.matrix.frobenius_norm());
  c.ok = c.rank_xbar <= k && c.difference_residual <= 1e-9 * scale && c.measurement_gap <= 1e-9 * op_scale &&
         c.objective_prime <= c.objective_xbar + 1e-12 * (1.0 + c.objective_xbar + c.objective_prime);
  return c;
}

namespace detail {

inline Matrix unit_low_rank(std::size_t m, std::size_t n, std::size_t r, Rng& rng) {
  Matrix x = rng.gaussian(m, r) * rng.gaussian(r, n);
  const double norm = x.frobenius_norm();
  return norm > 0.0 ? x * (1.0 / norm) : x;
}

}  // namespace detail

/// max over sampled unit-Frobenius rank-r X of |‖𝒜(X)‖₂² − 1|. Only a lower
/// bound on the true restricted isometry constant α_r.
inline double rip_estimate(const MeasurementOperator& op, std::size_t r, std::size_t trials, std::uint64_t seed) {
  detail::require(r >= 1 && r <= std::min(op.m, op.n), "rip_estimate: need 1 <= r <= min(m, n)");
  detail::require(trials >= 1, "rip_estimate: trials must be positive");
  Rng rng(seed);
  double alpha = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto y = op.apply(detail::unit_low_rank(op.m, op.n, r, rng));
    alpha = std::max(alpha, std::abs(dot(y, y) - 1.0));
  }
  return alpha;
}

/// max over sampled unit-Frobenius rank-r X of |Σ|𝒜(X)ᵢ|ᵖ − 1|; a lower bound
/// on β_{p,r}.
inline double rip_p_estimate(const MeasurementOperator& op, double p, std::size_t r, std::size_t trials,
                             std::uint64_t seed) {
  detail::require(p > 0.0 && p <= 1.0, "rip_p_estimate: p must lie in (0, 1]");
  detail::require(r >= 1 && r <= std::min(op.m, op.n), "rip_p_estimate: need 1 <= r <= min(m, n)");
  detail::require(trials >= 1, "rip_p_estimate: trials must be positive");
  Rng rng(seed);
  double beta = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto y = op.apply(detail::unit_low_rank(op.m, op.n, r, rng));
    double s = 0.0;
    for (double v : y) s += std::pow(std::abs(v), p);
    beta = std::max(beta, std::abs(s - 1.0));
  }
  return beta;
}

/// p < min{1, 1.0873·(1 − α_{2k})}.
inline bool recovery_threshold_check(double alpha_2k, double p) {
  detail::require(alpha_2k > 0.0 && alpha_2k < 1.0, "recovery_threshold_check: alpha_2k must lie in (0, 1)");
  detail::require(p > 0.0 && p <= 1.0, "recovery_threshold_check: p must lie in (0, 1]");
  return p < std::min(1.0, 1.0873 * (1.0 - alpha_2k));
}

/// β_{p,ak} + b·β_{p,(a+1)k} < b − 1.
inline bool csrip_threshold_check(double beta_ak, double beta_a1k, double b) {
  detail::require(b > 1.0, "csrip_threshold_check: b must exceed 1");
  return beta_ak + b * beta_a1k < b - 1.0;
}

/// Σ_{rest}|zⱼ|ᵖ − Σ_{top k}|zⱼ|ᵖ with entries ranked by magnitude.
inline double vector_nullspace_margin(std::span<const double> z, double p, std::size_t k) {
  detail::require(k >= 1 && k < z.size(), "vector_nullspace_margin: need 1 <= k < length");
  std::vector<double> mag(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) mag[i] = std::abs(z[i]);
  std::sort(mag.begin(), mag.end(), std::greater<>());
  double head = 0.0;
  double tail = 0.0;
  for (std::size_t i = 0; i < mag.size(); ++i) (i < k ? head : tail) += std::pow(mag[i], p);
  return tail - head;
}

struct PropertyESample {
  double min_margin = std::numeric_limits<double>::infinity();
  std::size_t pairs = 0;
  std::size_t empty_nullspaces = 0;  // induced matrices that are injective, vacuous pass
};

/// Draws Haar (U, V) pairs, forms A_{U,V} and samples its nullspace through the
/// vector margin. Evidence for Property (E) only; the property quantifies over
/// all orthogonal pairs.
inline PropertyESample property_e_sample(const MeasurementOperator& op, double p, std::size_t k, std::size_t pairs,
                                         std::size_t trials_per_pair, std::uint64_t seed) {
  detail::require(k >= 1 && k < op.m, "property_e_sample: need 1 <= k < m");
  detail::require(pairs >= 1 && trials_per_pair >= 1, "property_e_sample: counts must be positive");
  Rng rng(seed);
  PropertyESample out;
  for (std::size_t s = 0; s < pairs; ++s) {
    const Matrix u = random_orthogonal(op.m, rng);
    const Matrix v = random_orthogonal(op.n, rng);
    const Matrix a = induced_matrix(op, u, v);
    auto f = svd(a);
    const std::size_t r = numerical_rank(f.sigma, a.rows(), a.cols());
    ++out.pairs;
    if (r == op.m) {
      ++out.empty_nullspaces;
      continue;
    }
    std::vector<double> z(op.m);
    for (std::size_t t = 0; t < trials_per_pair; ++t) {
      std::fill(z.begin(), z.end(), 0.0);
      for (std::size_t j = r; j < op.m; ++j) {
        const double c = rng.normal();
        for (std::size_t i = 0; i < op.m; ++i) z[i] += c * f.V(i, j);
      }
      out.min_margin = std::min(out.min_margin, vector_nullspace_margin(z, p, k));
    }
  }
  return out;
}

struct PhaseConfig {
  std::size_t m = 8;
  std::size_t n = 8;
  std::size_t k = 1;
  std::vector<double> p_list{0.5, 1.0};
  std::vector<std::size_t> l_list{16, 24, 32, 40, 48};
  std::size_t trials = 25;
  std::uint64_t seed = 0;
  double success_tol = 1e-3;
  IrlsConfig irls{};
  unsigned jobs = 1;
};

struct PhaseRow {
  double p = 0.0;
  std::size_t l = 0;
  double success_rate = 0.0;
  double mean_err = 0.0;
  std::size_t trials = 0;
};

/// Trial t draws its ground truth from Rng(seed + t), shared by every cell, and
/// its operator from seed + t mixed with l, shared across p. Cells run on up to
/// `jobs` threads and come back in grid order (p outer, l inner).
inline std::vector<PhaseRow> phase_transition(const PhaseConfig& cfg) {
  detail::require(!cfg.p_list.empty() && !cfg.l_list.empty(), "phase_transition: grids must be nonempty");
  detail::require(cfg.trials >= 1, "phase_transition: trials must be positive");
  for (auto l : cfg.l_list) detail::require(l >= 1, "phase_transition: l must be positive");
  for (auto p : cfg.p_list) detail::require(p > 0.0 && p <= 1.0, "phase_transition: p must lie in (0, 1]");
  detail::require(cfg.k >= 1 && cfg.k <= std::min(cfg.m, cfg.n), "phase_transition: need 1 <= k <= min(m, n)");

  std::vector<PhaseRow> rows;
  for (double p : cfg.p_list)
    for (auto l : cfg.l_list) rows.push_back({p, l, 0.0, 0.0, cfg.trials});

  const auto run_cell = [&](PhaseRow& row) {
    std::size_t successes = 0;
    double err_sum = 0.0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      Rng truth_rng(cfg.seed + t);
      const Matrix truth = low_rank_ground_truth(cfg.m, cfg.n, cfg.k, truth_rng);
      const std::uint64_t op_seed = (cfg.seed + t) ^ (static_cast<std::uint64_t>(row.l) * 0x9e3779b97f4a7c15ULL);
      const auto inst = make_instance(gaussian_operator(cfg.m, cfg.n, row.l, op_seed), truth, row.p);
      const double err = relative_error(irls_solve(inst, cfg.irls).x, truth);
      err_sum += err;
      if (err <= cfg.success_tol) ++successes;
    }
    row.success_rate = static_cast<double>(successes) / static_cast<double>(cfg.trials);
    row.mean_err = err_sum / static_cast<double>(cfg.trials);
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(rows.size())));
  if (jobs == 1) {
    for (auto& row : rows) run_cell(row);
  } else {
    std::vector<std::jthread> workers;
    for (unsigned j = 0; j < jobs; ++j)
      workers.emplace_back([&, j] {
        for (std::size_t i = j; i < rows.size(); i += jobs) run_cell(rows[i]);
      });
  }
  return rows;
}

inline void write_phase_csv(std::ostream& out, const std::vector<PhaseRow>& rows) {
  out << "# schatten-lab v1\n"
      << "p,l,success_rate,mean_err,trials\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.4g,%zu,%.4f,%.6e,%zu\n", r.p, r.l, r.success_rate, r.mean_err, r.trials);
    out << buf;
  }
}

}  // namespace schatten
