#pragma once

// Descent over the orthogonal group for Q ↦ Σ f(σᵢ(Σ_A − Q·Σ_B·Qᵀ)), moving
// along the commutator direction D = C_π·B̄ − B̄·C_π with C = Σ_A − B̄.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "schatten_lab/gauge.hpp"
#include "schatten_lab/rng.hpp"
#include "schatten_lab/verifier.hpp"

namespace schatten {

struct AlignmentConfig {
  int max_iters = 5000;
  double step_init = 1.0;
  double step_shrink = 0.5;
  double min_step = 1e-14;
  double tol_commutator = 1e-6;
  int reorthonormalize_every = 10;
  bool record_trace = true;
  /// Starting rotation; identity when absent.
  std::optional<Matrix> initial_q;
};

struct AlignmentTraceEntry {
  int iter = 0;
  double objective = 0.0;
  double commutator_norm = 0.0;
  double step = 0.0;  // step accepted to reach this iterate, 0 for the start
};

struct AlignmentState {
  Matrix q;                // current rotation
  Matrix bbar;             // B̄ = Q·Σ_B·Qᵀ
  double objective = 0.0;  // Σ f(σᵢ(Σ_A − B̄))
  double commutator_norm = 0.0;  // ‖D‖_F at the final iterate
  int iterations = 0;      // accepted steps
  bool converged = false;  // ‖D‖_F ≤ tol_commutator; false means NonConvergence
  std::vector<AlignmentTraceEntry> trace;
};

/// Σ f(σᵢ(Diag(Σ_A) − B̄)).
inline double alignment_objective(std::span<const double> sigma_a, const Matrix& sigma_b_conj,
                                  const ConcaveGauge& f) {
  detail::require(sigma_b_conj.is_square() && sigma_b_conj.rows() == sigma_a.size(),
                  "alignment_objective: dimension mismatch");
  return gauge_sum(Matrix::diag(sigma_a) - sigma_b_conj, f);
}

/// D = C_π·B̄ − B̄·C_π, skew-symmetric.
inline Matrix commutator_direction(const Matrix& bbar, const Matrix& c, const ConcaveGauge& f) {
  detail::require(bbar.is_square() && bbar.same_shape(c), "commutator_direction: dimension mismatch");
  const auto c_pi = signed_derivative_matrix(c, f).matrix;
  return c_pi * bbar - bbar * c_pi;
}

namespace detail {

inline Matrix conjugate(const Matrix& q, const Matrix& d) { return symmetrize(q * d * q.transpose()); }

}  // namespace detail

/// Backtracking descent Q ← exp(t·D)·Q. Each iteration starts at step_init and
/// shrinks by step_shrink until the objective strictly decreases; the run stops
/// when ‖D‖_F ≤ tol_commutator, after max_iters accepted steps, or when no step
/// above min_step decreases the objective.
inline AlignmentState align(std::span<const double> sigma_a, std::span<const double> sigma_b,
                            const ConcaveGauge& f, const AlignmentConfig& config = {}) {
  const std::size_t n = sigma_a.size();
  detail::require(sigma_b.size() == n && n > 0, "align: spectra must have equal nonzero length");
  detail::require(config.max_iters >= 0 && config.step_init > 0.0 && config.step_shrink > 0.0 &&
                      config.step_shrink < 1.0 && config.tol_commutator > 0.0,
                  "align: configuration values must be positive");
  if (!f.well_behaved()) throw NotWellBehaved("align: gauge " + f.spec() + " has infinite slope at 0");

  const Matrix diag_a = Matrix::diag(sigma_a);
  const Matrix diag_b = Matrix::diag(sigma_b);
  AlignmentState state;
  state.q = config.initial_q.value_or(Matrix::identity(n));
  detail::require(state.q.rows() == n && state.q.is_square(), "align: initial rotation has wrong size");
  detail::require(orthogonality_residual(state.q) <= 1e-8 * static_cast<double>(n),
                  "align: initial rotation is not orthogonal");

  state.bbar = detail::conjugate(state.q, diag_b);
  state.objective = gauge_sum(diag_a - state.bbar, f);
  double last_step = 0.0;
  int since_orthonormalize = 0;
  while (true) {
    const Matrix d = commutator_direction(state.bbar, diag_a - state.bbar, f);
    state.commutator_norm = d.frobenius_norm();
    if (config.record_trace)
      state.trace.push_back({state.iterations, state.objective, state.commutator_norm, last_step});
    if (state.commutator_norm <= config.tol_commutator) {
      state.converged = true;
      break;
    }
    if (state.iterations >= config.max_iters) break;

    bool accepted = false;
    for (double t = config.step_init; t >= config.min_step; t *= config.step_shrink) {
      Matrix q_next = expm(d * t) * state.q;
      Matrix b_next = detail::conjugate(q_next, diag_b);
      const double obj_next = gauge_sum(diag_a - b_next, f);
      if (obj_next < state.objective) {
        state.q = std::move(q_next);
        state.bbar = std::move(b_next);
        state.objective = obj_next;
        last_step = t;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    ++state.iterations;
    if (++since_orthonormalize >= config.reorthonormalize_every) {
      since_orthonormalize = 0;
      state.q = orthonormalize(state.q);
      state.bbar = detail::conjugate(state.q, diag_b);
      state.objective = gauge_sum(diag_a - state.bbar, f);
    }
  }
  return state;
}

/// Spectral data of a symmetric pair: A = U_A·Σ_A·U_Aᵀ, B = U_B·Σ_B·U_Bᵀ.
struct SymmetricPairSpectra {
  std::vector<double> sigma_a;
  std::vector<double> sigma_b;
  Matrix v;  // U_Aᵀ·U_B, the rotation at which the objective equals Σ f(σᵢ(A − B))
};

inline SymmetricPairSpectra symmetric_pair_spectra(const Matrix& a, const Matrix& b) {
  detail::require(a.is_square() && a.same_shape(b), "symmetric_pair_spectra: need square matrices of equal size");
  auto ea = sym_eig(a);
  auto eb = sym_eig(b);
  return {std::move(ea.lambda), std::move(eb.lambda), transpose_times(ea.U, eb.U)};
}

/// Best of `starts` runs on a symmetric pair. Start 0 begins at U_Aᵀ·U_B, so its
/// initial objective is Σ f(σᵢ(A − B)); start s > 0 begins at a Haar rotation
/// drawn from Rng(seed + s). Starts run on up to `jobs` threads; the lowest
/// objective wins and ties keep the lower start index, so the result does not
/// depend on the job count.
inline AlignmentState align_pair(const Matrix& a, const Matrix& b, const ConcaveGauge& f,
                                 const AlignmentConfig& config = {}, std::size_t starts = 1, std::uint64_t seed = 0,
                                 unsigned jobs = 1) {
  detail::require(starts >= 1, "align_pair: need at least one start");
  const auto spectra = symmetric_pair_spectra(a, b);
  std::vector<std::optional<AlignmentState>> runs(starts);
  const auto run = [&](std::size_t s) {
    AlignmentConfig local = config;
    if (s == 0) {
      local.initial_q = spectra.v;
    } else {
      Rng rng(seed + s);
      local.initial_q = random_orthogonal(spectra.sigma_a.size(), rng);
    }
    runs[s] = align(spectra.sigma_a, spectra.sigma_b, f, local);
  };
  const unsigned workers_wanted = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(starts)));
  if (workers_wanted == 1) {
    for (std::size_t s = 0; s < starts; ++s) run(s);
  } else {
    std::vector<std::jthread> workers;
    for (unsigned j = 0; j < workers_wanted; ++j)
      workers.emplace_back([&, j] {
        for (std::size_t s = j; s < starts; s += workers_wanted) run(s);
      });
  }
  std::size_t best = 0;
  for (std::size_t s = 1; s < starts; ++s)
    if (runs[s]->objective < runs[best]->objective) best = s;
  return std::move(*runs[best]);
}

/// ‖B̄C − CB̄‖_F ≤ tol·(1 + ‖B̄‖_F·‖C‖_F) with C = Σ_A − B̄.
inline bool verify_commutation(const AlignmentState& state, std::span<const double> sigma_a, double tol) {
  const Matrix c = Matrix::diag(sigma_a) - state.bbar;
  return commutator(state.bbar, c).frobenius_norm() <=
         tol * (1.0 + state.bbar.frobenius_norm() * c.frobenius_norm());
}

/// B̄ is diagonal and its diagonal is a permutation of Σ_B. Needs the entries
/// of Σ_A separated by at least 10·tol.
inline bool verify_diagonal_alignment(const AlignmentState& state, std::span<const double> sigma_a,
                                      std::span<const double> sigma_b, double tol) {
  std::vector<double> sorted_a(sigma_a.begin(), sigma_a.end());
  std::sort(sorted_a.begin(), sorted_a.end());
  for (std::size_t i = 1; i < sorted_a.size(); ++i)
    if (sorted_a[i] - sorted_a[i - 1] < 10.0 * tol)
      throw DistinctnessViolated("verify_diagonal_alignment: entries of Σ_A are not separated by 10·tol");
  detail::require(sigma_b.size() == state.bbar.rows(), "verify_diagonal_alignment: dimension mismatch");

  const double scale = 1.0 + state.bbar.frobenius_norm();
  if (off_diagonal_norm(state.bbar) > tol * scale) return false;
  std::vector<double> diag(state.bbar.rows());
  for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = state.bbar(i, i);
  std::vector<double> target(sigma_b.begin(), sigma_b.end());
  std::sort(diag.begin(), diag.end());
  std::sort(target.begin(), target.end());
  for (std::size_t i = 0; i < diag.size(); ++i)
    if (std::abs(diag[i] - target[i]) > tol * scale) return false;
  return true;
}

/// objective ≥ Σ|f(σᵢ(A)) − f(σᵢ(B))| up to the usual relative tolerance.
inline bool verify_lower_bound(const AlignmentState& state, std::span<const double> a_sv,
                               std::span<const double> b_sv, const ConcaveGauge& f, double tol) {
  return within_tolerance(perturbation_lhs(a_sv, b_sv, f), state.objective, tol);
}

}  // namespace schatten
