#pragma once

// Numerical checks of singular-value perturbation inequalities over seeded
// random matrix ensembles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "schatten_lab/gauge.hpp"
#include "schatten_lab/rng.hpp"

namespace schatten {

inline constexpr double default_tolerance = 1e-9;
inline constexpr const char* schema_tag = "# schatten-lab v1";

/// Outcome of one inequality check: holds iff rhs - lhs >= -tolerance·(1 + |lhs| + |rhs|).
struct VerificationReport {
  std::string check_name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool holds = true;
  double tolerance = default_tolerance;
  std::uint64_t input_seed = 0;
  std::size_t m = 0;
  std::size_t n = 0;
  std::string gauge_spec;
};

inline bool within_tolerance(double lhs, double rhs, double tol) {
  return rhs - lhs >= -tol * (1.0 + std::abs(lhs) + std::abs(rhs));
}

inline VerificationReport make_report(std::string name, double lhs, double rhs, double tol, std::size_t m,
                                      std::size_t n, std::string gauge_spec = {}) {
  VerificationReport r;
  r.check_name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.holds = within_tolerance(lhs, rhs, tol);
  r.tolerance = tol;
  r.m = m;
  r.n = n;
  r.gauge_spec = std::move(gauge_spec);
  return r;
}

/// Resolved singular values of A, B and A - B.
struct PairSpectra {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> diff;
};

inline PairSpectra pair_spectra(const Matrix& a, const Matrix& b) {
  detail::require(a.same_shape(b), "pair_spectra: shape mismatch");
  return {resolved_singular_values(a), resolved_singular_values(b), resolved_singular_values(a - b)};
}

namespace detail {

inline void require_indices(std::span<const std::size_t> indices, std::size_t limit) {
  require(!indices.empty(), "index set must be nonempty");
  for (std::size_t j = 0; j < indices.size(); ++j) {
    require(indices[j] < limit, "index out of range");
    require(j == 0 || indices[j] > indices[j - 1], "indices must be strictly increasing");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Main inequality and its specializations.

/// Σ|f(σᵢ(A)) − f(σᵢ(B))| ≤ Σ f(σᵢ(A−B)).
inline VerificationReport check_main_inequality(const PairSpectra& s, const ConcaveGauge& f,
                                                double tol = default_tolerance) {
  return make_report("main", perturbation_lhs(s.a, s.b, f), gauge_sum(s.diff, f), tol, 0, 0, f.spec());
}

inline VerificationReport check_main_inequality(const Matrix& a, const Matrix& b, const ConcaveGauge& f,
                                                double tol = default_tolerance) {
  detail::require(a.same_shape(b), "check_main_inequality: shape mismatch");
  auto r = check_main_inequality(pair_spectra(a, b), f, tol);
  r.m = a.rows();
  r.n = a.cols();
  return r;
}

/// The Schatten-p case f(x) = x^p.
inline VerificationReport check_schatten_p(const Matrix& a, const Matrix& b, double p,
                                           double tol = default_tolerance) {
  auto r = check_main_inequality(a, b, ConcaveGauge::power(p), tol);
  r.check_name = "schatten_p";
  return r;
}

/// Σⱼ |σ_{iⱼ}(A) − σ_{iⱼ}(B)| ≤ Σ_{i<k} σᵢ(A−B), indices 0-based and strictly increasing.
inline VerificationReport check_mirsky(const PairSpectra& s, std::span<const std::size_t> indices,
                                       double tol = default_tolerance) {
  detail::require_indices(indices, s.a.size());
  double lhs = 0.0;
  for (auto i : indices) lhs += std::abs(s.a[i] - s.b[i]);
  double rhs = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i) rhs += s.diff[i];
  return make_report("mirsky", lhs, rhs, tol, 0, 0);
}

inline VerificationReport check_mirsky(const Matrix& a, const Matrix& b, std::span<const std::size_t> indices,
                                       double tol = default_tolerance) {
  auto r = check_mirsky(pair_spectra(a, b), indices, tol);
  r.m = a.rows();
  r.n = a.cols();
  return r;
}

/// Eigenvalues (descending) of symmetric A, B and A − B.
struct PairEigenvalues {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> diff;
};

inline PairEigenvalues pair_eigenvalues(const Matrix& a, const Matrix& b) {
  detail::require(a.is_square() && a.same_shape(b), "pair_eigenvalues: need square matrices of equal size");
  return {sym_eig(a).lambda, sym_eig(b).lambda, sym_eig(a - b).lambda};
}

/// One-sided Σⱼ (λ_{iⱼ}(A) − λ_{iⱼ}(B)) ≤ Σ_{i<k} λᵢ(A−B) for symmetric A, B.
inline VerificationReport check_lidskii_wielandt(const PairEigenvalues& e, std::span<const std::size_t> indices,
                                                 double tol = default_tolerance) {
  detail::require_indices(indices, e.a.size());
  double lhs = 0.0;
  for (auto i : indices) lhs += e.a[i] - e.b[i];
  double rhs = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i) rhs += e.diff[i];
  return make_report("lidskii_wielandt", lhs, rhs, tol, e.a.size(), e.a.size());
}

inline VerificationReport check_lidskii_wielandt(const Matrix& a, const Matrix& b,
                                                 std::span<const std::size_t> indices,
                                                 double tol = default_tolerance) {
  return check_lidskii_wielandt(pair_eigenvalues(a, b), indices, tol);
}

/// One-sided Σⱼ (f(σ_{iⱼ}(A)) − f(σ_{iⱼ}(B))) ≤ Σ_{i<k} f(σᵢ(A−B)).
inline VerificationReport check_f_lw(const PairSpectra& s, const ConcaveGauge& f,
                                     std::span<const std::size_t> indices, double tol = default_tolerance) {
  detail::require_indices(indices, s.a.size());
  double lhs = 0.0;
  for (auto i : indices) lhs += f.eval(s.a[i]) - f.eval(s.b[i]);
  double rhs = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i) rhs += f.eval(s.diff[i]);
  return make_report("f_lw", lhs, rhs, tol, 0, 0, f.spec());
}

inline VerificationReport check_f_lw(const Matrix& a, const Matrix& b, const ConcaveGauge& f,
                                     std::span<const std::size_t> indices, double tol = default_tolerance) {
  auto r = check_f_lw(pair_spectra(a, b), f, indices, tol);
  r.m = a.rows();
  r.n = a.cols();
  return r;
}

/// Partial sums Σ_{i≤k} |f(σᵢ(A)) − f(σᵢ(B))| ≤ Σ_{i≤k} f(σᵢ(A−B)), k in [1, min(m, n)].
/// The general statement is an open conjecture; violations are findings.
inline VerificationReport check_conjecture_partial(const PairSpectra& s, const ConcaveGauge& f, std::size_t k,
                                                   double tol = default_tolerance) {
  detail::require(k >= 1 && k <= s.a.size(), "check_conjecture_partial: k must lie in [1, min(m, n)]");
  const std::span<const double> a(s.a.data(), k), b(s.b.data(), k), d(s.diff.data(), k);
  return make_report("conjecture_k" + std::to_string(k), perturbation_lhs(a, b, f), gauge_sum(d, f), tol, 0, 0,
                     f.spec());
}

inline VerificationReport check_conjecture_partial(const Matrix& a, const Matrix& b, const ConcaveGauge& f,
                                                   std::size_t k, double tol = default_tolerance) {
  detail::require(a.same_shape(b), "check_conjecture_partial: shape mismatch");
  detail::require(k >= 1 && k <= std::min(a.rows(), a.cols()),
                  "check_conjecture_partial: k must lie in [1, min(m, n)]");
  auto r = check_conjecture_partial(pair_spectra(a, b), f, k, tol);
  r.m = a.rows();
  r.n = a.cols();
  return r;
}

// ---------------------------------------------------------------------------
// Reduction to the symmetric case.

struct ReductionIdentities {
  double lhs = 0.0;          // perturbation_lhs(A, B, f)
  double lhs_dilated = 0.0;  // perturbation_lhs(Ξ(A), Ξ(B), f)
  double rhs = 0.0;          // gauge_sum(A − B, f)
  double rhs_dilated = 0.0;  // gauge_sum(Ξ(A − B), f)
};

inline ReductionIdentities reduction_identities(const Matrix& a, const Matrix& b, const ConcaveGauge& f) {
  detail::require(a.same_shape(b), "reduction_identities: shape mismatch");
  const bool wide = a.rows() <= a.cols();
  const Matrix at = wide ? a : a.transpose();
  const Matrix bt = wide ? b : b.transpose();
  ReductionIdentities out;
  out.lhs = perturbation_lhs(at, bt, f);
  out.rhs = gauge_sum(at - bt, f);
  out.lhs_dilated = perturbation_lhs(dilation(at), dilation(bt), f);
  out.rhs_dilated = gauge_sum(dilation(at - bt), f);
  return out;
}

/// Checks lhs(Ξ(A), Ξ(B)) = 2·lhs(A, B) and rhs(Ξ(A − B)) = 2·rhs(A − B).
/// The report's lhs is the larger relative deviation and its rhs is 0.
inline VerificationReport check_symmetric_reduction(const Matrix& a, const Matrix& b, const ConcaveGauge& f,
                                                    double tol = default_tolerance) {
  const auto id = reduction_identities(a, b, f);
  const double dev_lhs = std::abs(id.lhs_dilated - 2.0 * id.lhs) / (1.0 + std::abs(id.lhs_dilated));
  const double dev_rhs = std::abs(id.rhs_dilated - 2.0 * id.rhs) / (1.0 + std::abs(id.rhs_dilated));
  return make_report("symmetric_reduction", std::max(dev_lhs, dev_rhs), 0.0, tol, a.rows(), a.cols(), f.spec());
}

// ---------------------------------------------------------------------------
// First-order upper expansion Σf(σ(M + tN)) ≤ Σf(σ(M)) + t·tr(N·M_π) + O(t²).

struct LocalExpansion {
  std::vector<double> t_grid;
  std::vector<double> residuals;  // r(t) = Σf(σ(M+tN)) − Σf(σ(M)) − t·tr(N·M_π)
  double first_order = 0.0;       // tr(N·M_π)
  double fitted_c = 0.0;          // max(0, r(t)/t²) over all but the smallest t
  double base = 0.0;              // Σf(σ(M))
};

inline LocalExpansion local_expansion(const Matrix& m, const Matrix& n, const ConcaveGauge& f,
                                      std::span<const double> t_grid) {
  detail::require(m.is_square() && m.same_shape(n), "local_expansion: need square matrices of equal size");
  detail::require(t_grid.size() >= 2, "local_expansion: t grid needs at least two values");
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    detail::require(t_grid[i] > 0.0 && (i == 0 || t_grid[i] < t_grid[i - 1]),
                    "local_expansion: t grid must be positive and decreasing");
  const Matrix ms = symmetrize(m);
  const Matrix ns = symmetrize(n);
  const auto m_pi = signed_derivative_matrix(ms, f);

  LocalExpansion out;
  out.t_grid.assign(t_grid.begin(), t_grid.end());
  out.base = gauge_sum(ms, f);
  out.first_order = frobenius_dot(ns, m_pi.matrix);
  for (double t : t_grid) out.residuals.push_back(gauge_sum(ms + t * ns, f) - out.base - t * out.first_order);
  for (std::size_t i = 0; i + 1 < t_grid.size(); ++i)
    out.fitted_c = std::max(out.fitted_c, out.residuals[i] / (t_grid[i] * t_grid[i]));
  return out;
}

/// Fits C on all but the smallest t and checks r(t_min) ≤ C·t_min².
inline VerificationReport check_local_expansion(const Matrix& m, const Matrix& n, const ConcaveGauge& f,
                                                std::span<const double> t_grid, double tol = default_tolerance) {
  const auto le = local_expansion(m, n, f, t_grid);
  const double t = t_grid.back();
  return make_report("local_expansion", le.residuals.back(), le.fitted_c * t * t, tol, m.rows(), m.cols(),
                     f.spec());
}

inline const std::vector<double>& default_t_grid() {
  static const std::vector<double> grid{1e-2, 1e-3, 1e-4};
  return grid;
}

// ---------------------------------------------------------------------------
// Ensembles.

enum class EnsembleKind { GaussianIID, LowRank, PsdPair, SymmetricPair, RepeatedSpectrum };

inline std::string to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::GaussianIID: return "gaussian";
    case EnsembleKind::LowRank: return "lowrank";
    case EnsembleKind::PsdPair: return "psd";
    case EnsembleKind::SymmetricPair: return "symmetric";
    case EnsembleKind::RepeatedSpectrum: return "repeated";
  }
  return "unknown";
}

inline EnsembleKind parse_ensemble_kind(std::string_view name) {
  for (auto k : {EnsembleKind::GaussianIID, EnsembleKind::LowRank, EnsembleKind::PsdPair,
                 EnsembleKind::SymmetricPair, EnsembleKind::RepeatedSpectrum})
    if (name == to_string(k)) return k;
  throw InvalidInput("unknown ensemble '" + std::string(name) + "'");
}

inline bool is_square_kind(EnsembleKind k) {
  return k == EnsembleKind::PsdPair || k == EnsembleKind::SymmetricPair || k == EnsembleKind::RepeatedSpectrum;
}

/// Seeded generator of matrix pairs. Square kinds produce n x n matrices.
/// With vary_dims set, each trial draws its dimensions uniformly from
/// [1, m] x [1, n] before drawing entries.
struct Ensemble {
  EnsembleKind kind = EnsembleKind::GaussianIID;
  std::size_t m = 4;
  std::size_t n = 4;
  std::uint64_t seed = 0;
  std::size_t rank = 2;  // LowRank only
  bool vary_dims = false;
};

struct MatrixPair {
  Matrix a;
  Matrix b;
};

namespace detail {

inline Matrix repeated_spectrum_matrix(std::size_t n, Rng& rng) {
  const std::size_t pool_size = std::max<std::size_t>(1, (n + 1) / 2);
  const auto pool = rng.gaussian_vector(pool_size);
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = pool[i % pool_size];
    // Sign flips force ties in |λ| between eigenvalues of opposite sign.
    if (i >= pool_size && rng.uniform() < 0.5) values[i] = -values[i];
  }
  const Matrix u = random_orthogonal(n, rng);
  return symmetrize(u * Matrix::diag(values) * u.transpose());
}

inline Matrix draw_one(EnsembleKind kind, std::size_t m, std::size_t n, std::size_t rank, Rng& rng) {
  switch (kind) {
    case EnsembleKind::GaussianIID: return rng.gaussian(m, n);
    case EnsembleKind::LowRank: {
      const std::size_t r = std::max<std::size_t>(1, std::min({rank, m, n}));
      return rng.gaussian(m, r) * rng.gaussian(r, n);
    }
    case EnsembleKind::PsdPair: {
      const Matrix g = rng.gaussian(m, n);
      return symmetrize(transpose_times(g, g));
    }
    case EnsembleKind::SymmetricPair: {
      const Matrix g = rng.gaussian(n, n);
      return (g + g.transpose()) * (1.0 / std::sqrt(2.0));
    }
    case EnsembleKind::RepeatedSpectrum: return repeated_spectrum_matrix(n, rng);
  }
  throw InvalidInput("unknown ensemble kind");
}

}  // namespace detail

/// The pair for one trial, drawn from Rng(seed + trial).
inline MatrixPair draw_pair(const Ensemble& e, std::uint64_t trial) {
  Rng rng(e.seed + trial);
  std::size_t m = e.m;
  std::size_t n = e.n;
  if (e.vary_dims) {
    m = rng.between(1, e.m);
    n = rng.between(1, e.n);
  }
  detail::require(m >= 1 && n >= 1, "ensemble dimensions must be positive");
  Matrix a = detail::draw_one(e.kind, m, n, e.rank, rng);
  Matrix b = detail::draw_one(e.kind, m, n, e.rank, rng);
  return {std::move(a), std::move(b)};
}

/// Random capped or piecewise-linear gauge for fuzzing.
inline ConcaveGauge sample_gauge(Rng& rng) {
  if (rng.uniform() < 0.5) {
    const double p = rng.uniform(0.05, 1.0);
    const double delta = std::pow(10.0, rng.uniform(-3.0, 0.5));
    return ConcaveGauge::capped(ConcaveGauge::power(p), delta);
  }
  const std::size_t pieces = rng.between(1, 4);
  std::vector<double> breakpoints;
  std::vector<double> slopes;
  double at = 0.0;
  double slope = rng.uniform(0.5, 3.0);
  for (std::size_t i = 0; i < pieces; ++i) {
    at += rng.uniform(0.05, 2.0);
    breakpoints.push_back(at);
    slopes.push_back(slope);
    slope *= rng.uniform(0.1, 1.0);
  }
  slopes.push_back(rng.uniform() < 0.5 ? 0.0 : slope);
  return ConcaveGauge::piecewise_linear(std::move(breakpoints), std::move(slopes));
}

// ---------------------------------------------------------------------------
// Campaigns.

enum class CheckKind { Main, Conjecture, FLw, Mirsky, LidskiiWielandt, SymmetricReduction, LocalExpansion };

inline std::string to_string(CheckKind c) {
  switch (c) {
    case CheckKind::Main: return "main";
    case CheckKind::Conjecture: return "conjecture";
    case CheckKind::FLw: return "f_lw";
    case CheckKind::Mirsky: return "mirsky";
    case CheckKind::LidskiiWielandt: return "lidskii_wielandt";
    case CheckKind::SymmetricReduction: return "symmetric_reduction";
    case CheckKind::LocalExpansion: return "local_expansion";
  }
  return "unknown";
}

inline CheckKind parse_check_kind(std::string_view name) {
  for (auto c : {CheckKind::Main, CheckKind::Conjecture, CheckKind::FLw, CheckKind::Mirsky,
                 CheckKind::LidskiiWielandt, CheckKind::SymmetricReduction, CheckKind::LocalExpansion})
    if (name == to_string(c)) return c;
  throw InvalidInput("unknown check '" + std::string(name) + "'");
}

struct CampaignConfig {
  std::vector<CheckKind> checks{CheckKind::Main};
  double tolerance = default_tolerance;
  unsigned jobs = 1;
  /// When set, every violation writes a reproduction file here.
  std::optional<std::filesystem::path> repro_dir;
  /// Drop passing reports from the result (the summary still counts them).
  bool keep_passing = true;
};

struct CheckSummary {
  std::size_t passes = 0;
  std::size_t failures = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  /// Slack over the tolerance scale, the quantity the pass rule thresholds.
  double min_relative_slack = std::numeric_limits<double>::infinity();
};

struct CampaignResult {
  std::vector<VerificationReport> reports;
  std::map<std::string, CheckSummary> summary;  // keyed by check family
  std::vector<std::filesystem::path> repro_files;
  std::size_t trials = 0;

  std::size_t failures() const {
    std::size_t total = 0;
    for (const auto& [name, s] : summary) total += s.failures;
    return total;
  }
};

// Reproduction files: a comment header with check, gauge, seed and tolerance,
// followed by A and B in the matrix text format.

struct ReproCase {
  std::string check;
  std::string gauge_spec;
  std::uint64_t seed = 0;
  double tolerance = default_tolerance;
  std::size_t k = 0;  // conjecture order, 0 when unused
  std::vector<std::size_t> indices;  // 0-based index set, empty when unused
  Matrix a;
  Matrix b;
};

inline void write_repro(std::ostream& out, const ReproCase& c) {
  out << schema_tag << " repro\n";
  out << "# check=" << c.check << "\n";
  out << "# gauge=" << c.gauge_spec << "\n";
  out << "# seed=" << c.seed << "\n";
  std::ostringstream tol;
  tol.precision(17);
  tol << c.tolerance;
  out << "# tol=" << tol.str() << "\n";
  out << "# k=" << c.k << "\n";
  out << "# indices=";
  for (std::size_t i = 0; i < c.indices.size(); ++i) out << (i ? "," : "") << c.indices[i];
  out << "\n";
  write_matrix(out, c.a);
  write_matrix(out, c.b);
}

inline ReproCase read_repro(std::istream& in) {
  ReproCase c;
  std::string line;
  while (in.peek() == '#' && std::getline(in, line)) {
    auto value = [&](std::string_view key) -> std::optional<std::string> {
      const std::string prefix = "# " + std::string(key) + "=";
      if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
      return std::nullopt;
    };
    if (auto v = value("check")) c.check = *v;
    if (auto v = value("gauge")) c.gauge_spec = *v;
    if (auto v = value("seed")) c.seed = std::stoull(*v);
    if (auto v = value("tol")) c.tolerance = std::stod(*v);
    if (auto v = value("k")) c.k = std::stoull(*v);
    if (auto v = value("indices")) {
      std::istringstream items(*v);
      std::string item;
      while (std::getline(items, item, ','))
        if (!item.empty()) c.indices.push_back(std::stoull(item));
    }
  }
  detail::require(!c.check.empty(), "repro file: missing '# check=' header");
  c.a = read_matrix(in);
  c.b = read_matrix(in);
  return c;
}

/// Re-runs the check recorded in a reproduction file.
inline VerificationReport replay_repro(const ReproCase& c) {
  const auto kind = parse_check_kind(c.check);
  const auto f = c.gauge_spec.empty() ? ConcaveGauge::power(1.0) : ConcaveGauge::parse(c.gauge_spec);
  VerificationReport r;
  switch (kind) {
    case CheckKind::Main: r = check_main_inequality(c.a, c.b, f, c.tolerance); break;
    case CheckKind::Conjecture: r = check_conjecture_partial(c.a, c.b, f, c.k, c.tolerance); break;
    case CheckKind::SymmetricReduction: r = check_symmetric_reduction(c.a, c.b, f, c.tolerance); break;
    case CheckKind::LocalExpansion: r = check_local_expansion(c.a, c.b, f, default_t_grid(), c.tolerance); break;
    default: {
      std::vector<std::size_t> idx = c.indices;
      if (idx.empty()) {
        idx.resize(std::min(c.a.rows(), c.a.cols()));
        std::iota(idx.begin(), idx.end(), std::size_t{0});
      }
      if (kind == CheckKind::FLw) r = check_f_lw(c.a, c.b, f, idx, c.tolerance);
      else if (kind == CheckKind::Mirsky) r = check_mirsky(c.a, c.b, idx, c.tolerance);
      else r = check_lidskii_wielandt(c.a, c.b, idx, c.tolerance);
    }
  }
  r.input_seed = c.seed;
  return r;
}

namespace detail {

/// Uniform random strictly increasing subset of [0, limit) with 1..max_size elements.
inline std::vector<std::size_t> random_index_subset(std::size_t limit, std::size_t max_size, Rng& rng) {
  const std::size_t size = rng.between(1, std::min(limit, max_size));
  std::vector<std::size_t> all(limit);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t i = 0; i < size; ++i) std::swap(all[i], all[i + rng.below(limit - i)]);
  all.resize(size);
  std::sort(all.begin(), all.end());
  return all;
}

struct TrialOutput {
  std::vector<VerificationReport> reports;
  std::vector<ReproCase> repros;
};

inline std::string check_family(const std::string& name) {
  return name.rfind("conjecture", 0) == 0 ? std::string("conjecture") : name;
}

inline void tally(std::map<std::string, CheckSummary>& summary, const VerificationReport& r) {
  auto& s = summary[check_family(r.check_name)];
  (r.holds ? s.passes : s.failures) += 1;
  s.min_slack = std::min(s.min_slack, r.slack);
  s.min_relative_slack = std::min(s.min_relative_slack, r.slack / (1.0 + std::abs(r.lhs) + std::abs(r.rhs)));
}

inline TrialOutput run_trial(const Ensemble& ensemble, const std::vector<ConcaveGauge>& gauges,
                             const CampaignConfig& config, std::uint64_t trial) {
  TrialOutput out;
  const auto pair = draw_pair(ensemble, trial);
  const std::uint64_t seed = ensemble.seed + trial;
  const std::size_t m = pair.a.rows();
  const std::size_t n = pair.a.cols();
  // Independent stream for per-trial choices (k, index sets) so the pair
  // itself does not depend on which checks run.
  Rng choices(seed ^ 0x5bd1e995a5a5a5a5ULL);

  std::optional<PairSpectra> spectra;
  auto get_spectra = [&]() -> const PairSpectra& {
    if (!spectra) spectra = pair_spectra(pair.a, pair.b);
    return *spectra;
  };
  // Symmetric operands for eigenvalue-based checks: the pair itself when
  // symmetric, otherwise the dilations.
  const bool symmetric = is_square_kind(ensemble.kind);
  auto sym_a = [&] { return symmetric ? pair.a : dilation(pair.a); };
  auto sym_b = [&] { return symmetric ? pair.b : dilation(pair.b); };

  // Failing checks record the operands they actually saw, so replay needs no
  // knowledge of the ensemble.
  auto record = [&](VerificationReport r, CheckKind kind, const ConcaveGauge* f, std::size_t k = 0,
                    std::vector<std::size_t> indices = {}, const Matrix* a = nullptr, const Matrix* b = nullptr) {
    r.input_seed = seed;
    r.m = m;
    r.n = n;
    if (!r.holds)
      out.repros.push_back(ReproCase{to_string(kind), f ? f->spec() : std::string{}, seed, config.tolerance, k,
                                     std::move(indices), a ? *a : pair.a, b ? *b : pair.b});
    out.reports.push_back(std::move(r));
  };

  for (const auto kind : config.checks) {
    switch (kind) {
      case CheckKind::Main:
        for (const auto& f : gauges) record(check_main_inequality(get_spectra(), f, config.tolerance), kind, &f);
        break;
      case CheckKind::Conjecture:
        for (const auto& f : gauges) {
          const std::size_t k = choices.between(1, std::min(m, n));
          record(check_conjecture_partial(get_spectra(), f, k, config.tolerance), kind, &f, k);
        }
        break;
      case CheckKind::FLw:
        for (const auto& f : gauges) {
          const auto idx = random_index_subset(std::min(m, n), std::min(m, n), choices);
          record(check_f_lw(get_spectra(), f, idx, config.tolerance), kind, &f, 0, idx);
        }
        break;
      case CheckKind::Mirsky: {
        const auto idx = random_index_subset(std::min(m, n), std::min(m, n), choices);
        record(check_mirsky(get_spectra(), idx, config.tolerance), kind, nullptr, 0, idx);
        break;
      }
      case CheckKind::LidskiiWielandt: {
        const Matrix sa = sym_a();
        const Matrix sb = sym_b();
        const auto eig = pair_eigenvalues(sa, sb);
        const auto idx = random_index_subset(eig.a.size(), eig.a.size(), choices);
        record(check_lidskii_wielandt(eig, idx, config.tolerance), kind, nullptr, 0, idx, &sa, &sb);
        break;
      }
      case CheckKind::SymmetricReduction:
        for (const auto& f : gauges) record(check_symmetric_reduction(pair.a, pair.b, f, config.tolerance), kind, &f);
        break;
      case CheckKind::LocalExpansion:
        for (const auto& f : gauges) {
          if (!f.well_behaved()) continue;
          const Matrix sa = sym_a();
          const Matrix sb = sym_b();
          record(check_local_expansion(sa, sb, f, default_t_grid(), config.tolerance), kind, &f, 0, {}, &sa, &sb);
        }
        break;
    }
  }
  return out;
}

}  // namespace detail

/// Runs every configured check on `trials` pairs drawn from the ensemble
/// (trial t uses seed + t). Output is identical for any job count.
inline CampaignResult fuzz_campaign(const Ensemble& ensemble, const std::vector<ConcaveGauge>& gauges,
                                    std::size_t trials, const CampaignConfig& config = {}) {
  detail::require(trials >= 1, "fuzz_campaign: trials must be at least 1");
  detail::require(!gauges.empty(), "fuzz_campaign: need at least one gauge");
  const unsigned jobs = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(trials)));

  std::vector<detail::TrialOutput> outputs(trials);
  std::vector<std::map<std::string, CheckSummary>> partial(jobs);
  auto work = [&](unsigned job, std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      outputs[t] = detail::run_trial(ensemble, gauges, config, t);
      for (const auto& r : outputs[t].reports) detail::tally(partial[job], r);
      if (!config.keep_passing)
        std::erase_if(outputs[t].reports, [](const VerificationReport& r) { return r.holds; });
    }
  };
  const std::size_t chunk = (trials + jobs - 1) / jobs;
  if (jobs == 1) {
    work(0, 0, trials);
  } else {
    std::vector<std::jthread> workers;
    for (unsigned j = 0; j < jobs; ++j) {
      const std::size_t begin = j * chunk;
      const std::size_t end = std::min(trials, begin + chunk);
      if (begin < end) workers.emplace_back(work, j, begin, end);
    }
  }

  CampaignResult result;
  result.trials = trials;
  for (const auto& part : partial)
    for (const auto& [name, s] : part) {
      auto& total = result.summary[name];
      total.passes += s.passes;
      total.failures += s.failures;
      total.min_slack = std::min(total.min_slack, s.min_slack);
      total.min_relative_slack = std::min(total.min_relative_slack, s.min_relative_slack);
    }
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& r : outputs[t].reports) result.reports.push_back(std::move(r));
    if (config.repro_dir && !outputs[t].repros.empty()) {
      std::filesystem::create_directories(*config.repro_dir);
      for (std::size_t i = 0; i < outputs[t].repros.size(); ++i) {
        const auto& c = outputs[t].repros[i];
        const auto path = *config.repro_dir / ("repro_" + c.check + "_seed" + std::to_string(c.seed) + "_" +
                                               std::to_string(i) + ".txt");
        std::ofstream file(path);
        write_repro(file, c);
        result.repro_files.push_back(path);
      }
    }
  }
  return result;
}

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// CSV with columns check_name,seed,m,n,gauge,lhs,rhs,slack,holds.
inline void write_reports_csv(std::ostream& out, std::span<const VerificationReport> reports) {
  out << schema_tag << "\n";
  out << "check_name,seed,m,n,gauge,lhs,rhs,slack,holds\n";
  const auto old = out.precision(17);
  for (const auto& r : reports) {
    out << csv_escape(r.check_name) << ',' << r.input_seed << ',' << r.m << ',' << r.n << ','
        << csv_escape(r.gauge_spec) << ',' << r.lhs << ',' << r.rhs << ',' << r.slack << ','
        << (r.holds ? "true" : "false") << '\n';
  }
  out.precision(old);
}

}  // namespace schatten
