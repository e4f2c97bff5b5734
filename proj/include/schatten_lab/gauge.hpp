#pragma once

#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "schatten_lab/linalg.hpp"

namespace schatten {

class ConcaveGauge;

/// f(x) = x^p, p in (0, 1].
struct PowerGauge {
  double p;
};

/// f_δ(x) = min{(f(δ)/δ)·x, f(x)}: linear on [0, δ], the base gauge beyond.
struct CappedGauge {
  std::shared_ptr<const ConcaveGauge> base;
  double delta;
  double slope;  // f(δ)/δ
};

/// Continuous piecewise-linear gauge through the origin. slopes[i] applies on
/// [breakpoints[i-1], breakpoints[i]) with breakpoints[-1] = 0; tail_slope
/// applies past the last breakpoint.
struct PiecewiseLinearGauge {
  std::vector<double> breakpoints;
  std::vector<double> slopes;
  double tail_slope;
};

/// Concave nondecreasing f: R+ -> R+ with f(0) = 0, plus its extended right
/// derivative. Immutable value type.
class ConcaveGauge {
 public:
  using Kind = std::variant<PowerGauge, CappedGauge, PiecewiseLinearGauge>;

  static ConcaveGauge power(double p) {
    detail::require(std::isfinite(p) && p > 0.0 && p <= 1.0, "power gauge: exponent must lie in (0, 1]");
    return ConcaveGauge(PowerGauge{p});
  }

  static ConcaveGauge capped(const ConcaveGauge& base, double delta) {
    detail::require(std::isfinite(delta) && delta > 0.0, "capped gauge: delta must be positive");
    const double at_delta = base.eval(delta);
    detail::require(at_delta > 0.0, "capped gauge: base must be positive at delta");
    return ConcaveGauge(CappedGauge{std::make_shared<const ConcaveGauge>(base), delta, at_delta / delta});
  }

  /// `slopes` has either one entry per breakpoint (flat tail) or one extra
  /// trailing entry giving the tail slope.
  static ConcaveGauge piecewise_linear(std::vector<double> breakpoints, std::vector<double> slopes) {
    detail::require(!breakpoints.empty(), "pwl gauge: needs at least one breakpoint");
    detail::require(slopes.size() == breakpoints.size() || slopes.size() == breakpoints.size() + 1,
                    "pwl gauge: slope count must equal breakpoint count (or one more for the tail)");
    double prev = 0.0;
    for (double b : breakpoints) {
      detail::require(std::isfinite(b) && b > prev, "pwl gauge: breakpoints must be positive and increasing");
      prev = b;
    }
    double tail = 0.0;
    if (slopes.size() > breakpoints.size()) {
      tail = slopes.back();
      slopes.pop_back();
      detail::require(std::isfinite(tail) && tail >= 0.0 && tail <= slopes.back(),
                      "pwl gauge: tail slope must lie in [0, last slope]");
    }
    double prev_slope = std::numeric_limits<double>::infinity();
    for (double s : slopes) {
      detail::require(std::isfinite(s) && s > 0.0 && s <= prev_slope,
                      "pwl gauge: slopes must be positive and nonincreasing");
      prev_slope = s;
    }
    return ConcaveGauge(PiecewiseLinearGauge{std::move(breakpoints), std::move(slopes), tail});
  }

  /// Parses "power:P", "capped:<base>:delta=D" and "pwl:b1,b2,...:s1,s2,...".
  static ConcaveGauge parse(std::string_view spec);

  const Kind& kind() const noexcept { return kind_; }

  double eval(double x) const {
    detail::require(x >= 0.0, "gauge: argument must be nonnegative");
    return std::visit([x](const auto& g) { return eval_kind(g, x); }, kind_);
  }

  double operator()(double x) const { return eval(x); }

  /// d̄_f(x): the right derivative for x > 0 and its limit as x -> 0+ at zero
  /// (the limit exists since right derivatives of a concave function are monotone).
  double right_derivative(double x) const {
    detail::require(x >= 0.0, "gauge: argument must be nonnegative");
    return std::visit([x](const auto& g) { return derivative_kind(g, x); }, kind_);
  }

  bool well_behaved() const { return std::isfinite(right_derivative(0.0)); }

  /// Canonical spec string; parse(spec()) reproduces the gauge.
  std::string spec() const {
    return std::visit([](const auto& g) { return spec_kind(g); }, kind_);
  }

 private:
  explicit ConcaveGauge(Kind kind) : kind_(std::move(kind)) {}

  static double eval_kind(const PowerGauge& g, double x) {
    if (x == 0.0) return 0.0;
    return g.p == 1.0 ? x : std::pow(x, g.p);
  }
  static double eval_kind(const CappedGauge& g, double x) { return std::min(g.slope * x, g.base->eval(x)); }
  static double eval_kind(const PiecewiseLinearGauge& g, double x) {
    double value = 0.0;
    double left = 0.0;
    for (std::size_t i = 0; i < g.breakpoints.size(); ++i) {
      const double right = g.breakpoints[i];
      if (x <= right) return value + g.slopes[i] * (x - left);
      value += g.slopes[i] * (right - left);
      left = right;
    }
    return value + g.tail_slope * (x - left);
  }

  static double derivative_kind(const PowerGauge& g, double x) {
    if (g.p == 1.0) return 1.0;
    if (x == 0.0) return std::numeric_limits<double>::infinity();
    return g.p * std::pow(x, g.p - 1.0);
  }
  static double derivative_kind(const CappedGauge& g, double x) {
    return x < g.delta ? g.slope : g.base->right_derivative(x);
  }
  static double derivative_kind(const PiecewiseLinearGauge& g, double x) {
    const auto it = std::upper_bound(g.breakpoints.begin(), g.breakpoints.end(), x);
    const auto idx = static_cast<std::size_t>(it - g.breakpoints.begin());
    return idx < g.slopes.size() ? g.slopes[idx] : g.tail_slope;
  }

  static std::string number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }
  static std::string join(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + number(values[i]);
    return out;
  }
  static std::string spec_kind(const PowerGauge& g) { return "power:" + number(g.p); }
  static std::string spec_kind(const CappedGauge& g) {
    return "capped:" + g.base->spec() + ":delta=" + number(g.delta);
  }
  static std::string spec_kind(const PiecewiseLinearGauge& g) {
    std::string out = "pwl:" + join(g.breakpoints) + ":" + join(g.slopes);
    if (g.tail_slope > 0.0) out += "," + number(g.tail_slope);
    return out;
  }

  Kind kind_;
};

namespace detail {

inline double parse_number(std::string_view text, std::string_view context) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(v))
    throw InvalidInput("gauge spec: bad number '" + std::string(text) + "' in " + std::string(context));
  return v;
}

inline std::vector<double> parse_list(std::string_view text, std::string_view context) {
  std::vector<double> out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(parse_number(text.substr(0, comma), context));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace detail

inline ConcaveGauge ConcaveGauge::parse(std::string_view spec) {
  constexpr std::string_view power_tag = "power:";
  constexpr std::string_view capped_tag = "capped:";
  constexpr std::string_view pwl_tag = "pwl:";
  constexpr std::string_view delta_tag = ":delta=";
  if (spec.starts_with(power_tag)) return power(detail::parse_number(spec.substr(power_tag.size()), spec));
  if (spec.starts_with(capped_tag)) {
    const auto at = spec.rfind(delta_tag);
    if (at == std::string_view::npos || at < capped_tag.size())
      throw InvalidInput("gauge spec: capped gauge needs ':delta=<value>' in '" + std::string(spec) + "'");
    const auto base = parse(spec.substr(capped_tag.size(), at - capped_tag.size()));
    return capped(base, detail::parse_number(spec.substr(at + delta_tag.size()), spec));
  }
  if (spec.starts_with(pwl_tag)) {
    const auto body = spec.substr(pwl_tag.size());
    const auto colon = body.find(':');
    if (colon == std::string_view::npos)
      throw InvalidInput("gauge spec: pwl gauge needs 'breakpoints:slopes' in '" + std::string(spec) + "'");
    return piecewise_linear(detail::parse_list(body.substr(0, colon), spec),
                            detail::parse_list(body.substr(colon + 1), spec));
  }
  throw InvalidInput("gauge spec: unknown gauge '" + std::string(spec) + "'");
}

/// Singular values with everything at or below the rounding floor
/// max(m, n)·eps·σ₁ set to exactly zero. Below that floor the computed values
/// are not determined by the data, and non-Lipschitz gauges such as x^0.1
/// would otherwise turn that noise into O(1) errors.
inline std::vector<double> resolved_singular_values(const Matrix& m) {
  auto sigma = singular_values(m);
  if (sigma.empty() || sigma[0] == 0.0) return sigma;
  const double cut = static_cast<double>(std::max(m.rows(), m.cols())) * std::numeric_limits<double>::epsilon() * sigma[0];
  for (double& s : sigma)
    if (s <= cut) s = 0.0;
  return sigma;
}

inline double gauge_sum(std::span<const double> sigma, const ConcaveGauge& f) {
  double total = 0.0;
  for (double s : sigma) total += f.eval(s);
  return total;
}

/// Σᵢ f(σᵢ(X)) over i = 1..min(m, n).
inline double gauge_sum(const Matrix& x, const ConcaveGauge& f) { return gauge_sum(resolved_singular_values(x), f); }

/// Σᵢ |f(σᵢ(A)) - f(σᵢ(B))| for spectra of equal length.
inline double perturbation_lhs(std::span<const double> sigma_a, std::span<const double> sigma_b,
                               const ConcaveGauge& f) {
  detail::require(sigma_a.size() == sigma_b.size(), "perturbation_lhs: spectra differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < sigma_a.size(); ++i) total += std::abs(f.eval(sigma_a[i]) - f.eval(sigma_b[i]));
  return total;
}

inline double perturbation_lhs(const Matrix& a, const Matrix& b, const ConcaveGauge& f) {
  detail::require(a.same_shape(b), "perturbation_lhs: shape mismatch");
  return perturbation_lhs(resolved_singular_values(a), resolved_singular_values(b), f);
}

/// (Σ σᵢᵖ)^{1/p}; p = 1 gives the nuclear norm.
inline double schatten_quasi_norm(const Matrix& x, double p) {
  detail::require(std::isfinite(p) && p > 0.0 && p <= 1.0, "schatten_quasi_norm: p must lie in (0, 1]");
  const double sum = gauge_sum(x, ConcaveGauge::power(p));
  return p == 1.0 ? sum : std::pow(sum, 1.0 / p);
}

/// Σ σᵢᵖ, the objective of the Schatten-p heuristic.
inline double schatten_p_power(const Matrix& x, double p) { return gauge_sum(x, ConcaveGauge::power(p)); }

/// π with σᵢ(M) = |λ_{πᵢ}(M)| (0-based positions into the descending eigenvalue
/// list). Ties in |λ| keep ascending eigenvalue position.
inline std::vector<std::size_t> spectrum_sorting_permutation(const SymEigFactorization& eig) {
  std::vector<double> magnitude(eig.lambda.size());
  for (std::size_t i = 0; i < magnitude.size(); ++i) magnitude[i] = std::abs(eig.lambda[i]);
  return detail::descending_order(magnitude);
}

inline std::vector<std::size_t> spectrum_sorting_permutation(const Matrix& m) {
  return spectrum_sorting_permutation(sym_eig(m));
}

struct SignedDerivativeMatrix {
  Matrix matrix;                       // M_π = U·Diag(s)·Uᵀ
  std::vector<std::size_t> permutation;  // π, 0-based
  std::vector<int> signs;              // sgn(λ_{πᵢ}), with sgn(0) = 0
  std::vector<double> values;          // sᵢ = sgn(λ_{πᵢ})·d̄_f(σᵢ)
};

/// M_π for symmetric M and a well-behaved gauge. Eigenvalues within the
/// rounding floor n·eps·max|λ| of zero count as zero, so sgn gives 0 there.
inline SignedDerivativeMatrix signed_derivative_matrix(const SymEigFactorization& eig, const ConcaveGauge& f) {
  if (!f.well_behaved())
    throw NotWellBehaved("signed_derivative_matrix: gauge " + f.spec() + " has infinite slope at 0");
  const std::size_t n = eig.lambda.size();
  double top = 0.0;
  for (double l : eig.lambda) top = std::max(top, std::abs(l));
  const double zero_cut = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * top;

  SignedDerivativeMatrix out;
  out.permutation = spectrum_sorting_permutation(eig);
  out.signs.resize(n);
  out.values.resize(n);
  std::vector<double> by_eigen(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = out.permutation[i];
    const double lambda = eig.lambda[j];
    const bool zero = std::abs(lambda) <= zero_cut;
    const int sign = zero ? 0 : (lambda > 0.0 ? 1 : -1);
    const double sigma = zero ? 0.0 : std::abs(lambda);
    out.signs[i] = sign;
    out.values[i] = sign == 0 ? 0.0 : sign * f.right_derivative(sigma);
    by_eigen[j] = out.values[i];
  }
  out.matrix = spectral_reconstruct(eig.U, by_eigen);
  return out;
}

inline SignedDerivativeMatrix signed_derivative_matrix(const Matrix& m, const ConcaveGauge& f) {
  if (!f.well_behaved())
    throw NotWellBehaved("signed_derivative_matrix: gauge " + f.spec() + " has infinite slope at 0");
  return signed_derivative_matrix(sym_eig(m), f);
}

}  // namespace schatten
