#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "schatten_lab/gauge.hpp"
#include "schatten_lab/rng.hpp"

using namespace schatten;

namespace {

const ConcaveGauge sqrt_gauge = ConcaveGauge::power(0.5);
const ConcaveGauge capped_sqrt = ConcaveGauge::capped(ConcaveGauge::power(0.5), 1.0);

std::vector<ConcaveGauge> sample_family() {
  return {ConcaveGauge::power(0.1),
          ConcaveGauge::power(0.5),
          ConcaveGauge::power(1.0),
          ConcaveGauge::capped(ConcaveGauge::power(0.3), 0.05),
          ConcaveGauge::capped(ConcaveGauge::power(0.8), 2.0),
          ConcaveGauge::piecewise_linear({0.5, 1.0}, {2.0, 1.0}),
          ConcaveGauge::piecewise_linear({0.2, 1.5, 3.0}, {3.0, 1.0, 0.5, 0.1})};
}

}  // namespace

TEST(GaugeEval, Examples) {
  EXPECT_DOUBLE_EQ(sqrt_gauge(9.0), 3.0);
  EXPECT_DOUBLE_EQ(capped_sqrt(0.25), 0.25);
  EXPECT_DOUBLE_EQ(capped_sqrt(4.0), 2.0);
  for (const auto& f : sample_family()) EXPECT_EQ(f(0.0), 0.0);
  EXPECT_THROW(sqrt_gauge(-1.0), InvalidInput);
}

TEST(GaugeEval, PiecewiseLinear) {
  const auto f = ConcaveGauge::piecewise_linear({0.5, 1.0}, {2.0, 1.0});
  EXPECT_DOUBLE_EQ(f(0.25), 0.5);
  EXPECT_DOUBLE_EQ(f(0.75), 1.25);
  EXPECT_DOUBLE_EQ(f(5.0), 1.5);  // flat tail
  const auto g = ConcaveGauge::piecewise_linear({0.5, 1.0}, {2.0, 1.0, 0.5});
  EXPECT_DOUBLE_EQ(g(3.0), 2.5);
}

TEST(GaugeFactories, RejectInvalidParameters) {
  EXPECT_THROW(ConcaveGauge::power(0.0), InvalidInput);
  EXPECT_THROW(ConcaveGauge::power(1.5), InvalidInput);
  EXPECT_THROW(ConcaveGauge::capped(sqrt_gauge, 0.0), InvalidInput);
  EXPECT_THROW(ConcaveGauge::piecewise_linear({1.0, 0.5}, {2.0, 1.0}), InvalidInput);
  EXPECT_THROW(ConcaveGauge::piecewise_linear({0.5, 1.0}, {1.0, 2.0}), InvalidInput);
  EXPECT_THROW(ConcaveGauge::piecewise_linear({0.5}, {1.0, 2.0}), InvalidInput);
  EXPECT_THROW(ConcaveGauge::piecewise_linear({0.5, 1.0}, {2.0}), InvalidInput);
}

TEST(GaugeDerivative, Examples) {
  EXPECT_DOUBLE_EQ(ConcaveGauge::power(1.0).right_derivative(0.0), 1.0);
  EXPECT_DOUBLE_EQ(sqrt_gauge.right_derivative(4.0), 0.25);
  EXPECT_DOUBLE_EQ(capped_sqrt.right_derivative(0.0), 1.0);
  EXPECT_EQ(sqrt_gauge.right_derivative(0.0), std::numeric_limits<double>::infinity());
  EXPECT_FALSE(sqrt_gauge.well_behaved());
  EXPECT_TRUE(capped_sqrt.well_behaved());
  EXPECT_TRUE(ConcaveGauge::power(1.0).well_behaved());
}

TEST(GaugeDerivative, CappedIsLinearBelowDelta) {
  const auto f = ConcaveGauge::capped(ConcaveGauge::power(0.5), 0.04);  // slope 0.2 / 0.04 = 5
  for (double x : {0.0, 0.01, 0.039}) EXPECT_DOUBLE_EQ(f.right_derivative(x), 5.0);
  EXPECT_DOUBLE_EQ(f.right_derivative(0.04), 0.5 / 0.2);
}

TEST(GaugeDerivative, MatchesForwardDifferences) {
  for (const auto& f : sample_family()) {
    for (double x : {0.013, 0.3, 0.77, 1.3, 2.9, 7.5}) {
      const double h = 1e-7 * (1.0 + x);
      const double fd = (f(x + h) - f(x)) / h;
      EXPECT_NEAR(f.right_derivative(x), fd, 1e-5 * (1.0 + std::abs(fd))) << f.spec() << " at " << x;
    }
  }
}

TEST(GaugeProperties, MonotoneConcaveWithNonincreasingSlope) {
  Rng rng(21);
  for (const auto& f : sample_family()) {
    for (int i = 0; i < 400; ++i) {
      const double x = rng.uniform(0.0, 5.0);
      const double y = rng.uniform(0.0, 5.0);
      const double lo = std::min(x, y);
      const double hi = std::max(x, y);
      EXPECT_LE(f(lo), f(hi) + 1e-15);
      EXPECT_GE(f(0.5 * (x + y)), 0.5 * (f(x) + f(y)) - 1e-12);
      EXPECT_GE(f.right_derivative(lo), f.right_derivative(hi));
    }
  }
}

TEST(GaugeProperties, TangentLineMajorizes) {
  // f(y) ≤ f(x) + d̄_f(x)·(y − x) for well-behaved f.
  Rng rng(22);
  for (const auto& f : sample_family()) {
    if (!f.well_behaved()) continue;
    for (int i = 0; i < 400; ++i) {
      const double x = rng.uniform(0.0, 4.0);
      const double y = rng.uniform(0.0, 4.0);
      EXPECT_LE(f(y), f(x) + f.right_derivative(x) * (y - x) + 1e-12);
    }
  }
}

TEST(GaugeProperties, CappedConvergesAsDeltaShrinks) {
  const auto base = ConcaveGauge::power(0.4);
  for (double x : {0.001, 0.05, 0.3, 1.0, 4.0}) {
    double prev_gap = std::numeric_limits<double>::infinity();
    for (double delta : {1.0, 0.1, 0.01}) {
      const double gap = base(x) - ConcaveGauge::capped(base, delta)(x);
      EXPECT_GE(gap, -1e-15);
      EXPECT_LE(gap, prev_gap + 1e-15);
      prev_gap = gap;
    }
    if (x >= 0.01) {
      EXPECT_NEAR(ConcaveGauge::capped(base, 0.01)(x), base(x), 1e-15);
    }
  }
}

TEST(GaugeSpec, ParseRoundTrip) {
  for (const auto& f : sample_family()) {
    const auto g = ConcaveGauge::parse(f.spec());
    EXPECT_EQ(g.spec(), f.spec());
    for (double x : {0.0, 0.1, 1.0, 3.3}) EXPECT_EQ(g(x), f(x));
  }
  EXPECT_DOUBLE_EQ(ConcaveGauge::parse("capped:power:0.5:delta=0.01")(0.0025), 0.025);
  EXPECT_DOUBLE_EQ(ConcaveGauge::parse("pwl:0.5,1.0:2.0,1.0")(1.0), 1.5);
  for (const char* bad : {"", "power", "power:x", "power:2", "capped:power:0.5", "pwl:1,2", "cubic:1",
                          "capped:power:0.5:delta=-1"})
    EXPECT_THROW(ConcaveGauge::parse(bad), InvalidInput) << bad;
}

TEST(SchattenQuasiNorm, Examples) {
  EXPECT_NEAR(schatten_quasi_norm(Matrix::diag({9.0, 4.0}), 0.5), 25.0, 1e-12);
  EXPECT_EQ(schatten_quasi_norm(Matrix(3, 3), 0.3), 0.0);
  EXPECT_THROW(schatten_quasi_norm(Matrix::identity(2), 0.0), InvalidInput);
  EXPECT_THROW(schatten_quasi_norm(Matrix::identity(2), 1.2), InvalidInput);
  Rng rng(23);
  const Matrix x = rng.gaussian(3, 3);
  double direct = 0.0;
  for (double s : singular_values(x)) direct += std::exp(0.7 * std::log(s));
  EXPECT_NEAR(schatten_quasi_norm(x, 0.7), std::exp(std::log(direct) / 0.7), 1e-12 * direct);
}

TEST(GaugeSum, Examples) {
  EXPECT_EQ(gauge_sum(Matrix(2, 3), sqrt_gauge), 0.0);
  EXPECT_DOUBLE_EQ(gauge_sum(Matrix::identity(2), sqrt_gauge), 2.0);
  Rng rng(24);
  const Matrix x = rng.gaussian(4, 2);
  const auto f = ConcaveGauge::capped(ConcaveGauge::power(0.3), 0.7);
  double want = 0.0;
  for (double s : singular_values(x)) want += f(s);
  EXPECT_NEAR(gauge_sum(x, f), want, 1e-12);
}

TEST(GaugeSum, ScaleCovarianceOfPower) {
  Rng rng(25);
  for (double p : {0.1, 0.5, 0.9}) {
    const auto f = ConcaveGauge::power(p);
    const Matrix x = rng.gaussian(3, 4);
    for (double c : {0.01, 3.0, 250.0})
      EXPECT_NEAR(gauge_sum(x * c, f), std::pow(c, p) * gauge_sum(x, f), 1e-12 * std::pow(c, p) * gauge_sum(x, f));
  }
}

TEST(GaugeSum, IgnoresRoundingNoiseSingularValues) {
  // A rank-one matrix: the second singular value is pure rounding noise and
  // must not contribute 1e-16^0.1 ≈ 0.025 per entry.
  Rng rng(26);
  const Matrix x = rng.gaussian(4, 1) * rng.gaussian(1, 4);
  const auto f = ConcaveGauge::power(0.1);
  EXPECT_NEAR(gauge_sum(x, f), f(singular_values(x)[0]), 1e-12);
}

TEST(PerturbationLhs, Examples) {
  Rng rng(27);
  const Matrix a = rng.gaussian(3, 3);
  EXPECT_EQ(perturbation_lhs(a, a, sqrt_gauge), 0.0);
  EXPECT_NEAR(perturbation_lhs(a, Matrix(3, 3), sqrt_gauge), gauge_sum(a, sqrt_gauge), 1e-15);
  EXPECT_DOUBLE_EQ(perturbation_lhs(Matrix::diag({4.0, 1.0}), Matrix::diag({1.0, 0.0}), sqrt_gauge), 2.0);
  EXPECT_THROW(perturbation_lhs(Matrix(2, 3), Matrix(3, 2), sqrt_gauge), InvalidInput);
}

TEST(SpectrumSortingPermutation, Examples) {
  // λ sorted descending is (3, 1, −5); σ = (5, 3, 1) = |λ_π| with π = (2, 0, 1) 0-based.
  EXPECT_EQ(spectrum_sorting_permutation(Matrix::diag({3.0, -5.0, 1.0})), (std::vector<std::size_t>{2, 0, 1}));
  const auto eig = sym_eig(Matrix::diag({2.0, -2.0}));
  const auto pi = spectrum_sorting_permutation(eig);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(std::abs(eig.lambda[pi[i]]), 2.0);
}

TEST(SpectrumSortingPermutation, DefiningProperty) {
  Rng rng(28);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix m = symmetrize(rng.gaussian(4, 4));
    const auto eig = sym_eig(m);
    const auto pi = spectrum_sorting_permutation(eig);
    const auto sigma = singular_values(m);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(sigma[i], std::abs(eig.lambda[pi[i]]), 1e-12);
  }
}

TEST(SignedDerivativeMatrix, Examples) {
  const Matrix m = Matrix::diag({4.0, -1.0});
  const auto lin = signed_derivative_matrix(m, ConcaveGauge::power(1.0));
  EXPECT_LE((lin.matrix - Matrix::diag({1.0, -1.0})).max_abs(), 1e-15);
  // d̄_f(4) = 0.5·4^-0.5 = 0.25; at σ = 1 = δ the right derivative is that of
  // the concave branch, 0.5.
  const auto capped = signed_derivative_matrix(m, capped_sqrt);
  EXPECT_LE((capped.matrix - Matrix::diag({0.25, -0.5})).max_abs(), 1e-15);
  EXPECT_THROW(signed_derivative_matrix(m, sqrt_gauge), NotWellBehaved);
}

TEST(SignedDerivativeMatrix, ZeroEigenvalueGetsZeroSign) {
  const auto r = signed_derivative_matrix(Matrix::diag({2.0, 0.0}), capped_sqrt);
  EXPECT_EQ(r.signs, (std::vector<int>{1, 0}));
  EXPECT_EQ(r.matrix(1, 1), 0.0);
}

TEST(SignedDerivativeMatrix, TraceIdentityAndCommutation) {
  Rng rng(29);
  const auto f = ConcaveGauge::capped(ConcaveGauge::power(0.5), 0.3);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix m = symmetrize(rng.gaussian(3, 3));
    const auto r = signed_derivative_matrix(m, f);
    double want = 0.0;
    for (double s : singular_values(m)) want += s * f.right_derivative(s);
    double trace = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) trace += m(i, j) * r.matrix(j, i);
    EXPECT_NEAR(trace, want, 1e-9);
    double smax = 0.0;
    for (double v : r.values) smax = std::max(smax, std::abs(v));
    EXPECT_LE(commutator(m, r.matrix).frobenius_norm(), 1e-8 * (1.0 + m.frobenius_norm() * smax));
  }
}
