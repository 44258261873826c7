#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>

using namespace syncnet;
using testing_support::Gen;
using testing_support::decomposed_system;
using testing_support::Decomposed;
using testing_support::kalman_rank;
using testing_support::max_diff;
using testing_support::series_expm;

TEST(Kron, IdentitiesOnRandomTuples) {
  Gen g(11);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = g.integer(1, 3), n = g.integer(1, 3), p = g.integer(1, 3),
              q = g.integer(1, 3), r = g.integer(1, 3), s = g.integer(1, 3);
    const Matrix a = g.matrix(m, n), b = g.matrix(p, q), c = g.matrix(r, s);
    worst = std::max(worst, max_diff(kron(kron(a, b), c), kron(a, kron(b, c))));

    const Matrix b2 = g.matrix(p, q);
    worst = std::max(worst, max_diff(kron(a, b + b2), kron(a, b) + kron(a, b2)));

    const Matrix a2 = g.matrix(n, r), c2 = g.matrix(q, s);
    worst = std::max(worst, max_diff(kron(a * a2, b * c2), kron(a, b) * kron(a2, c2)));

    const Matrix im = Matrix::Identity(m, m), in = Matrix::Identity(n, n),
                 ip = Matrix::Identity(p, p), iq = Matrix::Identity(q, q);
    worst = std::max(worst, max_diff(kron(a, b), kron(a, ip) * kron(in, b)));
    worst = std::max(worst, max_diff(kron(a, b), kron(im, b) * kron(a, iq)));

    const int k = g.integer(1, 3);
    const Matrix ik = Matrix::Identity(k, k);
    worst = std::max(worst, max_diff(kron(Matrix(a * a2), ik), kron(a, ik) * kron(a2, ik)));
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Kron, ShapeAndBlocks) {
  Matrix a(1, 2);
  a << 2, -1;
  const Matrix b = Matrix::Identity(2, 2);
  Matrix expected(2, 4);
  expected << 2, 0, -1, 0, 0, 2, 0, -1;
  EXPECT_EQ(kron(a, b), expected);
}

TEST(Expm, MatchesPowerSeries) {
  Gen g(12);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix a = g.matrix(4, 4);
    a *= g.uniform(0.0, 2.0) / a.norm();
    const Matrix got = expm(a, 1.0);
    const Matrix want = series_expm(a).cast<double>();
    EXPECT_LE((got - want).norm() / want.norm(), 1e-8) << "trial " << trial;
  }
}

TEST(Expm, LargeNormUsesSquaring) {
  Gen g(13);
  const Matrix a = g.matrix(3, 3, 3.0);
  // e^{A} = (e^{A/8})^8, each factor from the series oracle
  const Matrix small = series_expm(a / 8.0).cast<double>();
  Matrix want = Matrix::Identity(3, 3);
  for (int i = 0; i < 8; ++i) want = (want * small).eval();
  EXPECT_LE((expm(a, 1.0) - want).norm() / want.norm(), 1e-10);
}

TEST(Expm, RotationGeneratorClosedForm) {
  const Matrix j = testing_support::oscillator();
  for (double t : {0.0, 0.3, 1.0, std::numbers::pi, 7.0, 60.0}) {
    const Matrix e = expm(j, t);
    Matrix want(2, 2);
    want << std::cos(t), std::sin(t), -std::sin(t), std::cos(t);
    EXPECT_LE(max_diff(e, want), 1e-10) << "t = " << t;
  }
}

TEST(Expm, ZeroAndDiagonal) {
  EXPECT_LE(max_diff(expm(Matrix(Matrix::Zero(3, 3)), 5.0), Matrix::Identity(3, 3)), 1e-15);
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << -1.0, 0.5;
  const Matrix e = expm(d, 2.0);
  EXPECT_NEAR(e(0, 0), std::exp(-2.0), 1e-14);
  EXPECT_NEAR(e(1, 1), std::exp(1.0), 1e-14);
  EXPECT_THROW(expm(Matrix(2, 3), 1.0), std::invalid_argument);
}

TEST(Eigen, KnownSpectra) {
  auto sorted = [](std::vector<Complex> v) {
    std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
      return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
    });
    return v;
  };
  const auto rot = sorted(eigenvalues(testing_support::oscillator()));
  EXPECT_NEAR(rot[0].imag(), -1.0, 1e-12);
  EXPECT_NEAR(rot[1].imag(), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(rot[0].real()), 0.0, 1e-12);

  Matrix upper(3, 3);
  upper << 1, 5, 2, 0, -2, 7, 0, 0, 0.5;
  const auto e = sorted(eigenvalues(upper));
  EXPECT_NEAR(e[0].real(), -2.0, 1e-12);
  EXPECT_NEAR(e[1].real(), 0.5, 1e-12);
  EXPECT_NEAR(e[2].real(), 1.0, 1e-12);
}

TEST(Classify, ContinuousAndDiscrete) {
  Matrix stable(2, 2);
  stable << -1, 3, 0, -0.5;
  EXPECT_EQ(classify_spectrum(stable, TimeDomain::continuous).classification,
            StabilityClass::hurwitz);
  EXPECT_EQ(classify_spectrum(testing_support::oscillator(), TimeDomain::continuous)
                .classification,
            StabilityClass::marginally_stable);
  Matrix integrator(2, 2);
  integrator << 0, 1, 0, 0;
  EXPECT_EQ(classify_spectrum(integrator, TimeDomain::continuous).classification,
            StabilityClass::marginally_stable);
  EXPECT_TRUE(classify_spectrum(-stable, TimeDomain::continuous).has_unstable_mode());

  EXPECT_EQ(classify_spectrum(testing_support::rotation(0.3), TimeDomain::discrete)
                .classification,
            StabilityClass::marginally_schur);
  EXPECT_EQ(classify_spectrum(0.5 * testing_support::rotation(0.3), TimeDomain::discrete)
                .classification,
            StabilityClass::schur);
  EXPECT_TRUE(classify_spectrum(1.1 * testing_support::rotation(0.3), TimeDomain::discrete)
                  .has_unstable_mode());
}

TEST(Lyapunov, ResidualOnRandomStableMatrices) {
  Gen g(14);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = g.integer(1, 5);
    Matrix m = g.matrix(n, n);
    m -= (spectral_abscissa(m) + 0.5) * Matrix::Identity(n, n);
    const Matrix f = g.matrix(n, n);
    const Matrix q = f * f.transpose() + Matrix::Identity(n, n);
    const Matrix x = solve_lyapunov(m, q);
    EXPECT_LE((m.transpose() * x + x * m + q).norm(), 1e-9 * (1.0 + q.norm()));
    EXPECT_LE(max_diff(x, x.transpose()), 1e-9);
    // Hurwitz m with q > 0 gives x > 0
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (x + x.transpose()));
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Lyapunov, ResonantSpectrumRejected) {
  Matrix m = Matrix::Zero(2, 2);
  m.diagonal() << 1.0, -1.0;
  EXPECT_THROW(solve_lyapunov(m, Matrix::Identity(2, 2)), NumericalError);
  EXPECT_THROW(solve_lyapunov(Matrix::Identity(2, 2), Matrix::Identity(3, 3)),
               std::invalid_argument);
}

TEST(Pbh, MatchesKalmanRankOracle) {
  Gen g(15);
  int uncontrollable = 0, unstabilizable = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Decomposed d = decomposed_system(g);
    const auto n = d.a.rows();
    const bool controllable = kalman_rank(d.a, d.b) == n;
    EXPECT_EQ(pbh_test(d.a, d.b, PbhRegion::all).passed, controllable) << "trial " << trial;

    // uncontrollable modes are exactly the spectrum of A22
    bool oracle_stabilizable = true;
    for (const Complex& z : eigenvalues(d.a22)) oracle_stabilizable &= z.real() < -1e-9;
    if (d.a22.size() == 0) oracle_stabilizable = true;
    if (d.controllable_dim < n - d.a22.rows()) continue;  // degenerate draw of B1
    EXPECT_EQ(stabilizable(d.a, d.b).passed, oracle_stabilizable) << "trial " << trial;

    // duality: (A, B) stabilizable iff (A^T, B^T) detectable
    EXPECT_EQ(detectable(Matrix(d.a.transpose()), Matrix(d.b.transpose())).passed,
              stabilizable(d.a, d.b).passed);
    uncontrollable += controllable ? 0 : 1;
    unstabilizable += oracle_stabilizable ? 0 : 1;
  }
  EXPECT_GT(uncontrollable, 30);
  EXPECT_GT(unstabilizable, 10);
}

TEST(Pbh, ReportsOffendingEigenvalue) {
  Matrix a = Matrix::Zero(2, 2);
  a.diagonal() << 2.0, -1.0;
  Matrix b(2, 1);
  b << 0, 1;
  const PbhResult r = stabilizable(a, b);
  ASSERT_FALSE(r.passed);
  ASSERT_TRUE(r.offending_eigenvalue.has_value());
  EXPECT_NEAR(r.offending_eigenvalue->real(), 2.0, 1e-12);
  EXPECT_EQ(r.rank_defect, 1);
  EXPECT_THROW(stabilizing_gain(a, b), UnstabilizableError);
}

TEST(Gains, StabilizingGainOnRandomControllablePairs) {
  Gen g(16);
  int done = 0;
  while (done < 100) {
    const int n = g.integer(1, 5), m = g.integer(1, 2);
    const Matrix a = g.matrix(n, n, 2.0), b = g.matrix(n, m);
    if (kalman_rank(a, b) != n) continue;
    const Matrix k = stabilizing_gain(a, b);
    ASSERT_EQ(k.rows(), m);
    ASSERT_EQ(k.cols(), n);
    EXPECT_LT(spectral_abscissa(a + b * k), 0.0) << "pair " << done;
    ++done;
  }
}

TEST(Gains, StabilizableButUncontrollable) {
  // Unstable controllable mode plus a stable uncontrollable mode.
  Matrix a = Matrix::Zero(2, 2);
  a.diagonal() << 1.0, -2.0;
  Matrix b(2, 1);
  b << 1, 0;
  const Matrix k = stabilizing_gain(a, b);
  EXPECT_LT(spectral_abscissa(a + b * k), 0.0);
}

TEST(Gains, DetectorAndSchurGains) {
  const Matrix a = testing_support::oscillator();
  Matrix c(1, 2);
  c << 0, 1;
  const Matrix h = detector_gain(a, c);
  EXPECT_LT(spectral_abscissa(a + h * c), 0.0);

  const Matrix r = testing_support::rotation(0.3);
  Matrix b(2, 1);
  b << 0, 1;
  EXPECT_LT(spectral_radius(r + b * schur_stabilizing_gain(r, b)), 1.0);
  Matrix c1(1, 2);
  c1 << 1, 0;
  EXPECT_LT(spectral_radius(r + schur_detector_gain(r, c1) * c1), 1.0);

  Gen g(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix ad = g.matrix(3, 3, 1.0), bd = g.matrix(3, 1);
    if (kalman_rank(ad, bd) != 3) continue;
    EXPECT_LT(spectral_radius(ad + bd * schur_stabilizing_gain(ad, bd)), 1.0);
  }
}

TEST(Subspace, ControllableSubspaceDimension) {
  Gen g(18);
  for (int trial = 0; trial < 50; ++trial) {
    const Decomposed d = decomposed_system(g);
    const Matrix v = controllable_subspace(d.a, d.b);
    EXPECT_EQ(v.cols(), kalman_rank(d.a, d.b));
    if (v.cols() > 0) {
      EXPECT_LE(max_diff(v.transpose() * v, Matrix::Identity(v.cols(), v.cols())), 1e-10);
      // invariance: A V lies in span V
      const Matrix av = d.a * v;
      EXPECT_LE((av - v * (v.transpose() * av)).norm(), 1e-8 * (1.0 + av.norm()));
    }
  }
}

TEST(Misc, RankAndCondition) {
  Matrix m(3, 3);
  m << 1, 2, 3, 2, 4, 6, 0, 1, 1;
  EXPECT_EQ(numerical_rank(m), 2);
  EXPECT_NEAR(condition_number(Matrix(Matrix::Identity(4, 4))), 1.0, 1e-14);
  EXPECT_TRUE(std::isinf(condition_number(Matrix(Matrix::Zero(2, 2)))));
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = std::nan("");
  EXPECT_THROW(require_finite(bad, "bad"), std::invalid_argument);
}
