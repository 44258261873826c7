#include "support.hpp"

#include <gtest/gtest.h>

using namespace syncnet;
using testing_support::Gen;
using testing_support::max_diff;

namespace {

Matrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

Matrix row(std::initializer_list<double> v) { return column(v).transpose(); }

Matrix ring(int nodes) {
  Matrix a = Matrix::Zero(nodes, nodes);
  for (int k = 0; k < nodes; ++k) a((k + 1) % nodes, k) = 1.0;
  return a;
}

Matrix eye(Eigen::Index n) { return Matrix::Identity(n, n); }

}  // namespace

TEST(Consensus, ElementwiseMatchesKronecker) {
  Gen g(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int agents = g.integer(1, 5);
    const int n = g.integer(1, 3);
    const Matrix a = g.digraph(agents, 0.5, 0.5, 2.0);
    const Vector x = g.vector(agents * n);
    EXPECT_LE((consensus_rhs(a, x, n) - consensus_rhs_kron(a, x, n)).cwiseAbs().maxCoeff(),
              1e-12);
  }
  EXPECT_THROW(consensus_rhs(ring(3), Vector::Zero(5), 2), std::invalid_argument);
}

TEST(Consensus, EpsilonBounds) {
  const Matrix a = ring(4) + ring(4).transpose();  // in-degree 2
  EXPECT_NO_THROW(check_epsilons(a, Vector::Constant(4, 0.49)));
  EXPECT_THROW(check_epsilons(a, Vector::Constant(4, 0.5)), std::invalid_argument);
  EXPECT_THROW(check_epsilons(a, Vector::Zero(4)), std::invalid_argument);
  EXPECT_THROW(check_epsilons(a, Vector::Constant(3, 0.1)), std::invalid_argument);
  // a node without in-neighbours only needs eps > 0
  EXPECT_NO_THROW(check_epsilons(Matrix(Matrix::Zero(2, 2)), Vector::Constant(2, 5.0)));
}

TEST(Consensus, DiscreteUpdateIsRowStochastic) {
  Gen g(32);
  for (int trial = 0; trial < 200; ++trial) {
    const int agents = g.integer(1, 6);
    const Matrix a = g.digraph(agents, 0.5, 0.5, 2.0);
    const Vector in = degrees(a).in;
    Vector eps(agents);
    for (int k = 0; k < agents; ++k) {
      eps(k) = in(k) > 0.0 ? g.uniform(0.01, 0.99) / in(k) : g.uniform(0.01, 3.0);
    }
    check_epsilons(a, eps);
    EXPECT_TRUE(is_row_stochastic(discrete_update_matrix(a, eps)));
  }
}

TEST(StaticInverseB, CancelledEqualsUncancelled) {
  Gen g(33);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = g.integer(1, 3);
    const int agents = g.integer(2, 4);
    Matrix b = g.matrix(n, n);
    b += 2.0 * eye(n);
    const LinearPlant p = LinearPlant::continuous(g.matrix(n, n), b);
    const Matrix adj = g.digraph(agents, 0.6);
    const Vector x = g.vector(agents * n);
    EXPECT_LE((closed_loop_static_state(p, adj, 0.0, x) -
               closed_loop_static_state_uncancelled(p, adj, 0.0, x))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-10);

    const LinearPlant d = LinearPlant::discrete(g.matrix(n, n), b);
    const Vector eps = Vector::Constant(agents, 0.2);
    EXPECT_LE((discrete_static_inverse_b(d, adj, eps, x) -
               discrete_static_inverse_b_uncancelled(d, adj, eps, x))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-10);
  }
  const LinearPlant thin = LinearPlant::continuous(eye(2), column({1, 0}));
  EXPECT_THROW(closed_loop_static_state_uncancelled(thin, ring(2), 0.0, Vector::Zero(4)),
               std::invalid_argument);
}

TEST(Cascade, DynamicStateLaw) {
  Gen g(34);
  for (int trial = 0; trial < 20; ++trial) {
    const testing_support::LoopConfig c = testing_support::random_loop_config(g);
    const int agents = static_cast<int>(c.adjacency.rows());
    const int n = c.plant.state_dim();
    const Eigen::Index blk = agents * n;
    const Matrix cascade = testing_support::dynamic_state_cascade(c);
    EXPECT_LE(cascade.bottomLeftCorner(blk, blk).cwiseAbs().maxCoeff(), 1e-12);
    const Matrix want = kron(eye(agents), c.plant.a()) - kron(laplacian(c.adjacency), eye(n));
    EXPECT_LE(max_diff(cascade.bottomRightCorner(blk, blk), want), 1e-12);
    const Matrix closed = c.plant.a() + c.plant.b() * c.k;
    EXPECT_LE(max_diff(cascade.topLeftCorner(blk, blk), kron(eye(agents), closed)), 1e-12);
  }
}

TEST(Cascade, OutputObserverLaw) {
  Gen g(35);
  for (int trial = 0; trial < 20; ++trial) {
    const testing_support::LoopConfig c = testing_support::random_loop_config(g);
    const int agents = static_cast<int>(c.adjacency.rows());
    const int n = c.plant.state_dim();
    const Eigen::Index blk = agents * n;
    const Matrix cascade = testing_support::observer_cascade(c);
    const Matrix& a = c.plant.a();
    const Matrix hc = c.h * *c.plant.c();
    const Matrix lap = kron(laplacian(c.adjacency), eye(n));
    EXPECT_LE(cascade.block(blk, 0, 2 * blk, blk).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(cascade.block(2 * blk, blk, blk, blk).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(max_diff(cascade.block(2 * blk, 2 * blk, blk, blk),
                       kron(eye(agents), Matrix(a + hc))),
              1e-12);
    EXPECT_LE(max_diff(cascade.block(blk, blk, blk, blk), kron(eye(agents), a) - lap), 1e-12);
    EXPECT_LE(max_diff(cascade.block(blk, 2 * blk, blk, blk), kron(eye(agents), hc)), 1e-12);
    EXPECT_LE(testing_support::cascade_deviation(c), 1e-12);
  }
}

TEST(DiscreteStatic, RotatedCoordinatesFollowConsensus) {
  const Matrix a = testing_support::rotation(0.3);
  const LinearPlant p = LinearPlant::discrete(a, eye(2));
  const SwitchingGraph g = testing_support::rotating_ring(4.0);
  const NetworkModel model(make_coupling_law(CouplingVariant::discrete_static_inverse_b, p, g,
                                             {}, {}, Vector::Constant(4, 0.5)),
                           p, g);
  Gen gen(36);
  Vector x = gen.vector(8);
  Vector z = x;
  Matrix inv_power = eye(2);
  const Matrix a_inv = a.inverse();
  for (int step = 0; step < 100; ++step) {
    const double t = step;
    x = model.advance(t, x);
    z = consensus_step_discrete(g, Vector::Constant(4, 0.5), z, t, 2);
    inv_power = a_inv * inv_power;
    const Vector back = kron(eye(4), inv_power) * x;
    ASSERT_LE((back - z).cwiseAbs().maxCoeff(), 1e-9) << "step " << step;
  }
}

TEST(Passivity, CertificateForLosslessOscillator) {
  const LinearPlant p = LinearPlant::continuous(testing_support::oscillator(), column({0, 1}),
                                                row({0, 1}));
  const PassivityCertificate c = passivity_check(p, eye(2));
  EXPECT_TRUE(c.verdict);
  EXPECT_LE(std::abs(c.residual_lyap), 1e-12);
  EXPECT_LE(c.residual_io, 1e-12);
  EXPECT_DOUBLE_EQ(c.min_eig_p, 1.0);
  EXPECT_TRUE(search_passivity_certificate(p).verdict);

  Matrix unstable(2, 2);
  unstable << 0.5, 1, -1, 0;
  const LinearPlant q = LinearPlant::continuous(unstable, column({0, 1}), row({0, 1}));
  EXPECT_FALSE(search_passivity_certificate(q).verdict);
  EXPECT_THROW(passivity_check(p, row({1, 2})), std::invalid_argument);
  Matrix skew(2, 2);
  skew << 1, 1, 0, 1;
  EXPECT_THROW(passivity_check(p, skew), std::invalid_argument);
}

TEST(Passivity, LyapunovValueIgnoresCommonOffset) {
  Gen g(37);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = g.integer(1, 3);
    const int agents = g.integer(1, 5);
    const Matrix f = g.matrix(n, n);
    const Matrix p = f * f.transpose() + eye(n);
    const Vector x = g.vector(agents * n);
    const Vector shift = g.vector(n, 10.0);
    const Vector moved = x + shift.replicate(agents, 1);
    EXPECT_NEAR(lyapunov_value(p, x), lyapunov_value(p, moved), 1e-9);
    const Matrix pi = disagreement_projector(agents, n);
    const double quad = 0.5 * x.dot(pi * kron(eye(agents), p) * pi * x);
    EXPECT_NEAR(lyapunov_value(p, x), quad, 1e-10);
    EXPECT_NEAR(disagreement(x, n), (pi * x).norm(), 1e-12);
  }
}

TEST(Gramian, DisagreementObservability) {
  const LinearPlant p = LinearPlant::continuous(testing_support::oscillator(), column({0, 1}),
                                                row({0, 1}));
  const Matrix path = ring(3) + ring(3).transpose();
  const GramianResult r =
      observability_gramian(p, SwitchingGraph::constant(path, 1.0, 1.0), 0.0, 2.0, 0.01);
  EXPECT_LE(max_diff(r.gramian, r.gramian.transpose()), 1e-14);
  EXPECT_NEAR(r.min_eigenvalue, 0.0, 1e-9);  // common motion is invisible to D^T
  EXPECT_GT(r.min_disagreement_eigenvalue, 1e-3);

  const Matrix d = incidence_factor(path);
  EXPECT_LE(max_diff(d * d.transpose(), laplacian(path)), 1e-14);
  EXPECT_THROW(observability_gramian(p, SwitchingGraph::constant(ring(3), 1.0, 1.0), 0.0,
                                     1.0, 0.01),
               std::domain_error);
}

TEST(CouplingLaw, ConstructionErrors) {
  const Matrix a = testing_support::oscillator();
  const SwitchingGraph g = testing_support::rotating_ring(4.0);
  const LinearPlant thin = LinearPlant::continuous(a, column({0, 1}));
  const LinearPlant full = LinearPlant::continuous(a, eye(2));
  const LinearPlant disc = LinearPlant::discrete(a, eye(2));

  EXPECT_THROW(make_coupling_law(CouplingVariant::static_state_inverse_b, thin, g),
               std::invalid_argument);
  EXPECT_THROW(make_coupling_law(CouplingVariant::dynamic_output_observer, thin, g),
               std::invalid_argument);
  EXPECT_THROW(make_coupling_law(CouplingVariant::static_diffusive_output, thin, g),
               std::invalid_argument);
  EXPECT_THROW(make_coupling_law(CouplingVariant::discrete_static_inverse_b, full, g, {}, {},
                                 Vector::Constant(4, 0.5)),
               std::invalid_argument);
  EXPECT_THROW(make_coupling_law(CouplingVariant::discrete_static_inverse_b, disc, g),
               std::invalid_argument);
  EXPECT_THROW(make_coupling_law(CouplingVariant::discrete_static_inverse_b, disc, g, {}, {},
                                 Vector::Constant(4, 1.5)),
               std::invalid_argument);
  EXPECT_THROW(make_coupling_law(CouplingVariant::dynamic_state, thin, g, row({1, 1})),
               std::invalid_argument);  // not Hurwitz
  EXPECT_THROW(make_coupling_law(CouplingVariant::dynamic_state, thin, g, row({1, 1, 1})),
               std::invalid_argument);

  const CouplingLaw law = make_coupling_law(CouplingVariant::dynamic_state, thin, g);
  ASSERT_TRUE(law.k.has_value());
  EXPECT_LT(spectral_abscissa(Matrix(a + thin.b() * *law.k)), 0.0);
  EXPECT_FALSE(law.h.has_value());
  const CouplingLaw kept =
      make_coupling_law(CouplingVariant::dynamic_state, thin, g, row({0, -1}));
  EXPECT_LE(max_diff(*kept.k, row({0, -1})), 0.0);
}

TEST(NetworkModel, PackRoundTrip) {
  const LinearPlant p = LinearPlant::continuous(testing_support::oscillator(), column({0, 1}),
                                                row({0, 1}));
  const SwitchingGraph g = testing_support::rotating_ring(4.0);
  const NetworkModel model(make_coupling_law(CouplingVariant::dynamic_output_observer, p, g),
                           p, g);
  EXPECT_EQ(model.packed_size(), 24);
  Gen gen(38);
  const NetworkState s{0.0, gen.vector(8), gen.vector(8), gen.vector(8)};
  const NetworkState back = model.unpack(0.0, model.pack(s));
  EXPECT_EQ(back.x, s.x);
  EXPECT_EQ(*back.eta, *s.eta);
  EXPECT_EQ(*back.xhat, *s.xhat);
  EXPECT_THROW(model.pack({0.0, s.x, s.eta, std::nullopt}), std::invalid_argument);
  EXPECT_THROW(model.advance(0.0, model.pack(s)), std::logic_error);
}
