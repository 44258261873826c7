#ifndef SYNCNET_TESTS_SUPPORT_HPP
#define SYNCNET_TESTS_SUPPORT_HPP

#include "syncnet/scenario.hpp"

#include <algorithm>
#include <random>

namespace testing_support {

using syncnet::Matrix;
using syncnet::Vector;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p) { return uniform(0.0, 1.0) < p; }

  Matrix matrix(Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(-scale, scale);
    return m;
  }
  Vector vector(Eigen::Index size, double scale = 1.0) { return matrix(size, 1, scale); }

  /// Zero diagonal, each off-diagonal edge present with probability p and
  /// weight in [eta, gamma].
  Matrix digraph(int nodes, double p, double eta = 1.0, double gamma = 1.0) {
    Matrix a = Matrix::Zero(nodes, nodes);
    for (int k = 0; k < nodes; ++k) {
      for (int j = 0; j < nodes; ++j) {
        if (k != j && coin(p)) a(k, j) = eta == gamma ? eta : uniform(eta, gamma);
      }
    }
    return a;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline Matrix oscillator() {
  Matrix a(2, 2);
  a << 0, 1, -1, 0;
  return a;
}

inline Matrix rotation(double angle) {
  Matrix r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

inline syncnet::SwitchingGraph rotating_ring(double period,
                                             syncnet::RingOrientation o =
                                                 syncnet::RingOrientation::forward) {
  return syncnet::build_graph(syncnet::rotating_edge_schedule(period, o));
}

/// Maximum entrywise difference of two equally shaped matrices.
inline double max_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline syncnet::MatrixX<long double> series_expm(const Matrix& a) {
  const syncnet::MatrixX<long double> al = a.cast<long double>();
  syncnet::MatrixX<long double> term = syncnet::MatrixX<long double>::Identity(a.rows(), a.cols());
  syncnet::MatrixX<long double> sum = term;
  for (int k = 1; k < 80; ++k) {
    term = (term * al / static_cast<long double>(k)).eval();
    sum += term;
  }
  return sum;
}

inline Matrix random_orthogonal(Gen& g, int n) {
  Eigen::HouseholderQR<Matrix> qr(g.matrix(n, n));
  return qr.householderQ();
}

inline int kalman_rank(const Matrix& a, const Matrix& b) {
  const auto n = a.rows();
  if (n == 0 || b.cols() == 0) return 0;
  Matrix ctrb(n, n * b.cols());
  Matrix block = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.middleCols(i * b.cols(), b.cols()) = block;
    block = (a * block).eval();
  }
  Eigen::JacobiSVD<Matrix> svd(ctrb);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) rank += s(i) > 1e-9 * s(0) ? 1 : 0;
  return rank;
}

// A system in Kalman form [[A11, A12], [0, A22]], [B1; 0] rotated by an
// orthogonal change of basis. The uncontrollable part is A22 by construction.
struct Decomposed {
  Matrix a, b, a22;
  int controllable_dim = 0;
};

inline Decomposed decomposed_system(Gen& g) {
  const int n = g.integer(1, 4);
  const int m = g.integer(1, 2);
  const int r = g.coin(0.5) ? n : g.integer(0, n - 1);
  Matrix a = g.matrix(n, n, 1.5);
  Matrix b = Matrix::Zero(n, m);
  if (r > 0) b.topRows(r) = g.matrix(r, m);
  if (r < n) {
    a.bottomLeftCorner(n - r, r).setZero();
    if (g.coin(0.5)) {
      // push the uncontrollable part clearly into one half plane
      const double shift = g.coin(0.5) ? 3.0 : -3.0;
      a.bottomRightCorner(n - r, n - r) +=
          shift * Matrix::Identity(n - r, n - r);
    }
  }
  const Matrix t = random_orthogonal(g, n);
  Decomposed d;
  d.a22 = a.bottomRightCorner(n - r, n - r);
  d.a = t * a * t.transpose();
  d.b = t * b;
  d.controllable_dim = kalman_rank(a.topLeftCorner(r, r), b.topRows(r));
  return d;
}

/// Random plant with (A, B) controllable and (C, A) detectable, a random
/// digraph on 2..4 nodes and synthesized K and H.
struct LoopConfig {
  syncnet::LinearPlant plant;
  Matrix adjacency;
  Matrix k;
  Matrix h;
};

inline LoopConfig random_loop_config(Gen& g) {
  for (;;) {
    const int n = g.integer(1, 3);
    const Matrix a = g.matrix(n, n);
    const Matrix b = g.matrix(n, g.integer(1, n));
    const Matrix c = g.matrix(g.integer(1, n), n);
    if (!syncnet::pbh_test(a, b, syncnet::PbhRegion::all).passed) continue;
    if (!syncnet::detectable(a, c).passed) continue;
    return {syncnet::LinearPlant::continuous(a, b, c), g.digraph(g.integer(2, 4), 0.5, 0.5, 2.0),
            syncnet::stabilizing_gain(a, b), syncnet::detector_gain(a, c)};
  }
}

/// Closed-loop matrix of the dynamic-state law in [x; s], s = x - eta.
inline Matrix dynamic_state_cascade(const LoopConfig& c) {
  using namespace syncnet;
  const SwitchingGraph graph = SwitchingGraph::constant(c.adjacency, 0.5, 2.0);
  const NetworkModel model(make_coupling_law(CouplingVariant::dynamic_state, c.plant, graph, c.k),
                           c.plant, graph);
  const Matrix m = model.system_matrix(0.0, c.adjacency);
  const Eigen::Index blk = m.rows() / 2;
  Matrix t = Matrix::Zero(2 * blk, 2 * blk);
  t.topLeftCorner(blk, blk).setIdentity();
  t.bottomLeftCorner(blk, blk).setIdentity();
  t.bottomRightCorner(blk, blk) = -Matrix::Identity(blk, blk);
  return t * m * t;  // t is an involution
}

/// Closed-loop matrix of the observer law in [x; s; e], s = xhat - eta,
/// e = xhat - x.
inline Matrix observer_cascade(const LoopConfig& c) {
  using namespace syncnet;
  const SwitchingGraph graph = SwitchingGraph::constant(c.adjacency, 0.5, 2.0);
  const NetworkModel model(
      make_coupling_law(CouplingVariant::dynamic_output_observer, c.plant, graph, c.k, c.h),
      c.plant, graph);
  const Matrix m = model.system_matrix(0.0, c.adjacency);
  const Eigen::Index blk = m.rows() / 3;
  const Matrix id = Matrix::Identity(blk, blk);
  Matrix t = Matrix::Zero(3 * blk, 3 * blk);
  t.block(0, 0, blk, blk) = id;
  t.block(blk, blk, blk, blk) = -id;
  t.block(blk, 2 * blk, blk, blk) = id;
  t.block(2 * blk, 0, blk, blk) = -id;
  t.block(2 * blk, 2 * blk, blk, blk) = id;
  return t * m * t.inverse();
}

/// Largest deviation of the cascade matrices from the block structure
/// predicted for both dynamic laws.
inline double cascade_deviation(const LoopConfig& c) {
  using namespace syncnet;
  const int agents = static_cast<int>(c.adjacency.rows());
  const int n = c.plant.state_dim();
  const Eigen::Index blk = static_cast<Eigen::Index>(agents) * n;
  const Matrix ia = Matrix::Identity(agents, agents);
  const Matrix& a = c.plant.a();
  const Matrix hc = c.h * *c.plant.c();
  const Matrix s_block = kron(ia, a) - kron(laplacian(c.adjacency), Matrix(Matrix::Identity(n, n)));

  const Matrix d = dynamic_state_cascade(c);
  double worst = d.bottomLeftCorner(blk, blk).cwiseAbs().maxCoeff();
  worst = std::max(worst, max_diff(d.bottomRightCorner(blk, blk), s_block));

  const Matrix o = observer_cascade(c);
  worst = std::max(worst, o.block(blk, 0, 2 * blk, blk).cwiseAbs().maxCoeff());
  worst = std::max(worst, o.block(2 * blk, blk, blk, blk).cwiseAbs().maxCoeff());
  worst = std::max(worst, max_diff(o.block(2 * blk, 2 * blk, blk, blk), kron(ia, Matrix(a + hc))));
  worst = std::max(worst, max_diff(o.block(blk, blk, blk, blk), s_block));
  worst = std::max(worst, max_diff(o.block(blk, 2 * blk, blk, blk), kron(ia, hc)));
  return worst;
}

}  // namespace testing_support

#endif  // SYNCNET_TESTS_SUPPORT_HPP
