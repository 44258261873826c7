#include "syncnet/matcore.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <sstream>

namespace syncnet {

namespace {

std::string describe_pbh_failure(Complex eigenvalue, int defect) {
  std::ostringstream os;
  os << "pair is not stabilizable: eigenvalue (" << eigenvalue.real() << ", "
     << eigenvalue.imag() << ") has PBH rank defect " << defect;
  return os.str();
}

bool in_region(Complex lambda, PbhRegion region, double tol) {
  switch (region) {
    case PbhRegion::all:
      return true;
    case PbhRegion::unstable_continuous:
      return lambda.real() >= -tol;
    case PbhRegion::unstable_discrete:
      return std::abs(lambda) >= 1.0 - tol;
  }
  return true;
}

// Orthonormal basis of the column space of m, columns ordered by singular
// value. Returns an n x 0 matrix when m is numerically zero.
Matrix orthonormal_range(const Matrix& m, double rel_tol) {
  if (m.cols() == 0 || m.rows() == 0) return Matrix(m.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return Matrix(m.rows(), 0);
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0)) ++rank;
  }
  return svd.matrixU().leftCols(rank);
}

void check_pair(const Eigen::Ref<const Matrix>& a,
                const Eigen::Ref<const Matrix>& b, const char* what) {
  require_square(a, what);
  if (b.rows() != a.rows()) {
    throw std::invalid_argument(std::string(what) +
                                ": input matrix row count must match state dimension");
  }
}

}  // namespace

UnstabilizableError::UnstabilizableError(Complex eigenvalue, int rank_defect)
    : NumericalError(describe_pbh_failure(eigenvalue, rank_defect)),
      eigenvalue_(eigenvalue),
      rank_defect_(rank_defect) {}

std::string to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::hurwitz:
      return "hurwitz";
    case StabilityClass::marginally_stable:
      return "marginally-stable";
    case StabilityClass::schur:
      return "schur";
    case StabilityClass::marginally_schur:
      return "marginally-schur";
    case StabilityClass::has_unstable_mode:
      return "has-unstable-mode";
  }
  return "unknown";
}

void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entry");
  }
}

void require_square(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(what) + ": matrix must be square");
  }
}

std::vector<Complex> eigenvalues(const Eigen::Ref<const Matrix>& a) {
  require_square(a, "eigenvalues");
  require_finite(a, "eigenvalues");
  if (a.rows() == 0) return {};
  Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigenvalues: QR iteration did not converge");
  }
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

StabilityClass classify(const std::vector<Complex>& eigs, TimeDomain domain,
                        double tol) {
  bool strictly_inside = true;
  bool within_boundary = true;
  for (const Complex& l : eigs) {
    const double v = domain == TimeDomain::continuous ? l.real() : std::abs(l);
    const double edge = domain == TimeDomain::continuous ? 0.0 : 1.0;
    if (v >= edge - tol) strictly_inside = false;
    if (v > edge + tol) within_boundary = false;
  }
  if (domain == TimeDomain::continuous) {
    if (strictly_inside) return StabilityClass::hurwitz;
    return within_boundary ? StabilityClass::marginally_stable
                           : StabilityClass::has_unstable_mode;
  }
  if (strictly_inside) return StabilityClass::schur;
  return within_boundary ? StabilityClass::marginally_schur
                         : StabilityClass::has_unstable_mode;
}

Spectrum classify_spectrum(const Eigen::Ref<const Matrix>& a, TimeDomain domain,
                           double tol) {
  Spectrum s;
  s.eigenvalues = eigenvalues(a);
  s.domain = domain;
  s.tolerance = tol;
  s.classification = classify(s.eigenvalues, domain, tol);
  return s;
}

double spectral_abscissa(const Eigen::Ref<const Matrix>& a) {
  double m = -std::numeric_limits<double>::infinity();
  for (const Complex& l : eigenvalues(a)) m = std::max(m, l.real());
  return m;
}

double spectral_radius(const Eigen::Ref<const Matrix>& a) {
  double m = 0.0;
  for (const Complex& l : eigenvalues(a)) m = std::max(m, std::abs(l));
  return m;
}

Matrix solve_lyapunov(const Eigen::Ref<const Matrix>& m,
                      const Eigen::Ref<const Matrix>& q) {
  require_square(m, "solve_lyapunov");
  require_square(q, "solve_lyapunov");
  if (m.rows() != q.rows()) {
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  }
  const Eigen::Index n = m.rows();
  if (n == 0) return Matrix(0, 0);

  // Resonance: the operator X -> m^T X + X m is singular exactly when two
  // eigenvalues of m sum to zero.
  const auto eigs = eigenvalues(m);
  const double scale = 1.0 + m.norm();
  for (std::size_t i = 0; i < eigs.size(); ++i) {
    for (std::size_t j = i; j < eigs.size(); ++j) {
      if (std::abs(eigs[i] + eigs[j]) <= 1e-10 * scale) {
        std::ostringstream os;
        os << "solve_lyapunov: resonance, eigenvalues (" << eigs[i].real()
           << "," << eigs[i].imag() << ") and (" << eigs[j].real() << ","
           << eigs[j].imag() << ") sum to zero";
        throw NumericalError(os.str());
      }
    }
  }

  const Matrix id = Matrix::Identity(n, n);
  const Matrix mt = m.transpose();
  // Column-major vec: vec(m^T X) = (I (x) m^T) vec X, vec(X m) = (m^T (x) I) vec X.
  const Matrix op = kron(id, mt) + kron(mt, id);
  const Matrix rhs_mat = -q;
  const Vector rhs = Eigen::Map<const Vector>(rhs_mat.data(), n * n);
  const Vector sol = op.fullPivLu().solve(rhs);
  Matrix x = Eigen::Map<const Matrix>(sol.data(), n, n);
  x = 0.5 * (x + x.transpose()).eval();

  const double residual = (mt * x + x * m + q).norm();
  if (residual > 1e-6 * std::max(q.norm(), 1e-300)) {
    throw NumericalError("solve_lyapunov: residual check failed");
  }
  return x;
}

int numerical_rank(const Eigen::Ref<const ComplexMatrix>& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0)) ++rank;
  }
  return rank;
}

int numerical_rank(const Eigen::Ref<const Matrix>& m, double rel_tol) {
  return numerical_rank(ComplexMatrix(m.cast<Complex>()), rel_tol);
}

PbhResult pbh_test(const Eigen::Ref<const Matrix>& a,
                   const Eigen::Ref<const Matrix>& b, PbhRegion region,
                   double tol) {
  check_pair(a, b, "pbh_test");
  const Eigen::Index n = a.rows();
  PbhResult result;
  ComplexMatrix pencil(n, n + b.cols());
  pencil.rightCols(b.cols()) = b.cast<Complex>();
  for (const Complex& lambda : eigenvalues(a)) {
    if (!in_region(lambda, region, tol)) continue;
    pencil.leftCols(n) = lambda * ComplexMatrix::Identity(n, n) - a.cast<Complex>();
    const int defect = static_cast<int>(n) - numerical_rank(pencil);
    if (defect > result.rank_defect) {
      result.passed = false;
      result.offending_eigenvalue = lambda;
      result.rank_defect = defect;
    }
  }
  return result;
}

PbhResult stabilizable(const Eigen::Ref<const Matrix>& a,
                       const Eigen::Ref<const Matrix>& b, TimeDomain domain,
                       double tol) {
  return pbh_test(a, b,
                  domain == TimeDomain::continuous ? PbhRegion::unstable_continuous
                                                   : PbhRegion::unstable_discrete,
                  tol);
}

PbhResult detectable(const Eigen::Ref<const Matrix>& a,
                     const Eigen::Ref<const Matrix>& c, TimeDomain domain,
                     double tol) {
  const Matrix at = a.transpose();
  const Matrix ct = c.transpose();
  return stabilizable(at, ct, domain, tol);
}

Matrix controllable_subspace(const Eigen::Ref<const Matrix>& a,
                             const Eigen::Ref<const Matrix>& b,
                             double rel_tol) {
  check_pair(a, b, "controllable_subspace");
  const Eigen::Index n = a.rows();
  const double scale = std::max({a.norm(), b.norm(), 1.0});
  Matrix basis = orthonormal_range(b / scale, rel_tol);
  // Grow the Krylov space one A-multiplication at a time until it stalls.
  for (Eigen::Index k = 0; k < n && basis.cols() < n && basis.cols() > 0; ++k) {
    Matrix stacked(n, 2 * basis.cols());
    stacked << basis, (a / scale) * basis;
    Matrix next = orthonormal_range(stacked, rel_tol);
    if (next.cols() == basis.cols()) break;
    basis = std::move(next);
  }
  return basis;
}

Matrix stabilizing_gain(const Eigen::Ref<const Matrix>& a,
                        const Eigen::Ref<const Matrix>& b, double tol) {
  check_pair(a, b, "stabilizing_gain");
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  if (const PbhResult pbh = stabilizable(a, b, TimeDomain::continuous, tol);
      !pbh.passed) {
    throw UnstabilizableError(*pbh.offending_eigenvalue, pbh.rank_defect);
  }
  Matrix gain = Matrix::Zero(m, n);
  if (n == 0 || spectral_abscissa(a) < -tol) return gain;

  const Matrix basis = controllable_subspace(a, b);
  const Eigen::Index r = basis.cols();
  const Matrix ac = basis.transpose() * a * basis;
  const Matrix bc = basis.transpose() * b;

  // Bass: with -(Ac + beta I) Hurwitz, (Ac + beta I) X + X (Ac + beta I)^T =
  // 2 Bc Bc^T has X > 0, and Kc = -Bc^T X^{-1} puts every closed-loop
  // eigenvalue on Re = -beta.
  double min_re = 0.0;
  for (const Complex& z : eigenvalues(ac)) min_re = std::min(min_re, z.real());
  const double beta = -min_re + 1.0;
  const Matrix shifted = ac + beta * Matrix::Identity(r, r);
  const Matrix x = solve_lyapunov(-shifted.transpose(), 2.0 * bc * bc.transpose());
  Eigen::LDLT<Matrix> ldlt(x);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError("stabilizing_gain: Bass Gramian factorization failed");
  }
  const Matrix kc = -ldlt.solve(bc).transpose();
  gain = kc * basis.transpose();

  if (spectral_abscissa(a + b * gain) >= 0.0) {
    throw NumericalError("stabilizing_gain: synthesized gain is not stabilizing");
  }
  return gain;
}

Matrix detector_gain(const Eigen::Ref<const Matrix>& a,
                     const Eigen::Ref<const Matrix>& c, double tol) {
  const Matrix at = a.transpose();
  const Matrix ct = c.transpose();
  return stabilizing_gain(at, ct, tol).transpose();
}

Matrix schur_stabilizing_gain(const Eigen::Ref<const Matrix>& a,
                              const Eigen::Ref<const Matrix>& b, double tol) {
  check_pair(a, b, "schur_stabilizing_gain");
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  if (const PbhResult pbh = stabilizable(a, b, TimeDomain::discrete, tol);
      !pbh.passed) {
    throw UnstabilizableError(*pbh.offending_eigenvalue, pbh.rank_defect);
  }
  Matrix gain = Matrix::Zero(m, n);
  if (n == 0 || spectral_radius(a) < 1.0 - tol) return gain;

  const Matrix basis = controllable_subspace(a, b);
  const Eigen::Index r = basis.cols();
  const Matrix ac = basis.transpose() * a * basis;
  const Matrix bc = basis.transpose() * b;

  const Eigen::Index horizon = r;
  Matrix gramian = Matrix::Zero(r, r);
  Matrix power = Matrix::Identity(r, r);
  for (Eigen::Index i = 0; i <= horizon; ++i) {
    gramian += power * bc * bc.transpose() * power.transpose();
    if (i < horizon) power = (ac * power).eval();
  }
  // power == Ac^h here.
  const Matrix kc =
      -bc.transpose() * power.transpose() * gramian.ldlt().solve(ac * power);
  gain = kc * basis.transpose();

  if (spectral_radius(a + b * gain) >= 1.0) {
    throw NumericalError("schur_stabilizing_gain: synthesized gain is not stabilizing");
  }
  return gain;
}

Matrix schur_detector_gain(const Eigen::Ref<const Matrix>& a,
                           const Eigen::Ref<const Matrix>& c, double tol) {
  const Matrix at = a.transpose();
  const Matrix ct = c.transpose();
  return schur_stabilizing_gain(at, ct, tol).transpose();
}

double condition_number(const Eigen::Ref<const Matrix>& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

}  // namespace syncnet
