#ifndef SYNCNET_MATCORE_HPP
#define SYNCNET_MATCORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace syncnet {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Complex = std::complex<double>;
using ComplexMatrix = MatrixX<Complex>;

/// Raised when a numerical routine cannot produce a trustworthy answer
/// (non-convergence, singular systems, failed certificates).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by gain synthesis when an unstable mode is not controllable.
class UnstabilizableError : public NumericalError {
 public:
  UnstabilizableError(Complex eigenvalue, int rank_defect);

  Complex eigenvalue() const { return eigenvalue_; }
  int rank_defect() const { return rank_defect_; }

 private:
  Complex eigenvalue_;
  int rank_defect_;
};

enum class TimeDomain { continuous, discrete };

enum class StabilityClass {
  hurwitz,            // continuous: all Re < -tol
  marginally_stable,  // continuous: all Re <= tol, some Re > -tol
  schur,              // discrete: all |.| < 1 - tol
  marginally_schur,   // discrete: all |.| <= 1 + tol, some |.| > 1 - tol
  has_unstable_mode
};

std::string to_string(StabilityClass c);

struct Spectrum {
  std::vector<Complex> eigenvalues;
  StabilityClass classification = StabilityClass::has_unstable_mode;
  TimeDomain domain = TimeDomain::continuous;
  double tolerance = 1e-9;

  bool has_unstable_mode() const {
    return classification == StabilityClass::has_unstable_mode;
  }
  bool asymptotically_stable() const {
    return classification == StabilityClass::hurwitz ||
           classification == StabilityClass::schur;
  }
};

inline constexpr double kDefaultSpectralTol = 1e-9;

/// Throws std::invalid_argument if any entry is NaN or infinite.
void require_finite(const Eigen::Ref<const Matrix>& m, const char* what);
void require_square(const Eigen::Ref<const Matrix>& m, const char* what);

/// Kronecker product. Block (i, j) of the result is a(i, j) * b.
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> kron(const Eigen::MatrixBase<DerivedA>& a,
                                        const Eigen::MatrixBase<DerivedB>& b) {
  MatrixX<typename DerivedA::Scalar> out(a.rows() * b.rows(),
                                         a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

namespace detail {

// Degree-13 diagonal Pade approximant: exp(A) ~ (V - U)^{-1} (V + U).
template <typename Mat>
void pade13(const Mat& a, Mat& u, Mat& v) {
  using Scalar = typename Mat::Scalar;
  static constexpr long double b[] = {
      64764752532480000.L, 32382376266240000.L, 7771770303897600.L,
      1187353796428800.L,  129060195264000.L,   10559470521600.L,
      670442572800.L,      33522128640.L,       1323241920.L,
      40840800.L,          960960.L,            16380.L,
      182.L,               1.L};
  auto c = [](int i) { return static_cast<Scalar>(b[i]); };
  const auto n = a.rows();
  const Mat id = Mat::Identity(n, n);
  const Mat a2 = a * a;
  const Mat a4 = a2 * a2;
  const Mat a6 = a4 * a2;
  Mat tmp = c(13) * a6 + c(11) * a4 + c(9) * a2;
  Mat inner = a6 * tmp;
  inner += c(7) * a6 + c(5) * a4 + c(3) * a2 + c(1) * id;
  u.noalias() = a * inner;
  tmp = c(12) * a6 + c(10) * a4 + c(8) * a2;
  v.noalias() = a6 * tmp;
  v += c(6) * a6 + c(4) * a4 + c(2) * a2 + c(0) * id;
}

}  // namespace detail

/// e^{a t} by scaling and squaring with a fixed degree-13 Pade approximant.
template <typename Derived>
MatrixX<typename Derived::Scalar> expm(const Eigen::MatrixBase<Derived>& a,
                                       typename Derived::Scalar t) {
  using Scalar = typename Derived::Scalar;
  using Mat = MatrixX<Scalar>;
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("expm: matrix must be square");
  }
  const auto n = a.rows();
  if (n == 0) return Mat(0, 0);
  Mat scaled = a * t;
  // theta_13 from Higham (2005): the backward error of the degree-13
  // approximant stays below unit roundoff for ||A||_1 <= theta_13.
  constexpr double theta13 = 5.371920351148152;
  const Scalar norm1 = scaled.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    std::frexp(static_cast<double>(norm1 / theta13), &squarings);
    squarings = std::max(squarings, 0);
    scaled = scaled * std::ldexp(Scalar(1), -squarings);
  }
  Mat u(n, n), v(n, n);
  detail::pade13(scaled, u, v);
  Mat result = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) result = (result * result).eval();
  return result;
}

/// All eigenvalues with algebraic multiplicity. Throws NumericalError when
/// the QR iteration fails to converge.
std::vector<Complex> eigenvalues(const Eigen::Ref<const Matrix>& a);

/// Pure classification of a given eigenvalue list.
StabilityClass classify(const std::vector<Complex>& eigs, TimeDomain domain,
                        double tol = kDefaultSpectralTol);

Spectrum classify_spectrum(const Eigen::Ref<const Matrix>& a, TimeDomain domain,
                           double tol = kDefaultSpectralTol);

/// Largest real part (continuous) or modulus (discrete) over the spectrum.
double spectral_abscissa(const Eigen::Ref<const Matrix>& a);
double spectral_radius(const Eigen::Ref<const Matrix>& a);

/// Solves m^T X + X m = -q through the vectorized Kronecker system.
/// Throws NumericalError when some pair of eigenvalues of m sums to zero.
Matrix solve_lyapunov(const Eigen::Ref<const Matrix>& m,
                      const Eigen::Ref<const Matrix>& q);

/// Numerical rank by singular-value threshold rel_tol * sigma_max.
int numerical_rank(const Eigen::Ref<const ComplexMatrix>& m,
                   double rel_tol = 1e-9);
int numerical_rank(const Eigen::Ref<const Matrix>& m, double rel_tol = 1e-9);

/// Which eigenvalues the PBH test inspects.
enum class PbhRegion {
  all,                  // controllability / observability
  unstable_continuous,  // Re >= -tol: stabilizability / detectability
  unstable_discrete     // |.| >= 1 - tol
};

struct PbhResult {
  bool passed = true;
  std::optional<Complex> offending_eigenvalue;
  int rank_defect = 0;
};

/// Popov-Belevitch-Hautus rank test of rank[lambda I - a, b] = n over the
/// eigenvalues selected by region. Dual tests use (a^T, c^T).
PbhResult pbh_test(const Eigen::Ref<const Matrix>& a,
                   const Eigen::Ref<const Matrix>& b, PbhRegion region,
                   double tol = kDefaultSpectralTol);

PbhResult stabilizable(const Eigen::Ref<const Matrix>& a,
                       const Eigen::Ref<const Matrix>& b,
                       TimeDomain domain = TimeDomain::continuous,
                       double tol = kDefaultSpectralTol);
PbhResult detectable(const Eigen::Ref<const Matrix>& a,
                     const Eigen::Ref<const Matrix>& c,
                     TimeDomain domain = TimeDomain::continuous,
                     double tol = kDefaultSpectralTol);

/// Orthonormal basis (columns) of the controllable subspace of (a, b).
Matrix controllable_subspace(const Eigen::Ref<const Matrix>& a,
                             const Eigen::Ref<const Matrix>& b,
                             double rel_tol = 1e-9);

/// K such that a + b K is Hurwitz (Bass's shifted-Lyapunov construction on
/// the controllable part). Throws UnstabilizableError with the PBH witness.
Matrix stabilizing_gain(const Eigen::Ref<const Matrix>& a,
                        const Eigen::Ref<const Matrix>& b,
                        double tol = kDefaultSpectralTol);

/// H such that a + H c is Hurwitz, by duality.
Matrix detector_gain(const Eigen::Ref<const Matrix>& a,
                     const Eigen::Ref<const Matrix>& c,
                     double tol = kDefaultSpectralTol);

/// K such that a + b K is Schur: Kleinman's receding-horizon gain
/// -B^T (A^T)^h W^{-1} A^{h+1} on the controllable part, where W is the
/// (h+1)-step controllability Gramian.
Matrix schur_stabilizing_gain(const Eigen::Ref<const Matrix>& a,
                              const Eigen::Ref<const Matrix>& b,
                              double tol = kDefaultSpectralTol);
Matrix schur_detector_gain(const Eigen::Ref<const Matrix>& a,
                           const Eigen::Ref<const Matrix>& c,
                           double tol = kDefaultSpectralTol);

double condition_number(const Eigen::Ref<const Matrix>& m);

}  // namespace syncnet

#endif  // SYNCNET_MATCORE_HPP
