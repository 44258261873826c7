#ifndef SYNCNET_PLANT_HPP
#define SYNCNET_PLANT_HPP

#include "syncnet/matcore.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace syncnet {

/// Periodic matrix function A(t) = A(t + period).
///
/// Three sources are supported: a uniform table of samples over one period
/// (linear interpolation, wrapping from the last sample back to the first),
/// the closed-form rotating-frame construction used to build plants with
/// known Floquet exponents, and an arbitrary callable for in-process use.
class PeriodicMatrix {
 public:
  enum class Source { samples, rotating_frame, function };

  static PeriodicMatrix from_samples(double period, std::vector<Matrix> samples);

  /// 2 x 2 plant A(t) = rate * J + R(rate t) omega R(rate t)^T with J the
  /// rotation generator. Its transition matrix from 0 is
  /// R(rate t) exp(omega t), so the characteristic exponents are the
  /// eigenvalues of omega whenever |Im| < rate / 2. Period 2 pi / rate.
  static PeriodicMatrix rotating_frame(Matrix omega, double rate);

  static PeriodicMatrix from_function(double period, int dim,
                                      std::function<Matrix(double)> fn);

  Matrix operator()(double t) const;
  double period() const { return period_; }
  int dim() const { return dim_; }
  Source source() const { return source_; }

  const std::vector<Matrix>& samples() const { return samples_; }
  const Matrix& omega() const { return omega_; }
  double rate() const { return rate_; }

  /// Q(t) = R(rate t) for the rotating-frame source.
  Matrix rotating_frame_q(double t) const;

 private:
  Source source_ = Source::samples;
  double period_ = 0.0;
  int dim_ = 0;
  std::vector<Matrix> samples_;
  Matrix omega_;
  double rate_ = 0.0;
  std::function<Matrix(double)> fn_;
};

enum class PlantKind { continuous, discrete, periodic };

std::string to_string(PlantKind k);

/// Identical agent model: continuous x' = A x + B u, discrete
/// x+ = A x + B u, or periodic x' = A(t) x + B u; optional output y = C x.
class LinearPlant {
 public:
  static LinearPlant continuous(Matrix a, Matrix b, std::optional<Matrix> c = {});
  static LinearPlant discrete(Matrix a, Matrix b, std::optional<Matrix> c = {});
  static LinearPlant periodic(PeriodicMatrix a, Matrix b, std::optional<Matrix> c = {});

  PlantKind kind() const { return kind_; }
  TimeDomain domain() const {
    return kind_ == PlantKind::discrete ? TimeDomain::discrete : TimeDomain::continuous;
  }
  int state_dim() const { return static_cast<int>(b_.rows()); }
  int input_dim() const { return static_cast<int>(b_.cols()); }
  /// p; equals n when C is absent (full state measured).
  int output_dim() const { return c_ ? static_cast<int>(c_->rows()) : state_dim(); }

  /// Constant A. Throws std::logic_error for periodic plants.
  const Matrix& a() const;
  Matrix a_at(double t) const;
  const PeriodicMatrix& a_periodic() const;
  const Matrix& b() const { return b_; }
  const std::optional<Matrix>& c() const { return c_; }
  /// C, or the identity when the full state is measured.
  Matrix output_matrix() const;

 private:
  LinearPlant(PlantKind kind, Matrix a, std::optional<PeriodicMatrix> ap, Matrix b,
              std::optional<Matrix> c);

  PlantKind kind_;
  Matrix a_;
  std::optional<PeriodicMatrix> a_periodic_;
  Matrix b_;
  std::optional<Matrix> c_;
};

struct FloquetData {
  double period = 0.0;
  Matrix monodromy;
  std::vector<Complex> multipliers;
  std::vector<Complex> exponents;
  /// Real logarithm of the monodromy divided by the period, when one exists
  /// (no multiplier on the closed negative real axis).
  std::optional<Matrix> omega;
  std::vector<double> q_times;
  std::vector<Matrix> q_samples;
};

/// Integrates Phi' = A(t) Phi, Phi(0) = I over one period with fixed RK4
/// steps. `step` must divide the period.
FloquetData monodromy(const LinearPlant& p, double step);

/// Principal-branch exponents log|mu| / T + i arg(mu) / T.
std::vector<Complex> floquet_exponents(const std::vector<Complex>& multipliers,
                                       double period);

/// Open-loop transition matrix from t0 to t1. Continuous: expm. Periodic:
/// RK4 with steps no longer than max_step. Discrete: A^(t1 - t0) with the
/// difference rounded to an integer count of steps.
Matrix transition(const LinearPlant& p, double t0, double t1, double max_step = 1e-3);

struct HypothesisReport {
  /// Spectrum of A, or of the Floquet exponents for periodic plants.
  Spectrum spectrum;
  std::optional<PbhResult> stabilizable;
  std::optional<PbhResult> detectable;
  std::optional<PbhResult> observable;
  bool b_invertible = false;
  double b_condition = 0.0;
  std::optional<FloquetData> floquet;

  bool no_unstable_mode() const { return !spectrum.has_unstable_mode(); }
};

inline constexpr double kMaxBCondition = 1e12;

HypothesisReport check_hypotheses(const LinearPlant& p,
                                  double tol = kDefaultSpectralTol);

}  // namespace syncnet

#endif  // SYNCNET_PLANT_HPP
