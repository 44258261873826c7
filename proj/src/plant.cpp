#include "syncnet/plant.hpp"

#include "syncnet/rk4.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace syncnet {

namespace {

Matrix rotation(double angle) {
  Matrix r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

long long steps_for(double span, double max_step) {
  return std::max(1LL, static_cast<long long>(std::ceil(span / max_step - 1e-9)));
}

}  // namespace

PeriodicMatrix PeriodicMatrix::from_samples(double period, std::vector<Matrix> samples) {
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw std::invalid_argument("PeriodicMatrix: period must be positive");
  }
  if (samples.empty()) throw std::invalid_argument("PeriodicMatrix: no samples");
  const auto n = samples.front().rows();
  for (const Matrix& s : samples) {
    if (s.rows() != n || s.cols() != n) {
      throw std::invalid_argument("PeriodicMatrix: samples must be square and equal-sized");
    }
    require_finite(s, "PeriodicMatrix");
  }
  PeriodicMatrix m;
  m.source_ = Source::samples;
  m.period_ = period;
  m.dim_ = static_cast<int>(n);
  m.samples_ = std::move(samples);
  return m;
}

PeriodicMatrix PeriodicMatrix::rotating_frame(Matrix omega, double rate) {
  if (omega.rows() != 2 || omega.cols() != 2) {
    throw std::invalid_argument("PeriodicMatrix: rotating frame needs a 2 x 2 omega");
  }
  require_finite(omega, "PeriodicMatrix");
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("PeriodicMatrix: rotation rate must be positive");
  }
  PeriodicMatrix m;
  m.source_ = Source::rotating_frame;
  m.period_ = 2.0 * std::numbers::pi / rate;
  m.dim_ = 2;
  m.omega_ = std::move(omega);
  m.rate_ = rate;
  return m;
}

PeriodicMatrix PeriodicMatrix::from_function(double period, int dim,
                                             std::function<Matrix(double)> fn) {
  if (!(period > 0.0)) throw std::invalid_argument("PeriodicMatrix: period must be positive");
  PeriodicMatrix m;
  m.source_ = Source::function;
  m.period_ = period;
  m.dim_ = dim;
  m.fn_ = std::move(fn);
  return m;
}

Matrix PeriodicMatrix::rotating_frame_q(double t) const {
  if (source_ != Source::rotating_frame) {
    throw std::logic_error("PeriodicMatrix: Q(t) is only known for rotating frames");
  }
  return rotation(rate_ * t);
}

Matrix PeriodicMatrix::operator()(double t) const {
  switch (source_) {
    case Source::function:
      return fn_(t);
    case Source::rotating_frame: {
      Matrix j(2, 2);
      j << 0.0, -1.0, 1.0, 0.0;
      const Matrix r = rotation(rate_ * t);
      return rate_ * j + r * omega_ * r.transpose();
    }
    case Source::samples: {
      const auto count = static_cast<double>(samples_.size());
      double phase = std::fmod(t, period_) / period_;
      if (phase < 0.0) phase += 1.0;
      const double pos = phase * count;
      auto i0 = static_cast<std::size_t>(std::floor(pos));
      if (i0 >= samples_.size()) i0 = samples_.size() - 1;
      const double frac = pos - static_cast<double>(i0);
      const std::size_t i1 = (i0 + 1) % samples_.size();
      return (1.0 - frac) * samples_[i0] + frac * samples_[i1];
    }
  }
  return {};
}

std::string to_string(PlantKind k) {
  switch (k) {
    case PlantKind::continuous:
      return "continuous";
    case PlantKind::discrete:
      return "discrete";
    case PlantKind::periodic:
      return "periodic";
  }
  return "unknown";
}

LinearPlant::LinearPlant(PlantKind kind, Matrix a, std::optional<PeriodicMatrix> ap,
                         Matrix b, std::optional<Matrix> c)
    : kind_(kind), a_(std::move(a)), a_periodic_(std::move(ap)), b_(std::move(b)),
      c_(std::move(c)) {
  const Eigen::Index n = kind_ == PlantKind::periodic ? a_periodic_->dim() : a_.rows();
  if (kind_ != PlantKind::periodic) {
    require_square(a_, "LinearPlant A");
    require_finite(a_, "LinearPlant A");
  }
  require_finite(b_, "LinearPlant B");
  if (b_.rows() != n) {
    throw std::invalid_argument("LinearPlant: B must have as many rows as A");
  }
  if (c_) {
    require_finite(*c_, "LinearPlant C");
    if (c_->cols() != n) {
      throw std::invalid_argument("LinearPlant: C must have as many columns as A");
    }
  }
}

LinearPlant LinearPlant::continuous(Matrix a, Matrix b, std::optional<Matrix> c) {
  return LinearPlant(PlantKind::continuous, std::move(a), std::nullopt, std::move(b),
                     std::move(c));
}

LinearPlant LinearPlant::discrete(Matrix a, Matrix b, std::optional<Matrix> c) {
  return LinearPlant(PlantKind::discrete, std::move(a), std::nullopt, std::move(b),
                     std::move(c));
}

LinearPlant LinearPlant::periodic(PeriodicMatrix a, Matrix b, std::optional<Matrix> c) {
  return LinearPlant(PlantKind::periodic, Matrix(), std::move(a), std::move(b),
                     std::move(c));
}

const Matrix& LinearPlant::a() const {
  if (kind_ == PlantKind::periodic) {
    throw std::logic_error("LinearPlant: periodic plant has no constant A");
  }
  return a_;
}

Matrix LinearPlant::a_at(double t) const {
  return kind_ == PlantKind::periodic ? (*a_periodic_)(t) : a_;
}

const PeriodicMatrix& LinearPlant::a_periodic() const {
  if (!a_periodic_) throw std::logic_error("LinearPlant: plant is not periodic");
  return *a_periodic_;
}

Matrix LinearPlant::output_matrix() const {
  return c_ ? *c_ : Matrix(Matrix::Identity(state_dim(), state_dim()));
}

std::vector<Complex> floquet_exponents(const std::vector<Complex>& multipliers,
                                       double period) {
  std::vector<Complex> out;
  out.reserve(multipliers.size());
  for (const Complex& mu : multipliers) {
    // std::arg returns values in [-pi, pi]; fold -pi onto pi.
    double angle = std::arg(mu);
    if (angle <= -std::numbers::pi) angle = std::numbers::pi;
    out.emplace_back(std::log(std::abs(mu)) / period, angle / period);
  }
  return out;
}

FloquetData monodromy(const LinearPlant& p, double step) {
  if (p.kind() != PlantKind::periodic) {
    throw std::invalid_argument("monodromy: plant is not periodic");
  }
  const PeriodicMatrix& a = p.a_periodic();
  const double period = a.period();
  if (!(step > 0.0)) throw std::invalid_argument("monodromy: step must be positive");
  const double ratio = period / step;
  const auto count = static_cast<long long>(std::llround(ratio));
  if (count < 1 || std::abs(ratio - static_cast<double>(count)) > 1e-9 * ratio) {
    throw std::invalid_argument("monodromy: step must divide the period");
  }
  const double h = period / static_cast<double>(count);
  const int n = a.dim();
  auto rhs = [&a](double t, const Matrix& phi) -> Matrix { return a(t) * phi; };

  FloquetData out;
  out.period = period;
  const long long stride = std::max(1LL, count / 64);
  Matrix phi = Matrix::Identity(n, n);
  std::vector<Matrix> phis{phi};
  out.q_times.push_back(0.0);
  for (long long i = 0; i < count; ++i) {
    phi = rk4_step(rhs, static_cast<double>(i) * h, phi, h);
    if ((i + 1) % stride == 0 && i + 1 < count) {
      out.q_times.push_back(static_cast<double>(i + 1) * h);
      phis.push_back(phi);
    }
  }
  out.monodromy = phi;
  out.multipliers = eigenvalues(phi);
  out.exponents = floquet_exponents(out.multipliers, period);

  bool real_log = true;
  for (const Complex& mu : out.multipliers) {
    if (std::abs(mu.imag()) <= 1e-12 * std::abs(mu) && mu.real() <= 0.0) real_log = false;
  }
  if (real_log) {
    const Matrix omega = Matrix(phi.log()) / period;
    if (omega.allFinite()) {
      out.omega = omega;
      for (std::size_t i = 0; i < phis.size(); ++i) {
        out.q_samples.push_back(phis[i] * expm(omega, -out.q_times[i]));
      }
    }
  }
  if (!out.omega) out.q_times.clear();
  return out;
}

Matrix transition(const LinearPlant& p, double t0, double t1, double max_step) {
  const int n = p.state_dim();
  switch (p.kind()) {
    case PlantKind::continuous:
      return expm(p.a(), t1 - t0);
    case PlantKind::discrete: {
      const long long k = std::llround(t1 - t0);
      if (k < 0) throw std::invalid_argument("transition: negative discrete span");
      Matrix out = Matrix::Identity(n, n);
      for (long long i = 0; i < k; ++i) out = (p.a() * out).eval();
      return out;
    }
    case PlantKind::periodic: {
      const PeriodicMatrix& a = p.a_periodic();
      auto rhs = [&a](double t, const Matrix& phi) -> Matrix { return a(t) * phi; };
      return rk4_integrate(rhs, t0, t1, Matrix(Matrix::Identity(n, n)),
                           steps_for(std::abs(t1 - t0), max_step));
    }
  }
  return {};
}

HypothesisReport check_hypotheses(const LinearPlant& p, double tol) {
  HypothesisReport r;
  const int n = p.state_dim();
  const Matrix& b = p.b();
  r.b_invertible = false;
  r.b_condition = std::numeric_limits<double>::infinity();
  if (b.rows() == b.cols()) {
    r.b_condition = condition_number(b);
    r.b_invertible = r.b_condition <= kMaxBCondition;
  }

  if (p.kind() == PlantKind::periodic) {
    const double period = p.a_periodic().period();
    FloquetData f = monodromy(p, period / 2000.0);
    r.spectrum.eigenvalues = f.exponents;
    r.spectrum.domain = TimeDomain::continuous;
    r.spectrum.tolerance = tol;
    r.spectrum.classification = classify(f.exponents, TimeDomain::continuous, tol);
    r.floquet = std::move(f);
    // Full-rank B makes every mode controllable; otherwise not assessed.
    if (numerical_rank(b) == n) r.stabilizable = PbhResult{};
    return r;
  }

  r.spectrum = classify_spectrum(p.a(), p.domain(), tol);
  r.stabilizable = stabilizable(p.a(), b, p.domain(), tol);
  if (p.c()) {
    r.detectable = detectable(p.a(), *p.c(), p.domain(), tol);
    const Matrix at = p.a().transpose();
    const Matrix ct = p.c()->transpose();
    r.observable = pbh_test(at, ct, PbhRegion::all, tol);
  }
  return r;
}

}  // namespace syncnet
