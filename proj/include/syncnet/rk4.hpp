#ifndef SYNCNET_RK4_HPP
#define SYNCNET_RK4_HPP

namespace syncnet {

/// One classical fourth-order Runge-Kutta step of y' = f(t, y).
/// State must support +, and scalar *; f returns the same type.
template <typename State, typename Rhs>
State rk4_step(const Rhs& f, double t, const State& y, double h) {
  const State k1 = f(t, y);
  const State k2 = f(t + 0.5 * h, State(y + (0.5 * h) * k1));
  const State k3 = f(t + 0.5 * h, State(y + (0.5 * h) * k2));
  const State k4 = f(t + h, State(y + h * k3));
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Integrates over [t0, t1] with m equal substeps of length (t1 - t0) / m.
/// Substep times are t0 + i * h, so splitting an interval at a substep
/// boundary reproduces the same arithmetic.
template <typename State, typename Rhs>
State rk4_integrate(const Rhs& f, double t0, double t1, State y, long long m) {
  const double h = (t1 - t0) / static_cast<double>(m);
  for (long long i = 0; i < m; ++i) {
    y = rk4_step(f, t0 + static_cast<double>(i) * h, y, h);
  }
  return y;
}

}  // namespace syncnet

#endif  // SYNCNET_RK4_HPP
