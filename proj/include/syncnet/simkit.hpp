#ifndef SYNCNET_SIMKIT_HPP
#define SYNCNET_SIMKIT_HPP

#include "syncnet/controllers.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace syncnet {

struct SimulationConfig {
  double t0 = 0.0;
  double t_end = 10.0;
  /// Upper bound on the integration step; intervals between switching
  /// instants are split into equal substeps no longer than this.
  double step = 1e-2;
  int record_every = 1;
  std::uint64_t seed = 1;
  /// Time between discrete updates.
  double sample_period = 1.0;
};

/// min(1e-3 (t_end - t0), 1e-2).
double default_step(double t0, double t_end);

inline constexpr double kOverflowGuard = 1e12;

struct SimulationTrace {
  int agents = 0;
  int n = 0;
  std::vector<double> times;
  std::vector<NetworkState> states;
  std::vector<double> disagreement;
  /// ||eta(t)||, empty when the law has no controller state.
  std::vector<double> controller_norm;
  std::string digest;
  bool diverged = false;
  std::string divergence_message;
};

/// Every coordinate of x, eta and xhat (as the law requires) sampled
/// uniformly from [-1, 1] with a 64-bit Mersenne Twister seeded by `seed`.
NetworkState random_initial_state(const NetworkModel& model, std::uint64_t seed,
                                  double t0 = 0.0);

/// Fixed-step RK4 with every switching instant on the grid.
SimulationTrace integrate(const NetworkModel& model, const NetworkState& init,
                          const SimulationConfig& cfg);
SimulationTrace integrate(const CouplingLaw& law, const LinearPlant& plant,
                          const SwitchingGraph& graph, const NetworkState& init,
                          const SimulationConfig& cfg);

/// Discrete stepping on t0 + k * sample_period.
SimulationTrace step_discrete(const NetworkModel& model, const NetworkState& init,
                              const SimulationConfig& cfg);
SimulationTrace step_discrete(const CouplingLaw& law, const LinearPlant& plant,
                              const SwitchingGraph& graph, const NetworkState& init,
                              const SimulationConfig& cfg);

/// Dispatches on the law's time domain.
SimulationTrace simulate(const NetworkModel& model, const NetworkState& init,
                         const SimulationConfig& cfg);

/// Least-squares slope of log(values) against times.
double fit_log_slope(std::span<const double> times, std::span<const double> values);

/// Slope of log disagreement over the tail half of the trace, ignoring
/// samples at the round-off floor (1e-12 relative to the state norm).
/// Returns -infinity when the disagreement is identically zero or has
/// reached the floor throughout the tail. Throws std::invalid_argument with
/// fewer than 10 positive samples.
double fit_rate(const SimulationTrace& trace);

/// Deviation of the terminal agent states from the open-loop motion of the
/// midpoint agent average, relative to 1 + ||average||.
double openloop_residual(const SimulationTrace& trace, const LinearPlant& plant,
                         double sample_period = 1.0);

struct SyncThresholds {
  double sync_ratio = 1e-3;
  double fail_ratio = 1e-1;
  double fail_rate = -1e-3;
};

enum class SyncOutcome { synchronized, not_synchronized, inconclusive };

std::string to_string(SyncOutcome o);

struct SyncVerdict {
  SyncOutcome outcome = SyncOutcome::inconclusive;
  bool synchronized = false;
  double fitted_rate = 0.0;
  double final_ratio = 0.0;
  double openloop_residual = 0.0;
};

SyncVerdict assess(const SimulationTrace& trace, const LinearPlant& plant,
                   const SyncThresholds& thresholds = {}, double sample_period = 1.0);

/// Header: time, x[k][i]..., eta[k][i]..., xhat[k][i]..., disagreement.
void write_trace_csv(std::ostream& os, const SimulationTrace& trace);

}  // namespace syncnet

#endif  // SYNCNET_SIMKIT_HPP
