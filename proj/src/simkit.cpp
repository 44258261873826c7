#include "syncnet/simkit.hpp"

#include "syncnet/rk4.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace syncnet {

namespace {

void validate(const SimulationConfig& cfg) {
  if (!(cfg.t_end > cfg.t0)) throw std::invalid_argument("SimulationConfig: t_end <= t0");
  if (!(cfg.step > 0.0)) throw std::invalid_argument("SimulationConfig: step must be > 0");
  if (cfg.record_every < 1) {
    throw std::invalid_argument("SimulationConfig: record_every must be >= 1");
  }
  if (!(cfg.sample_period > 0.0)) {
    throw std::invalid_argument("SimulationConfig: sample_period must be > 0");
  }
}

class Recorder {
 public:
  Recorder(const NetworkModel& model, SimulationTrace& trace)
      : model_(model), trace_(trace) {
    trace_.agents = model.agents();
    trace_.n = model.state_dim();
  }

  void record(double t, const Vector& packed) {
    NetworkState s = model_.unpack(t, packed);
    trace_.times.push_back(t);
    trace_.disagreement.push_back(disagreement(s.x, trace_.n));
    if (s.eta) trace_.controller_norm.push_back(s.eta->norm());
    trace_.states.push_back(std::move(s));
  }

  bool check_overflow(double t, const Vector& packed) {
    const double norm = packed.norm();
    if (std::isfinite(norm) && norm <= kOverflowGuard) return false;
    std::ostringstream os;
    os << "state norm " << norm << " exceeded the overflow guard " << kOverflowGuard
       << " at t = " << t;
    trace_.diverged = true;
    trace_.divergence_message = os.str();
    if (std::isfinite(norm)) record(t, packed);
    return true;
  }

 private:
  const NetworkModel& model_;
  SimulationTrace& trace_;
};

}  // namespace

double default_step(double t0, double t_end) {
  return std::min(1e-3 * (t_end - t0), 1e-2);
}

NetworkState random_initial_state(const NetworkModel& model, std::uint64_t seed,
                                  double t0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Eigen::Index block = static_cast<Eigen::Index>(model.agents()) * model.state_dim();
  auto draw = [&]() {
    Vector v(block);
    for (Eigen::Index i = 0; i < block; ++i) v(i) = unit(rng);
    return v;
  };
  NetworkState s;
  s.t = t0;
  s.x = draw();
  if (uses_eta(model.law().variant)) s.eta = draw();
  if (uses_xhat(model.law().variant)) s.xhat = draw();
  return s;
}

SimulationTrace integrate(const NetworkModel& model, const NetworkState& init,
                          const SimulationConfig& cfg) {
  validate(cfg);
  if (model.discrete()) throw std::invalid_argument("integrate: law is discrete");
  SimulationTrace trace;
  Recorder rec(model, trace);

  std::vector<double> cuts{cfg.t0};
  for (double s : model.graph().switching_times(cfg.t0, cfg.t_end)) cuts.push_back(s);
  cuts.push_back(cfg.t_end);

  Vector y = model.pack(init);
  rec.record(cfg.t0, y);
  long long counter = 0;
  for (std::size_t piece = 0; piece + 1 < cuts.size(); ++piece) {
    const double a = cuts[piece];
    const double b = cuts[piece + 1];
    const Matrix& adjacency = model.graph().adjacency(0.5 * (a + b));
    auto rhs = [&](double t, const Vector& v) -> Vector {
      return model.derivative(t, v, adjacency);
    };
    const auto m =
        std::max(1LL, static_cast<long long>(std::ceil((b - a) / cfg.step - 1e-9)));
    const double h = (b - a) / static_cast<double>(m);
    for (long long i = 0; i < m; ++i) {
      const double t = a + static_cast<double>(i) * h;
      y = rk4_step(rhs, t, y, h);
      const double t_next = i + 1 == m ? b : a + static_cast<double>(i + 1) * h;
      ++counter;
      if (rec.check_overflow(t_next, y)) return trace;
      const bool last = piece + 2 == cuts.size() && i + 1 == m;
      if (last || counter % cfg.record_every == 0) rec.record(t_next, y);
    }
  }
  return trace;
}

SimulationTrace integrate(const CouplingLaw& law, const LinearPlant& plant,
                          const SwitchingGraph& graph, const NetworkState& init,
                          const SimulationConfig& cfg) {
  return integrate(NetworkModel(law, plant, graph), init, cfg);
}

SimulationTrace step_discrete(const NetworkModel& model, const NetworkState& init,
                              const SimulationConfig& cfg) {
  validate(cfg);
  if (!model.discrete()) throw std::invalid_argument("step_discrete: law is continuous");
  check_epsilons(model.graph(), *model.law().epsilons);
  SimulationTrace trace;
  Recorder rec(model, trace);
  const auto steps = static_cast<long long>(
      std::llround((cfg.t_end - cfg.t0) / cfg.sample_period));
  Vector y = model.pack(init);
  rec.record(cfg.t0, y);
  for (long long k = 0; k < steps; ++k) {
    const double t = cfg.t0 + static_cast<double>(k) * cfg.sample_period;
    y = model.advance(t, y);
    const double t_next = cfg.t0 + static_cast<double>(k + 1) * cfg.sample_period;
    if (rec.check_overflow(t_next, y)) return trace;
    if (k + 1 == steps || (k + 1) % cfg.record_every == 0) rec.record(t_next, y);
  }
  return trace;
}

SimulationTrace step_discrete(const CouplingLaw& law, const LinearPlant& plant,
                              const SwitchingGraph& graph, const NetworkState& init,
                              const SimulationConfig& cfg) {
  return step_discrete(NetworkModel(law, plant, graph), init, cfg);
}

SimulationTrace simulate(const NetworkModel& model, const NetworkState& init,
                         const SimulationConfig& cfg) {
  return model.discrete() ? step_discrete(model, init, cfg) : integrate(model, init, cfg);
}

double fit_log_slope(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size() || times.size() < 2) {
    throw std::invalid_argument("fit_log_slope: need at least two paired samples");
  }
  const auto count = static_cast<double>(times.size());
  double mt = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(values[i] > 0.0)) throw std::invalid_argument("fit_log_slope: nonpositive value");
    mt += times[i];
    ml += std::log(values[i]);
  }
  mt /= count;
  ml /= count;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double dt = times[i] - mt;
    sxy += dt * (std::log(values[i]) - ml);
    sxx += dt * dt;
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_log_slope: degenerate time samples");
  return sxy / sxx;
}

double fit_rate(const SimulationTrace& trace) {
  const auto& d = trace.disagreement;
  const auto positive = std::count_if(d.begin(), d.end(), [](double v) { return v > 0.0; });
  if (positive == 0) return -std::numeric_limits<double>::infinity();
  if (positive < 10) {
    throw std::invalid_argument("fit_rate: need at least 10 samples with positive disagreement");
  }
  const double mid = 0.5 * (trace.times.front() + trace.times.back());
  std::vector<double> ts, vs;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (trace.times[i] < mid) continue;
    const double scale =
        i < trace.states.size() ? std::max(1.0, trace.states[i].x.norm()) : 1.0;
    if (d[i] > 1e-12 * scale) {
      ts.push_back(trace.times[i]);
      vs.push_back(d[i]);
    }
  }
  if (ts.size() < 2) return -std::numeric_limits<double>::infinity();
  return fit_log_slope(ts, vs);
}

double openloop_residual(const SimulationTrace& trace, const LinearPlant& plant,
                         double sample_period) {
  if (trace.states.size() < 2) {
    throw std::invalid_argument("openloop_residual: trace needs at least two samples");
  }
  const double mid = 0.5 * (trace.times.front() + trace.times.back());
  std::size_t ref = 0;
  while (ref + 1 < trace.times.size() && trace.times[ref] < mid) ++ref;
  const Vector mean = agent_mean(trace.states[ref].x, trace.n);
  const double t_ref = trace.times[ref];
  const double t_end = trace.times.back();

  Matrix flow;
  if (plant.kind() == PlantKind::discrete) {
    flow = transition(plant, 0.0, std::round((t_end - t_ref) / sample_period));
  } else {
    flow = transition(plant, t_ref, t_end);
  }
  const Vector target = flow * mean;
  const Vector& x = trace.states.back().x;
  double worst = 0.0;
  for (int k = 0; k < trace.agents; ++k) {
    worst = std::max(worst, (x.segment(k * trace.n, trace.n) - target).norm());
  }
  return worst / (1.0 + mean.norm());
}

std::string to_string(SyncOutcome o) {
  switch (o) {
    case SyncOutcome::synchronized:
      return "synchronized";
    case SyncOutcome::not_synchronized:
      return "not-synchronized";
    case SyncOutcome::inconclusive:
      return "inconclusive";
  }
  return "unknown";
}

SyncVerdict assess(const SimulationTrace& trace, const LinearPlant& plant,
                   const SyncThresholds& thresholds, double sample_period) {
  SyncVerdict v;
  const double d0 = trace.disagreement.front();
  v.final_ratio = d0 > 0.0 ? trace.disagreement.back() / d0 : 0.0;
  if (trace.diverged) {
    v.fitted_rate = std::numeric_limits<double>::infinity();
    v.final_ratio = std::numeric_limits<double>::infinity();
    v.openloop_residual = std::numeric_limits<double>::infinity();
    v.outcome = SyncOutcome::not_synchronized;
    return v;
  }
  v.fitted_rate = fit_rate(trace);
  v.openloop_residual = openloop_residual(trace, plant, sample_period);
  if (v.final_ratio <= thresholds.sync_ratio && v.fitted_rate < 0.0) {
    v.outcome = SyncOutcome::synchronized;
  } else if (v.final_ratio >= thresholds.fail_ratio ||
             v.fitted_rate >= thresholds.fail_rate) {
    v.outcome = SyncOutcome::not_synchronized;
  } else {
    v.outcome = SyncOutcome::inconclusive;
  }
  v.synchronized = v.outcome == SyncOutcome::synchronized;
  return v;
}

void write_trace_csv(std::ostream& os, const SimulationTrace& trace) {
  const bool has_eta = !trace.states.empty() && trace.states.front().eta.has_value();
  const bool has_xhat = !trace.states.empty() && trace.states.front().xhat.has_value();
  os << "time";
  auto header = [&](const char* name) {
    for (int k = 0; k < trace.agents; ++k) {
      for (int i = 0; i < trace.n; ++i) os << ',' << name << '[' << k << "][" << i << ']';
    }
  };
  header("x");
  if (has_eta) header("eta");
  if (has_xhat) header("xhat");
  os << ",disagreement\n";

  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t r = 0; r < trace.states.size(); ++r) {
    put(trace.times[r]);
    const NetworkState& s = trace.states[r];
    auto row = [&](const Vector& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        os << ',';
        put(v(i));
      }
    };
    row(s.x);
    if (has_eta) row(*s.eta);
    if (has_xhat) row(*s.xhat);
    os << ',';
    put(trace.disagreement[r]);
    os << '\n';
  }
}

}  // namespace syncnet
