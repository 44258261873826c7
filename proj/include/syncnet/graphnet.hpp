#ifndef SYNCNET_GRAPHNET_HPP
#define SYNCNET_GRAPHNET_HPP

#include "syncnet/matcore.hpp"

#include <optional>
#include <vector>

namespace syncnet {

/// One piece of a piecewise-constant schedule: the adjacency matrix is in
/// force from `start` until the next segment's start.
struct GraphSegment {
  double start = 0.0;
  Matrix adjacency;
};

/// Weighted digraph whose adjacency switches at known instants.
///
/// Orientation: adjacency(k, j) > 0 means agent k receives the state of
/// agent j, so j is a neighbor of k. Every nonzero weight lies in
/// [eta, gamma] and the diagonal is zero. With a period the schedule
/// repeats, and the last segment ends at first start + period; otherwise the
/// last segment extends forever.
class SwitchingGraph {
 public:
  SwitchingGraph(std::vector<GraphSegment> schedule, double eta, double gamma,
                 std::optional<double> period = std::nullopt);

  /// A single segment that never switches.
  static SwitchingGraph constant(Matrix adjacency, double eta, double gamma);
  /// Consecutive segments of the given durations starting at t = 0.
  static SwitchingGraph from_durations(const std::vector<double>& durations,
                                       std::vector<Matrix> adjacencies, double eta,
                                       double gamma, bool periodic);

  int node_count() const { return node_count_; }
  double eta() const { return eta_; }
  double gamma() const { return gamma_; }
  const std::optional<double>& period() const { return period_; }
  const std::vector<GraphSegment>& schedule() const { return schedule_; }
  double first_start() const { return schedule_.front().start; }

  /// End of segment i (first_start + period for the last periodic segment,
  /// +infinity for the last aperiodic one).
  double segment_end(std::size_t i) const;
  double segment_duration(std::size_t i) const;

  /// Index of the segment in force at t. Throws std::out_of_range before
  /// the first segment of an aperiodic schedule.
  std::size_t segment_index(double t) const;
  const Matrix& adjacency(double t) const;

  /// Switching instants strictly inside (t0, t1), in increasing order.
  std::vector<double> switching_times(double t0, double t1) const;

  /// t folded into [first_start, first_start + period) for periodic
  /// schedules; identity (with a domain check) otherwise.
  double local_time(double t) const;

 private:
  int node_count_ = 0;
  std::vector<GraphSegment> schedule_;
  double eta_;
  double gamma_;
  std::optional<double> period_;
};

struct Degrees {
  Vector in;   // row sums
  Vector out;  // column sums
};

Matrix laplacian(const Eigen::Ref<const Matrix>& adjacency);
Matrix laplacian(const SwitchingGraph& g, double t);

Degrees degrees(const Eigen::Ref<const Matrix>& adjacency);
Degrees degrees(const SwitchingGraph& g, double t);

bool is_balanced(const Eigen::Ref<const Matrix>& adjacency, double tol = 1e-12);
bool is_balanced(const SwitchingGraph& g, double t, double tol = 1e-12);
bool is_symmetric(const Eigen::Ref<const Matrix>& adjacency, double tol = 1e-12);

/// Every node whose information reaches all other nodes along neighbor
/// chains, i.e. every k such that each j has a path j -> ... -> k where each
/// step goes from a node to one of its neighbors (weight >= threshold).
std::vector<int> roots(const Eigen::Ref<const Matrix>& adjacency, double threshold);

struct Connectivity {
  bool connected = false;
  std::optional<int> root;
};

Connectivity connected(const Eigen::Ref<const Matrix>& adjacency, double threshold);
Connectivity connected_at(const SwitchingGraph& g, double t);

/// Second-smallest eigenvalue of (L + L^T) / 2.
double algebraic_connectivity(const Eigen::Ref<const Matrix>& adjacency);

struct ConnectivityReport {
  std::vector<bool> connected_now;  // per schedule segment
  std::vector<bool> balanced;
  std::vector<bool> symmetric;
  bool uniform = false;
  double horizon = 0.0;
  std::optional<int> root;
  double lambda2_min = 0.0;
};

/// Checks that every window [t, t + horizon] anchored at a segment start has
/// an integrated-adjacency graph connected to one common root.
ConnectivityReport uniformly_connected(const SwitchingGraph& g, double horizon);

/// Integral of the adjacency over [t0, t1].
Matrix integrated_adjacency(const SwitchingGraph& g, double t0, double t1);

}  // namespace syncnet

#endif  // SYNCNET_GRAPHNET_HPP
