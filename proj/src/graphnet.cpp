#include "syncnet/graphnet.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace syncnet {

namespace {

constexpr double kPositive = 1e-300;

void validate_adjacency(const Matrix& a, int n, double eta, double gamma,
                        std::size_t index) {
  auto fail = [index](const std::string& msg) {
    std::ostringstream os;
    os << "SwitchingGraph: segment " << index << ": " << msg;
    throw std::invalid_argument(os.str());
  };
  if (a.rows() != n || a.cols() != n) fail("adjacency must be N x N");
  require_finite(a, "SwitchingGraph");
  for (int k = 0; k < n; ++k) {
    if (a(k, k) != 0.0) fail("self-loop weight must be zero");
    for (int j = 0; j < n; ++j) {
      const double w = a(k, j);
      if (w == 0.0) continue;
      if (w < eta || w > gamma) {
        std::ostringstream os;
        os << "weight a(" << k << "," << j << ") = " << w
           << " outside {0} U [eta, gamma] = [" << eta << ", " << gamma << "]";
        fail(os.str());
      }
    }
  }
}

}  // namespace

SwitchingGraph::SwitchingGraph(std::vector<GraphSegment> schedule, double eta,
                               double gamma, std::optional<double> period)
    : schedule_(std::move(schedule)), eta_(eta), gamma_(gamma), period_(period) {
  if (schedule_.empty()) {
    throw std::invalid_argument("SwitchingGraph: schedule is empty");
  }
  if (!(eta > 0.0) || !(gamma >= eta) || !std::isfinite(gamma)) {
    throw std::invalid_argument("SwitchingGraph: require 0 < eta <= gamma < inf");
  }
  node_count_ = static_cast<int>(schedule_.front().adjacency.rows());
  for (std::size_t i = 0; i < schedule_.size(); ++i) {
    validate_adjacency(schedule_[i].adjacency, node_count_, eta_, gamma_, i);
    if (!std::isfinite(schedule_[i].start)) {
      throw std::invalid_argument("SwitchingGraph: non-finite start time");
    }
    if (i > 0 && !(schedule_[i].start > schedule_[i - 1].start)) {
      throw std::invalid_argument(
          "SwitchingGraph: segment start times must be strictly increasing");
    }
  }
  if (period_) {
    if (!(*period_ > 0.0) || !std::isfinite(*period_)) {
      throw std::invalid_argument("SwitchingGraph: period must be positive");
    }
    if (!(schedule_.back().start < schedule_.front().start + *period_)) {
      throw std::invalid_argument(
          "SwitchingGraph: last segment must start before the period ends");
    }
  }
}

SwitchingGraph SwitchingGraph::constant(Matrix adjacency, double eta, double gamma) {
  return SwitchingGraph({GraphSegment{0.0, std::move(adjacency)}}, eta, gamma);
}

SwitchingGraph SwitchingGraph::from_durations(const std::vector<double>& durations,
                                              std::vector<Matrix> adjacencies,
                                              double eta, double gamma,
                                              bool periodic) {
  if (durations.size() != adjacencies.size()) {
    throw std::invalid_argument("SwitchingGraph: durations/adjacency count mismatch");
  }
  std::vector<GraphSegment> schedule;
  double t = 0.0;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (!(durations[i] > 0.0)) {
      throw std::invalid_argument("SwitchingGraph: segment durations must be positive");
    }
    schedule.push_back({t, std::move(adjacencies[i])});
    t += durations[i];
  }
  return SwitchingGraph(std::move(schedule), eta, gamma,
                        periodic ? std::optional<double>(t) : std::nullopt);
}

double SwitchingGraph::local_time(double t) const {
  const double first = first_start();
  if (!period_) {
    if (t < first) {
      throw std::out_of_range("SwitchingGraph: time precedes the first segment");
    }
    return t;
  }
  double local = std::fmod(t - first, *period_);
  if (local < 0.0) local += *period_;
  return first + local;
}

double SwitchingGraph::segment_end(std::size_t i) const {
  if (i + 1 < schedule_.size()) return schedule_[i + 1].start;
  if (period_) return first_start() + *period_;
  return std::numeric_limits<double>::infinity();
}

double SwitchingGraph::segment_duration(std::size_t i) const {
  return segment_end(i) - schedule_.at(i).start;
}

std::size_t SwitchingGraph::segment_index(double t) const {
  const double local = local_time(t);
  auto it = std::upper_bound(
      schedule_.begin(), schedule_.end(), local,
      [](double value, const GraphSegment& s) { return value < s.start; });
  return static_cast<std::size_t>(std::distance(schedule_.begin(), it)) - 1;
}

const Matrix& SwitchingGraph::adjacency(double t) const {
  return schedule_[segment_index(t)].adjacency;
}

std::vector<double> SwitchingGraph::switching_times(double t0, double t1) const {
  std::vector<double> out;
  if (!(t1 > t0)) return out;
  if (!period_) {
    for (std::size_t i = 1; i < schedule_.size(); ++i) {
      const double s = schedule_[i].start;
      if (s > t0 && s < t1) out.push_back(s);
    }
    return out;
  }
  const double first = first_start();
  const double p = *period_;
  const auto cycle0 = static_cast<long long>(std::floor((t0 - first) / p));
  for (long long c = cycle0;; ++c) {
    const double base = first + static_cast<double>(c) * p;
    if (base >= t1) break;
    for (const GraphSegment& s : schedule_) {
      const double at = base + (s.start - first);
      if (at > t0 && at < t1) out.push_back(at);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Matrix laplacian(const Eigen::Ref<const Matrix>& adjacency) {
  require_square(adjacency, "laplacian");
  Matrix l = -adjacency;
  for (Eigen::Index k = 0; k < adjacency.rows(); ++k) {
    l(k, k) = adjacency.row(k).sum() - adjacency(k, k);
  }
  return l;
}

Matrix laplacian(const SwitchingGraph& g, double t) {
  return laplacian(g.adjacency(t));
}

Degrees degrees(const Eigen::Ref<const Matrix>& adjacency) {
  return {adjacency.rowwise().sum(), adjacency.colwise().sum().transpose()};
}

Degrees degrees(const SwitchingGraph& g, double t) { return degrees(g.adjacency(t)); }

bool is_balanced(const Eigen::Ref<const Matrix>& adjacency, double tol) {
  const Degrees d = degrees(adjacency);
  return ((d.in - d.out).cwiseAbs().array() <= tol).all();
}

bool is_balanced(const SwitchingGraph& g, double t, double tol) {
  return is_balanced(g.adjacency(t), tol);
}

bool is_symmetric(const Eigen::Ref<const Matrix>& adjacency, double tol) {
  return (adjacency - adjacency.transpose()).cwiseAbs().maxCoeff() <= tol;
}

std::vector<int> roots(const Eigen::Ref<const Matrix>& adjacency, double threshold) {
  const auto n = static_cast<int>(adjacency.rows());
  std::vector<int> out;
  for (int root = 0; root < n; ++root) {
    std::vector<bool> reached(n, false);
    reached[root] = true;
    int count = 1;
    std::queue<int> frontier;
    frontier.push(root);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (int i = 0; i < n; ++i) {
        if (!reached[i] && adjacency(i, u) >= threshold) {
          reached[i] = true;
          ++count;
          frontier.push(i);
        }
      }
    }
    if (count == n) out.push_back(root);
  }
  return out;
}

Connectivity connected(const Eigen::Ref<const Matrix>& adjacency, double threshold) {
  const auto r = roots(adjacency, threshold);
  if (r.empty()) return {false, std::nullopt};
  return {true, r.front()};
}

Connectivity connected_at(const SwitchingGraph& g, double t) {
  return connected(g.adjacency(t), g.eta());
}

double algebraic_connectivity(const Eigen::Ref<const Matrix>& adjacency) {
  if (adjacency.rows() < 2) return 0.0;
  const Matrix l = laplacian(adjacency);
  const Matrix sym = 0.5 * (l + l.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(1);
}

Matrix integrated_adjacency(const SwitchingGraph& g, double t0, double t1) {
  const int n = g.node_count();
  Matrix total = Matrix::Zero(n, n);
  if (!(t1 > t0)) return total;
  std::vector<double> cuts{t0};
  for (double s : g.switching_times(t0, t1)) cuts.push_back(s);
  cuts.push_back(t1);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += (cuts[i + 1] - cuts[i]) * g.adjacency(0.5 * (cuts[i] + cuts[i + 1]));
  }
  return total;
}

ConnectivityReport uniformly_connected(const SwitchingGraph& g, double horizon) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("uniformly_connected: horizon must be positive");
  }
  ConnectivityReport report;
  report.horizon = horizon;
  const int n = g.node_count();

  report.lambda2_min = std::numeric_limits<double>::infinity();
  for (const GraphSegment& s : g.schedule()) {
    report.connected_now.push_back(connected(s.adjacency, g.eta()).connected);
    report.balanced.push_back(is_balanced(s.adjacency));
    report.symmetric.push_back(is_symmetric(s.adjacency));
    report.lambda2_min =
        std::min(report.lambda2_min, algebraic_connectivity(s.adjacency));
  }

  std::vector<bool> common(n, true);
  for (const GraphSegment& s : g.schedule()) {
    const Matrix window = integrated_adjacency(g, s.start, s.start + horizon);
    std::vector<bool> here(n, false);
    for (int r : roots(window, kPositive)) here[r] = true;
    for (int k = 0; k < n; ++k) common[k] = common[k] && here[k];
  }
  for (int k = 0; k < n; ++k) {
    if (common[k]) {
      report.uniform = true;
      report.root = k;
      break;
    }
  }
  return report;
}

}  // namespace syncnet
