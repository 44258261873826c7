#ifndef SYNCNET_SCENARIO_HPP
#define SYNCNET_SCENARIO_HPP

#include "syncnet/simkit.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace syncnet {

/// Raised for malformed scenario documents. `path()` names the offending
/// field, e.g. "plant.A[1]".
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct PlantSpec {
  PlantKind kind = PlantKind::continuous;
  Matrix a;  // continuous / discrete
  Matrix b;
  std::optional<Matrix> c;
  // Periodic plants: either tabulated samples over one period, or a rotating
  // frame A(t) = rate J + R(rate t) omega R(rate t)^T.
  std::optional<double> period;
  std::vector<Matrix> samples;
  std::optional<Matrix> omega;
  std::optional<double> rate;
};

struct GraphSpec {
  int nodes = 0;
  double eta = 1.0;
  double gamma = 1.0;
  bool periodic = true;
  /// Window length for the uniform connectivity check; defaults to the sum
  /// of segment durations.
  std::optional<double> horizon;
  std::vector<double> durations;
  std::vector<Matrix> weights;
};

struct CouplingSpec {
  CouplingVariant variant = CouplingVariant::dynamic_state;
  std::optional<Matrix> k;
  std::optional<Matrix> h;
  std::optional<Vector> epsilons;
};

struct InitialSpec {
  Vector x;
  std::optional<Vector> eta;
  std::optional<Vector> xhat;
};

/// Hypotheses a scenario may assert before simulating.
enum class Hypothesis {
  uniformly_connected,
  connected_balanced,  // every segment connected and balanced
  no_unstable_mode,
  stabilizable,
  detectable,
  b_invertible,
  passive,             // uses Expectations::passivity_p, or searches
  epsilons_valid,
  floquet_exponents    // exponents match eig(omega) within 1e-6
};

std::string to_string(Hypothesis h);
std::optional<Hypothesis> parse_hypothesis(std::string_view name);

struct Expectations {
  bool synchronized = true;
  SyncThresholds thresholds;
  std::optional<double> max_openloop_residual;
  std::vector<Hypothesis> hypotheses;
  std::optional<Matrix> passivity_p;
};

struct Scenario {
  std::string name;
  std::string provenance;
  PlantSpec plant;
  GraphSpec graph;
  CouplingSpec coupling;
  SimulationConfig simulation;
  std::optional<InitialSpec> initial;
  Expectations expect;
};

bool operator==(const Scenario& a, const Scenario& b);

Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& file);
/// Canonical JSON text; parse_scenario(serialize(s)) == s.
std::string serialize(const Scenario& s);
/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
std::string scenario_digest(const Scenario& s);

LinearPlant build_plant(const PlantSpec& spec);
SwitchingGraph build_graph(const GraphSpec& spec);

const std::vector<Scenario>& builtin_scenarios();
/// Throws std::out_of_range for an unknown name.
const Scenario& find_builtin(std::string_view name);

/// Rotating single directed edge on four nodes, one edge per quarter period.
/// Forward: segment k carries k -> k+1 (agent k+1 listens to agent k).
/// Reverse: segment k carries k+1 -> k.
enum class RingOrientation { forward, reverse };
GraphSpec rotating_edge_schedule(double period, RingOrientation orientation);

struct AssertionResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunOptions {
  std::optional<double> step;
  std::optional<std::uint64_t> seed;
};

struct RunResult {
  Scenario scenario;
  std::string digest;
  /// Empty when a hypothesis failed and the law was never assembled.
  std::optional<CouplingLaw> law;
  SimulationTrace trace;
  SyncVerdict verdict;
  std::vector<AssertionResult> assertions;
  int exit_code = 0;
};

/// Checks the listed hypotheses, simulates, assesses. Throws
/// std::invalid_argument when the scenario cannot be assembled into a
/// valid law (an input error, not an assertion failure).
RunResult run_scenario(const Scenario& s, const RunOptions& options = {});

std::string summary_json(const RunResult& r);
/// Writes <dir>/<name>.trace.csv and <dir>/<name>.summary.json.
void write_artifacts(const RunResult& r, const std::filesystem::path& dir);

}  // namespace syncnet

#endif  // SYNCNET_SCENARIO_HPP
