#include "syncnet/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

namespace {

constexpr int kOk = 0;
constexpr int kAssertionFailed = 1;
constexpr int kInputError = 2;

struct Job {
  std::string argument;
  std::optional<syncnet::Scenario> scenario;
  std::string report;
  int code = kOk;
};

void resolve(Job& job) {
  namespace fs = std::filesystem;
  try {
    if (fs::exists(job.argument)) {
      job.scenario = syncnet::load_scenario(job.argument);
    } else {
      job.scenario = syncnet::find_builtin(job.argument);
    }
  } catch (const syncnet::ScenarioError& e) {
    job.report = job.argument + ": input error at " + e.what() + "\n";
    job.code = kInputError;
  } catch (const std::out_of_range&) {
    job.report = job.argument + ": no such file or built-in scenario\n";
    job.code = kInputError;
  }
}

void execute(Job& job, const syncnet::RunOptions& options, const std::string& out) {
  std::ostringstream os;
  try {
    const syncnet::RunResult r = syncnet::run_scenario(*job.scenario, options);
    syncnet::write_artifacts(r, out);
    os << r.scenario.name << ": " << (r.exit_code == kOk ? "ok" : "FAILED");
    if (r.law) {
      os << " (" << syncnet::to_string(r.verdict.outcome) << ", final ratio "
         << r.verdict.final_ratio << ", fitted rate " << r.verdict.fitted_rate << ")";
    }
    os << '\n';
    for (const syncnet::AssertionResult& a : r.assertions) {
      if (!a.passed) os << "  failed " << a.name << ": " << a.detail << '\n';
    }
    job.code = r.exit_code;
  } catch (const std::invalid_argument& e) {
    os << job.scenario->name << ": input error: " << e.what() << '\n';
    job.code = kInputError;
  } catch (const std::exception& e) {
    os << job.scenario->name << ": error: " << e.what() << '\n';
    job.code = kAssertionFailed;
  }
  job.report = os.str();
}

int run(const std::vector<std::string>& targets, const syncnet::RunOptions& options,
        const std::string& out, int jobs) {
  std::vector<Job> work(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    work[i].argument = targets[i];
    resolve(work[i]);
  }
  std::set<std::string> names;
  for (Job& job : work) {
    if (!job.scenario) continue;
    if (!names.insert(job.scenario->name).second) {
      job.report = job.argument + ": input error: scenario name '" + job.scenario->name +
                   "' appears twice; outputs would collide\n";
      job.code = kInputError;
      job.scenario.reset();
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      if (work[i].scenario) execute(work[i], options, out);
    }
  };
  const auto count = static_cast<std::size_t>(std::max(1, jobs));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(count, work.size()); ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  int code = kOk;
  for (const Job& job : work) {
    (job.code == kInputError ? std::cerr : std::cout) << job.report;
    code = std::max(code, job.code);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synchronization scenarios for networks of identical linear systems"};
  app.require_subcommand(1);

  std::vector<std::string> targets;
  std::string out = ".";
  std::optional<double> step;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  CLI::App* run_cmd = app.add_subcommand("run", "Run scenario files or built-in scenarios");
  run_cmd->add_option("scenarios", targets, "Scenario files or built-in names")->required();
  run_cmd->add_option("--out", out, "Directory for trace and summary files");
  run_cmd->add_option("--step", step, "Override the integration step")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", seed, "Override the initial-condition seed");
  run_cmd->add_option("--jobs", jobs, "Scenarios run in parallel")->check(CLI::PositiveNumber);

  CLI::App* list_cmd = app.add_subcommand("list", "List built-in scenarios");

  std::string name;
  CLI::App* describe_cmd =
      app.add_subcommand("describe", "Print a built-in scenario in the file format");
  describe_cmd->add_option("name", name, "Built-in scenario name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  if (*list_cmd) {
    std::size_t width = 0;
    for (const auto& s : syncnet::builtin_scenarios()) width = std::max(width, s.name.size());
    for (const auto& s : syncnet::builtin_scenarios()) {
      std::cout << s.name << std::string(width + 2 - s.name.size(), ' ') << s.provenance << '\n';
    }
    return kOk;
  }
  if (*describe_cmd) {
    try {
      std::cout << syncnet::serialize(syncnet::find_builtin(name));
      return kOk;
    } catch (const std::out_of_range& e) {
      std::cerr << e.what() << '\n';
      return kInputError;
    }
  }
  syncnet::RunOptions options;
  options.step = step;
  options.seed = seed;
  return run(targets, options, out, jobs);
}
