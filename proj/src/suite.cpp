#include "crashrepro/suite.hpp"

#include <algorithm>

#include "crashrepro/io.hpp"
#include "crashrepro/script_backend.hpp"

namespace crashrepro {

SuiteEntry load_scenario_case(const std::filesystem::path& scenario_path, std::size_t step_budget) {
  auto scenario = std::make_shared<const Scenario>(load_scenario(scenario_path));
  std::filesystem::path trace_path = scenario_path;
  trace_path.replace_extension(".trace");
  StackTrace trace = parse_trace(read_file(trace_path), TraceGrammar::canonical);
  CrashCase crash = bind_case(scenario->case_info.id, std::move(trace), scenario->case_info.target_frame, scenario->api);
  return {std::make_shared<ScenarioBackend>(std::move(scenario), step_budget), std::move(crash)};
}

SuiteEntry load_script_case(const std::filesystem::path& target_dir,
                            const std::optional<std::filesystem::path>& failed_scripts_dir) {
  ScriptTarget target = load_script_target(target_dir / "manifest.yaml");
  target.failed_scripts_dir = failed_scripts_dir;
  StackTrace reference = parse_trace(read_file(target_dir / "reference.trace"), target.grammar);
  auto backend = std::make_shared<ScriptBackend>(std::move(target));
  std::string id = target_dir.filename().string();
  CrashCase crash = backend->make_case(id, reference, backend->target().target_frame);
  return {std::move(backend), std::move(crash)};
}

std::vector<SuiteEntry> load_suite(const std::filesystem::path& dir, const std::optional<std::filesystem::path>& output_dir) {
  if (!std::filesystem::is_directory(dir)) throw SuiteError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> paths;
  for (const auto& item : std::filesystem::directory_iterator(dir)) paths.push_back(item.path());
  std::sort(paths.begin(), paths.end());

  std::vector<SuiteEntry> suite;
  for (const auto& path : paths) {
    try {
      if (path.extension() == ".scn") {
        std::filesystem::path trace = path;
        trace.replace_extension(".trace");
        if (!std::filesystem::exists(trace)) throw SuiteError("no reference trace " + trace.string());
        suite.push_back(load_scenario_case(path));
      } else if (std::filesystem::is_directory(path) && std::filesystem::exists(path / "manifest.yaml")) {
        std::optional<std::filesystem::path> failed;
        if (output_dir) failed = *output_dir / "runs" / path.filename() / "failed-scripts";
        suite.push_back(load_script_case(path, failed));
      }
    } catch (const SuiteError&) {
      throw;
    } catch (const std::exception& e) {
      throw SuiteError(path.string() + ": " + e.what());
    }
  }
  if (suite.empty()) throw SuiteError("no (scenario, trace) pairs in " + dir.string());
  std::sort(suite.begin(), suite.end(), [](const SuiteEntry& a, const SuiteEntry& b) { return a.crash.id < b.crash.id; });
  for (std::size_t i = 1; i < suite.size(); ++i) {
    if (suite[i].crash.id == suite[i - 1].crash.id) throw SuiteError("duplicate case id " + suite[i].crash.id);
  }
  return suite;
}

}  // namespace crashrepro
