#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crashrepro/experiment.hpp"

namespace crashrepro {

class SuiteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A scenario file plus the reference trace stored next to it as <stem>.trace
// (canonical grammar). The case id and target frame come from the scenario.
SuiteEntry load_scenario_case(const std::filesystem::path& scenario_path,
                              std::size_t step_budget = kDefaultStepBudget);

// Script target directory holding manifest.yaml and reference.trace; the case
// id is the directory name.
SuiteEntry load_script_case(const std::filesystem::path& target_dir,
                            const std::optional<std::filesystem::path>& failed_scripts_dir = std::nullopt);

// Every *.scn with a sibling trace, and every subdirectory holding a
// manifest.yaml, sorted by case id. Throws SuiteError when nothing is found
// or any entry is malformed.
std::vector<SuiteEntry> load_suite(const std::filesystem::path& dir,
                                   const std::optional<std::filesystem::path>& output_dir = std::nullopt);

}  // namespace crashrepro
