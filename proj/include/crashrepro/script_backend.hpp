#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crashrepro/backend.hpp"
#include "crashrepro/crash_case.hpp"
#include "crashrepro/trace.hpp"

namespace crashrepro {

// A module under test for an external scripting runtime, described by a
// manifest listing the only routines a generated script may call.
struct ScriptTarget {
  std::vector<std::string> interpreter{"python3"};
  std::string module;                    // import name
  std::filesystem::path module_path;     // absolute path of the module file
  Api api;
  TraceGrammar grammar = TraceGrammar::script_runtime;
  std::chrono::milliseconds timeout{5000};
  int target_frame = 1;  // frame level of the reference trace to reproduce
  // Scripts whose traceback cannot be parsed are kept here for triage.
  std::optional<std::filesystem::path> failed_scripts_dir;
};

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnrenderableStatement : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InterpreterMissing : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnparsableTraceback : public std::runtime_error {
 public:
  UnparsableTraceback(const std::string& reason, std::string raw)
      : std::runtime_error("unparsable traceback: " + reason), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

ScriptTarget load_script_target(const std::filesystem::path& manifest_path);

std::string render_script(const Genome& genome, const ScriptTarget& target);

// Runs `script` in a fresh subprocess and temporary directory.
ExecutionOutcome execute_script(const std::string& script, const ScriptTarget& target);

// Keeps only frames whose unit is the module under test.
StackTrace filter_frames(const StackTrace& trace, const std::string& module);

class ScriptBackend final : public ExecutionBackend {
 public:
  explicit ScriptBackend(ScriptTarget target) : target_(std::move(target)) {}

  const Api& api() const override { return target_.api; }
  ExecutionOutcome execute(const Genome& genome) const override {
    return execute_script(render_script(genome, target_), target_);
  }
  const ScriptTarget& target() const { return target_; }

  // Binds a reference traceback (already parsed) after dropping frames that
  // lie outside the module under test.
  CrashCase make_case(std::string id, const StackTrace& reference, int target_frame_level) const;

 private:
  ScriptTarget target_;
};

}  // namespace crashrepro
