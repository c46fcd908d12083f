#include "crashrepro/script_backend.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstring>
#include <set>
#include <thread>

#include "crashrepro/io.hpp"
#include "json.hpp"
#include "yaml_support.hpp"

extern char** environ;

namespace crashrepro {

namespace {

constexpr std::string_view kTracebackHeader = "Traceback (most recent call last):";

bool is_python_identifier(const std::string& s) {
  static const std::set<std::string> keywords = {
      "False", "None",   "True",    "and",      "as",   "assert", "async",  "await",    "break", "class",
      "continue", "def", "del",     "elif",     "else", "except", "finally", "for",     "from",  "global",
      "if",    "import", "in",      "is",       "lambda", "nonlocal", "not", "or",       "pass",  "raise",
      "return", "try",   "while",   "with",     "yield"};
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  if (!std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; })) {
    return false;
  }
  return !keywords.contains(s);
}

std::string python_literal(const Domain& d, std::int64_t value) {
  switch (d.kind) {
    case DomainKind::boolean:
      return value != 0 ? "True" : "False";
    case DomainKind::enumeration:
      return nlohmann::json(d.labels.at(static_cast<std::size_t>(value))).dump();
    case DomainKind::integer:
      break;
  }
  return std::to_string(value);
}

class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "crashrepro-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("cannot create temporary directory");
    path_ = pattern;
  }
  ~TempDir() {
    if (!keep_) {
      std::error_code ec;
      std::filesystem::remove_all(path_, ec);
    }
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

  // Copies the directory under `dir` before it is deleted.
  void retain_in(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::filesystem::copy(path_, dir / path_.filename(), std::filesystem::copy_options::recursive);
  }

 private:
  std::filesystem::path path_;
  bool keep_ = false;
};

struct ProcessResult {
  bool timed_out = false;
  int exit_code = 0;
};

ProcessResult run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                          const std::filesystem::path& stdout_path, const std::filesystem::path& stderr_path,
                          std::chrono::milliseconds timeout) {
  std::vector<std::string> env_storage;
  for (char** e = environ; *e != nullptr; ++e) {
    if (std::strncmp(*e, "PYTHONDONTWRITEBYTECODE=", 24) != 0) env_storage.emplace_back(*e);
  }
  env_storage.emplace_back("PYTHONDONTWRITEBYTECODE=1");
  std::vector<char*> envp;
  for (auto& s : env_storage) envp.push_back(s.data());
  envp.push_back(nullptr);
  std::vector<std::string> args_storage = argv;
  std::vector<char*> args;
  for (auto& s : args_storage) args.push_back(s.data());
  args.push_back(nullptr);

  int out_fd = ::open(stdout_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600);
  int err_fd = ::open(stderr_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600);
  std::array<int, 2> status_pipe{-1, -1};
  if (out_fd < 0 || err_fd < 0 || ::pipe2(status_pipe.data(), O_CLOEXEC) != 0) {
    if (out_fd >= 0) ::close(out_fd);
    if (err_fd >= 0) ::close(err_fd);
    throw std::runtime_error("cannot set up subprocess i/o");
  }
  const std::string cwd_str = cwd.string();

  pid_t pid = ::fork();
  if (pid < 0) {
    ::close(out_fd);
    ::close(err_fd);
    ::close(status_pipe[0]);
    ::close(status_pipe[1]);
    throw std::runtime_error("fork failed");
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(out_fd, STDOUT_FILENO);
    ::dup2(err_fd, STDERR_FILENO);
    int null_fd = ::open("/dev/null", O_RDONLY);
    if (null_fd >= 0) ::dup2(null_fd, STDIN_FILENO);
    if (::chdir(cwd_str.c_str()) == 0) ::execvpe(args[0], args.data(), envp.data());
    int err = errno;
    [[maybe_unused]] auto n = ::write(status_pipe[1], &err, sizeof err);
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(out_fd);
  ::close(err_fd);
  ::close(status_pipe[1]);
  int exec_errno = 0;
  ssize_t got = ::read(status_pipe[0], &exec_errno, sizeof exec_errno);
  ::close(status_pipe[0]);
  if (got == static_cast<ssize_t>(sizeof exec_errno)) {
    ::waitpid(pid, nullptr, 0);
    throw InterpreterMissing("cannot start '" + argv[0] + "': " + std::strerror(exec_errno));
  }

  ProcessResult result;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  auto pause = std::chrono::microseconds(200);
  int status = 0;
  for (;;) {
    pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (done < 0 && errno != EINTR) throw std::runtime_error("waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      result.timed_out = true;
      return result;
    }
    std::this_thread::sleep_for(pause);
    pause = std::min(pause * 2, std::chrono::microseconds(5000));
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return result;
}

}  // namespace

ScriptTarget load_script_target(const std::filesystem::path& manifest_path) {
  const std::string source = manifest_path.string();
  YAML::Node root;
  try {
    root = YAML::LoadFile(source);
  } catch (const YAML::Exception& e) {
    throw ManifestError(source + ": " + e.what());
  }
  try {
    if (detail::require_scalar(root, "format_version", source) != "1") throw ManifestError(source + ": unsupported format_version");
    ScriptTarget target;
    target.module = detail::require_scalar(root, "module", source);
    if (!is_python_identifier(target.module)) throw ManifestError(source + ": module must be an identifier");
    if (root["interpreter"]) {
      target.interpreter.clear();
      std::istringstream words(root["interpreter"].as<std::string>());
      for (std::string w; words >> w;) target.interpreter.push_back(w);
      if (target.interpreter.empty()) throw ManifestError(source + ": empty interpreter command");
    }
    std::filesystem::path module_file = root["module_path"] ? root["module_path"].as<std::string>() : target.module + ".py";
    if (module_file.is_relative()) module_file = manifest_path.parent_path() / module_file;
    target.module_path = std::filesystem::absolute(module_file).lexically_normal();
    if (target.module_path.stem() != target.module) throw ManifestError(source + ": module_path stem must equal module");
    if (root["grammar"]) {
      auto grammar = grammar_from_name(root["grammar"].as<std::string>());
      if (!grammar) throw ManifestError(source + ": unknown grammar");
      target.grammar = *grammar;
    }
    if (root["timeout_ms"]) {
      target.timeout = std::chrono::milliseconds(root["timeout_ms"].as<long>());
      if (target.timeout.count() <= 0) throw ManifestError(source + ": timeout_ms must be positive");
    }
    if (root["target_frame"]) {
      target.target_frame = root["target_frame"].as<int>();
      if (target.target_frame < 1) throw ManifestError(source + ": target_frame must be >= 1");
    }
    detail::parse_api_surface(root, source, "", target.module, target.api);
    for (auto& sig : target.api.routines) {
      sig.unit_path = target.module;
      sig.file = target.module_path.filename().string();
    }
    return target;
  } catch (const YAML::Exception& e) {
    throw ManifestError(source + ": " + e.what());
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const ManifestError*>(&e)) throw;
    throw ManifestError(e.what());
  }
}

std::string render_script(const Genome& genome, const ScriptTarget& target) {
  const Api& api = target.api;
  std::string out = "# generated by crashrepro\nimport sys\nsys.path.insert(0, " +
                    nlohmann::json(target.module_path.parent_path().string()).dump() + ")\nimport " + target.module + "\n\n";
  auto check = [](const std::string& name) {
    if (!is_python_identifier(name)) throw UnrenderableStatement("'" + name + "' is not a valid identifier");
    return name;
  };
  for (std::size_t i = 0; i < genome.size(); ++i) {
    const Statement& s = genome.statements[i];
    const std::string slot = "s" + std::to_string(i);
    switch (s.kind) {
      case StatementKind::construct:
        out += slot + " = " + target.module + "." + check(api.types.at(s.type).name) + "()\n";
        break;
      case StatementKind::set_value:
        out += slot + " = " + python_literal(api.domains.at(s.type), s.value) + "\n";
        break;
      case StatementKind::invoke: {
        const std::string& name = check(api.routines.at(s.routine).name);
        if (s.receiver != kNoSlot) {
          out += "s" + std::to_string(s.receiver) + "." + name + "(";
        } else {
          out += target.module + "." + name + "(";
        }
        for (std::size_t a = 0; a < s.args.size(); ++a) out += (a ? ", s" : "s") + std::to_string(s.args[a]);
        out += ")\n";
        break;
      }
    }
  }
  return out;
}

StackTrace filter_frames(const StackTrace& trace, const std::string& module) {
  StackTrace out{trace.exception_type, trace.message, {}};
  std::copy_if(trace.frames.begin(), trace.frames.end(), std::back_inserter(out.frames),
               [&](const StackFrame& f) { return f.unit_path == module; });
  return out;
}

ExecutionOutcome execute_script(const std::string& script, const ScriptTarget& target) {
  TempDir dir;
  write_file_atomic(dir.path() / "test_case.py", script);
  std::vector<std::string> argv = target.interpreter;
  argv.push_back("test_case.py");
  const ProcessResult proc = run_process(argv, dir.path(), dir.path() / "stdout.txt", dir.path() / "stderr.txt", target.timeout);

  ExecutionOutcome outcome;
  outcome.entered.assign(target.api.routines.size(), false);
  outcome.steps_executed = 1;
  if (proc.timed_out) {
    outcome.kind = OutcomeKind::budget_exceeded;
    outcome.diagnostic = "timed out after " + std::to_string(target.timeout.count()) + " ms";
    return outcome;
  }
  if (proc.exit_code == 0) {
    outcome.kind = OutcomeKind::completed;
    return outcome;
  }

  const std::string raw = read_file(dir.path() / "stderr.txt");
  StackTrace trace;
  try {
    std::size_t start = raw.rfind(kTracebackHeader);
    if (start == std::string::npos) throw MalformedTrace(1, "no traceback header in output");
    trace = parse_trace(std::string_view(raw).substr(start), target.grammar);
  } catch (const std::exception& e) {
    if (target.failed_scripts_dir) dir.retain_in(*target.failed_scripts_dir);
    throw UnparsableTraceback(e.what(), raw);
  }
  trace = filter_frames(trace, target.module);
  if (trace.frames.empty()) {
    // The error surfaced outside the module under test (e.g. a bad call in the
    // generated script itself); the module did not crash.
    outcome.kind = OutcomeKind::completed;
    outcome.diagnostic = raw;
    return outcome;
  }
  for (const StackFrame& f : trace.frames) {
    if (auto r = target.api.find_routine(f.routine)) {
      outcome.entered[*r] = true;
      outcome.probes.push_back({*r, f.line, true, true, 0.0});
    }
  }
  std::sort(outcome.probes.begin(), outcome.probes.end(), [](const LineProbe& a, const LineProbe& b) {
    return std::tie(a.routine, a.line) < std::tie(b.routine, b.line);
  });
  outcome.probes.erase(std::unique(outcome.probes.begin(), outcome.probes.end()), outcome.probes.end());
  outcome.kind = OutcomeKind::crashed;
  outcome.trace = std::move(trace);
  return outcome;
}

CrashCase ScriptBackend::make_case(std::string id, const StackTrace& reference, int target_frame_level) const {
  return bind_case(std::move(id), filter_frames(reference, target_.module), target_frame_level, target_.api);
}

}  // namespace crashrepro
