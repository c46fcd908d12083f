#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "crashrepro/api.hpp"
#include "crashrepro/trace.hpp"

namespace crashrepro {

// A target trace, the 1-based frame level to reproduce, and the binding of
// that frame to a routine of the backend's Api.
struct CrashCase {
  std::string id;
  StackTrace trace;
  int target_frame_level = 1;
  std::size_t target_routine = 0;
  int target_line = 1;

  const StackFrame& target_frame() const { return trace.frames[static_cast<std::size_t>(target_frame_level) - 1]; }
};

class CaseBindingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

CrashCase bind_case(std::string id, StackTrace trace, int target_frame_level, const Api& api);

}  // namespace crashrepro
