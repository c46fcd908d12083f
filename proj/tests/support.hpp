#pragma once

#include <filesystem>
#include <string>

#include "crashrepro/rng.hpp"
#include "crashrepro/suite.hpp"
#include "crashrepro/trace.hpp"

namespace testing {

inline std::filesystem::path corpus_dir() { return CRASHREPRO_CORPUS_DIR; }
inline std::filesystem::path fixture_dir() { return CRASHREPRO_FIXTURE_DIR; }

inline crashrepro::SuiteEntry corpus_case(const std::string& stem) {
  return crashrepro::load_scenario_case(corpus_dir() / (stem + ".scn"));
}

inline std::string random_word(crashrepro::Rng& rng, std::size_t min_len, std::size_t max_len, bool allow_digit_start = false) {
  static const std::string first = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_$";
  static const std::string rest = first + "0123456789";
  const std::size_t n = min_len + rng.index(max_len - min_len + 1);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& pool = (i == 0 && !allow_digit_start) ? first : rest;
    out += pool[rng.index(pool.size())];
  }
  return out;
}

// A random trace inside the value space of `grammar`. Script-runtime frames
// derive their unit from the file stem, so those traces keep that relation.
inline crashrepro::StackTrace random_trace(crashrepro::Rng& rng, crashrepro::TraceGrammar grammar) {
  using crashrepro::StackFrame;
  crashrepro::StackTrace t;
  const std::size_t parts = 1 + rng.index(3);
  for (std::size_t i = 0; i < parts; ++i) t.exception_type += (i ? "." : "") + random_word(rng, 1, 8);
  if (rng.chance(0.7)) {
    static const std::string chars = "abc XYZ 09:.,()'\"-_/<>[]{}=+*&^%$#@!~`|;?\\";
    std::string msg;
    const std::size_t n = rng.index(30);
    for (std::size_t i = 0; i < n; ++i) msg += chars[rng.index(chars.size())];
    t.message = msg;
  }
  const std::size_t frames = 1 + rng.index(8);
  for (std::size_t i = 0; i < frames; ++i) {
    StackFrame f;
    f.routine = rng.chance(0.1) ? "<init>" : random_word(rng, 1, 10);
    f.line = static_cast<int>(1 + rng.index(rng.chance(0.5) ? 200 : 100000));
    if (grammar == crashrepro::TraceGrammar::canonical) {
      const std::size_t depth = 1 + rng.index(4);
      for (std::size_t d = 0; d < depth; ++d) f.unit_path += (d ? "." : "") + random_word(rng, 1, 8);
      f.file = random_word(rng, 1, 8) + (rng.chance(0.8) ? ".java" : ".kt");
    } else {
      f.unit_path = random_word(rng, 1, 10);
      f.file = f.unit_path + ".py";
    }
    t.frames.push_back(std::move(f));
  }
  return t;
}

}  // namespace testing
