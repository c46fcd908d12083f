#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "crashrepro/crash_case.hpp"
#include "crashrepro/genome.hpp"
#include "crashrepro/scenario.hpp"

namespace crashrepro {

inline constexpr std::uint64_t kMaxEnumeration = 10'000'000;

struct OracleVerdict {
  bool reachable = false;
  std::optional<Genome> witness;
  std::size_t witness_calls = 0;
  std::uint64_t candidates_tried = 0;
};

class EnumerationTooLarge : public std::runtime_error {
 public:
  explicit EnumerationTooLarge(std::uint64_t estimated)
      : std::runtime_error("enumeration of " + std::to_string(estimated) + " candidates exceeds the limit of " +
                           std::to_string(kMaxEnumeration)),
        estimated_size_(estimated) {}
  std::uint64_t estimated_size() const { return estimated_size_; }

 private:
  std::uint64_t estimated_size_;
};

// Number of call sequences of length 1..max_calls; saturates above the limit.
std::uint64_t enumeration_size(const Scenario& scenario, int max_calls);

// Exhaustive search over call sequences of increasing length. Within one
// length, sequences are ordered lexicographically by (routine index, argument
// tuple). Each sequence becomes a genome that constructs one object per type
// and binds arguments to constants. The first sequence that contains a call
// to the target routine and reproduces the crash at fitness 0 is the witness.
OracleVerdict oracle_enumerate(const Scenario& scenario, const CrashCase& crash, int max_calls,
                               std::size_t step_budget = kDefaultStepBudget);

}  // namespace crashrepro
