#pragma once

#include <cstddef>
#include <memory>

#include "crashrepro/api.hpp"
#include "crashrepro/genome.hpp"
#include "crashrepro/outcome.hpp"
#include "crashrepro/scenario.hpp"

namespace crashrepro {

// Executes genomes against a system under test. Implementations must allow
// concurrent execute() calls on one instance.
class ExecutionBackend {
 public:
  virtual ~ExecutionBackend() = default;
  virtual const Api& api() const = 0;
  virtual ExecutionOutcome execute(const Genome& genome) const = 0;
};

class ScenarioBackend final : public ExecutionBackend {
 public:
  explicit ScenarioBackend(std::shared_ptr<const Scenario> scenario, std::size_t step_budget = kDefaultStepBudget)
      : scenario_(std::move(scenario)), step_budget_(step_budget) {}

  const Api& api() const override { return scenario_->api; }
  ExecutionOutcome execute(const Genome& genome) const override {
    return crashrepro::execute(*scenario_, genome, step_budget_);
  }
  const Scenario& scenario() const { return *scenario_; }

 private:
  std::shared_ptr<const Scenario> scenario_;
  std::size_t step_budget_;
};

}  // namespace crashrepro
