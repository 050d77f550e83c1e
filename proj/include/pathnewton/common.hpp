#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace pathnewton {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A point left the effective domain of a cost function. `where` names the
// offending path/arc, `bound` the violated open bound.
class DomainViolation : public std::runtime_error {
public:
  DomainViolation(std::string where, double bound, double value)
      : std::runtime_error("domain violation at " + where + ": value " +
                           std::to_string(value) + " violates bound " +
                           std::to_string(bound)),
        where_(std::move(where)), bound_(bound), value_(value) {}

  const std::string& where() const { return where_; }
  double bound() const { return bound_; }
  double value() const { return value_; }

private:
  std::string where_;
  double bound_;
  double value_;
};

// A caller broke an API precondition (bad id, length mismatch, missing data).
class ContractViolation : public std::logic_error {
public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// A bug in the message protocol of the simulated network: a starved
// processor, an unexpected inbox, or a message aimed at a past round.
class ProtocolError : public std::logic_error {
public:
  explicit ProtocolError(const std::string& what) : std::logic_error(what) {}
};

// NaN/Inf appeared inside an iterative solve.
class NumericalBreakdown : public std::runtime_error {
public:
  NumericalBreakdown(const std::string& what, int iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  int iteration() const { return iteration_; }

private:
  int iteration_;
};

} // namespace pathnewton
