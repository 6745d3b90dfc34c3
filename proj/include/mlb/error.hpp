#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mlb {

/// Base class of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent dimensions or malformed input data.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A second-stage problem was infeasible at some first-stage decision.
class RecourseError : public Error {
 public:
  RecourseError(const std::string& what, int scenario)
      : Error(what), scenario_(scenario) {}
  int scenario() const { return scenario_; }

 private:
  int scenario_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// The heuristic never accepted a candidate, even after exhausting its retry
/// schedule. `trace` lists the (mu, nu) pairs that were tried.
class NoSolutionError : public Error {
 public:
  NoSolutionError(const std::string& what, std::vector<std::pair<double, double>> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<std::pair<double, double>>& trace() const { return trace_; }

 private:
  std::vector<std::pair<double, double>> trace_;
};

}  // namespace mlb
