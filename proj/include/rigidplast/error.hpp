#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rigidplast {

/// Base of every exception thrown by the library. `module()` names the
/// component that raised it so the CLI can emit a machine-readable record.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// Argument outside the mathematical domain of an operation (e.g. the
/// support function evaluated off the deviatoric subspace).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("tensor_core", what) {}
};

class MeshError : public Error {
 public:
  explicit MeshError(const std::string& what) : Error("mesh_fem", what) {}
};

/// Should not happen for valid input; signals a broken invariant.
class InternalError : public Error {
 public:
  InternalError(std::string module, const std::string& what)
      : Error(std::move(module), what) {}
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::optional<int> line = std::nullopt,
              std::string field = {})
      : Error("cli_io", what), line_(line), field_(std::move(field)) {}

  std::optional<int> line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::optional<int> line_;
  std::string field_;
};

/// Alternating minimization did not reach the decrease tolerance.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> history,
                      std::optional<int> step = std::nullopt,
                      std::optional<double> epsilon = std::nullopt)
      : Error("evolution", what),
        history_(std::move(history)),
        step_(step),
        epsilon_(epsilon) {}

  const std::vector<double>& history() const noexcept { return history_; }
  std::optional<int> step() const noexcept { return step_; }
  std::optional<double> epsilon() const noexcept { return epsilon_; }

 private:
  std::vector<double> history_;
  std::optional<int> step_;
  std::optional<double> epsilon_;
};

/// A failure inside an evolution, tagged with where it happened.
class EvolutionError : public Error {
 public:
  EvolutionError(const std::string& what, std::optional<int> step,
                 std::optional<double> epsilon = std::nullopt,
                 std::string module = "evolution")
      : Error(std::move(module), what), step_(step), epsilon_(epsilon) {}

  std::optional<int> step() const noexcept { return step_; }
  std::optional<double> epsilon() const noexcept { return epsilon_; }

 private:
  std::optional<int> step_;
  std::optional<double> epsilon_;
};

class RateFitError : public Error {
 public:
  explicit RateFitError(const std::string& what) : Error("rigid_limit", what) {}
};

class ExampleError : public Error {
 public:
  explicit ExampleError(const std::string& what)
      : Error("examples_bench", what) {}
};

/// Reading or writing an artifact failed.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("cli_io", what) {}
};

}  // namespace rigidplast
