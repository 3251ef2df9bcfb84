#pragma once

#include <stdexcept>
#include <string>

namespace odl {

/// Base of every error raised by the library. `kind()` is used by the CLI
/// to pick an exit code.
class Error : public std::runtime_error {
 public:
  enum class Kind { config, ingestion, run, shape, corruption, contract, acquisition, undefined_term };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(Kind::config, w) {}
};

struct IngestionError : Error {
  explicit IngestionError(const std::string& w) : Error(Kind::ingestion, w) {}
};

struct RunError : Error {
  explicit RunError(const std::string& w) : Error(Kind::run, w) {}
};

/// Descriptor/tensor shapes do not chain.
struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error(Kind::shape, w) {}
};

/// Parameter values violate an invariant (e.g. non-positive running variance).
struct ParameterCorruption : Error {
  explicit ParameterCorruption(const std::string& w) : Error(Kind::corruption, w) {}
};

struct ContractViolation : Error {
  explicit ContractViolation(const std::string& w) : Error(Kind::contract, w) {}
};

struct AcquisitionError : Error {
  explicit AcquisitionError(const std::string& w) : Error(Kind::acquisition, w) {}
};

/// A loss term was requested over an empty sample set.
struct UndefinedTermError : Error {
  explicit UndefinedTermError(const std::string& w) : Error(Kind::undefined_term, w) {}
};

}  // namespace odl
