#pragma once

#include <stdexcept>
#include <cstdint>
#include <string>

namespace agefluct {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An age or grid coordinate outside [0, T*].
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A rate model violated its declared bounds or is otherwise unusable.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// A simulation exceeded a configured resource limit (population cap).
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration, panel specification or input file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An initial condition that cannot be realised for the requested K.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Broken internal invariant (should never trigger).
class InternalError : public Error {
 public:
  using Error::Error;
};

/// A failure inside one replicate; carries the replicate id.
class ReplicateError : public Error {
 public:
  ReplicateError(std::uint64_t replicate, const std::string& what);
  std::uint64_t replicate() const noexcept { return replicate_; }

 private:
  std::uint64_t replicate_;
};

}  // namespace agefluct
