#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sprayoid {

/// Base class for every error raised by the library. `kind()` is a stable
/// short name used in CLI diagnostics and JSON reports.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, const std::string& what)
      : Error("SyntaxError",
              what + " at byte " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

#define SPRAYOID_ERROR(Name)                                           \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(#Name, what) {}     \
  };

SPRAYOID_ERROR(UnknownIdentifier)
SPRAYOID_ERROR(ArityError)
SPRAYOID_ERROR(DomainError)
SPRAYOID_ERROR(NonFinite)
SPRAYOID_ERROR(InvalidParams)
SPRAYOID_ERROR(LeftDomain)
SPRAYOID_ERROR(NotComposable)
SPRAYOID_ERROR(SingularMC)
SPRAYOID_ERROR(PreconditionError)
SPRAYOID_ERROR(MalformedTable)
SPRAYOID_ERROR(Budget)
SPRAYOID_ERROR(ConfigError)

#undef SPRAYOID_ERROR

}  // namespace sprayoid
