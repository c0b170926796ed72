#ifndef QVS_ERROR_HPP
#define QVS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace qvs {

// Violated precondition or invariant of an operation contract.
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Request exceeds what an operation can compute (e.g. exact enumeration of a
// system too large to enumerate).
class CapabilityError : public std::runtime_error {
 public:
  explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or truncated file content.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Overflow, NaN, or other numeric breakdown during an update.
class NumericFailure : public std::runtime_error {
 public:
  explicit NumericFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qvs

#define QVS_REQUIRE(cond, msg)                  \
  do {                                          \
    if (!(cond)) {                              \
      throw ::qvs::ContractViolation(msg);      \
    }                                           \
  } while (0)

#endif
