#pragma once

#include <stdexcept>
#include <string>

namespace qscore {

// Base class for all domain errors surfaced by the library. The CLI maps
// these to exit code 1; usage errors are handled by the argument parser.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed query text or instance/world documents. Carries a byte offset
// into the source text when one is meaningful (query syntax errors).
struct ParseError : Error {
  explicit ParseError(const std::string& what, std::size_t offset = npos)
      : Error(what), offset(offset) {}
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t offset;
};

// A well-formed request that violates an operation's preconditions
// (unknown tuple id, exogenous tuple passed to a score, bad schema, ...).
struct DomainError : Error {
  using Error::Error;
};

// Raised instead of silently truncating when an instance exceeds the
// configured exhaustive-enumeration budget.
struct CapExceededError : Error {
  using Error::Error;
};

// Sentinel for "no removal set falsifies the query here": the quantity is
// infinite, which has no representation in the return type.
struct NotFalsifiableError : Error {
  using Error::Error;
};

// A counterexample construction was asked to run on a query that does not
// satisfy the mode's hypothesis; the message names the failed condition.
struct HypothesisError : Error {
  using Error::Error;
};

// A constructed instance failed its own alignment verification. This is
// reported loudly, never returned as if it were a success.
struct VerificationError : Error {
  using Error::Error;
};

}  // namespace qscore
