#pragma once

#include <stdexcept>
#include <string>

namespace kw {

// Bad user input: malformed files, incompatible ranks, invalid flags.
struct InputError : std::runtime_error {
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// A computation exceeded its configured budget (basis size, pair count,
// support size in exact mode).  Carries enough context to retry with a
// larger budget.
struct BudgetError : std::runtime_error {
  explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

// A check that was asked to certify something found a counterexample.
struct VerificationError : std::runtime_error {
  explicit VerificationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kw
