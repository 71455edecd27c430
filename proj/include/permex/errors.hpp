#pragma once

#include <stdexcept>
#include <string>

namespace permex {

// Precondition violated by the caller (bad dimensions, m > n, ...).
class invalid_input : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Real-valued argument outside the domain of a rate or Stirling function.
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Work would exceed a configured enumeration or dimension budget.
class capacity_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace permex
