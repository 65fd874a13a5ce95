// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mimoloc {

// Maps onto the CLI exit codes: ConfigError -> 2, IoError -> 3,
// ContractViolation -> 4.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void expects(bool cond, const char* what) {
  if (!cond) throw ContractViolation(what);
}

inline void expects(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace mimoloc
