#pragma once

#include <stdexcept>
#include <string>

namespace metaprice {

/// Invalid or inconsistent configuration (bad bounds, malformed JSON, schema
/// violations). Maps to process exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or insufficient input data (CSV parse failures, unmapped
/// columns, too few epochs). Maps to process exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structurally infeasible experiment, e.g. a forced-exploration phase longer
/// than the horizon. Maps to process exit code 4.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace metaprice
