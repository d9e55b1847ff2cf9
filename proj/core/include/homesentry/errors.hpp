#pragma once

#include <stdexcept>
#include <string>

namespace homesentry {

// Bad flags, malformed config files, paths named in config that do not exist.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problems with the data itself: malformed CSV rows, feature arity mismatches,
// rule files that do not parse, unknown requirement ids.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace homesentry
