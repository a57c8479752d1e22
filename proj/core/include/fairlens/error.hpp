#pragma once

#include <stdexcept>
#include <string>

namespace fairlens {

// Base for every failure raised by the library. Pipeline errors map to exit
// code 2 in the CLI.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CSV, schema, dataset invariants).
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid user configuration: flags, hyperparameters, group specs. Maps to
// exit code 1 in the CLI.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Failure inside one audit repetition; the message names the model family
// and the repetition index.
class PipelineError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairlens
