#pragma once

#include <stdexcept>
#include <string>

namespace splitkit {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration: bad schema, bad strategy parameters, malformed
// experiment config. Maps to CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or degenerate input data: unparseable rows, empty results,
// violated invariants. Maps to CLI exit code 3.
class DataError : public Error {
 public:
  using Error::Error;
};

// Filesystem / serialization failures and failed pipeline stages.
// Maps to CLI exit code 4.
class IoError : public Error {
 public:
  using Error::Error;
};

// An experiment stage failed; carries where. Maps to CLI exit code 4.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string strategy, std::string model,
             const std::string& detail)
      : Error("stage " + stage + " failed" +
              (strategy.empty() ? "" : " (strategy " + strategy + ")") +
              (model.empty() ? "" : " (model " + model + ")") + ": " + detail),
        stage_(std::move(stage)),
        strategy_(std::move(strategy)),
        model_(std::move(model)),
        detail_(detail) {}

  const std::string& stage() const { return stage_; }
  const std::string& strategy() const { return strategy_; }
  const std::string& model() const { return model_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string stage_;
  std::string strategy_;
  std::string model_;
  std::string detail_;
};

}  // namespace splitkit
