#pragma once

#include <stdexcept>
#include <string>

namespace micropump {

// Argument outside an operation's domain (negative period, angle > 360, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A fitted quantity could not be determined from the data.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Synthetic plant parameters produce values outside their physical window.
class PlantConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VersionError : public LoadError {
 public:
  using LoadError::LoadError;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A pipeline step could not produce valid artifacts (unwritable output,
// non-converged clustering, model and clusters from different runs).
class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when the supervised phase produces a non-finite loss.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int epoch)
      : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace micropump
