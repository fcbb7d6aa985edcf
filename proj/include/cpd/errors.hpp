#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cpd {

/// Invalid or inconsistent configuration value. `parameter()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string parameter, const std::string& what)
      : std::runtime_error(parameter + ": " + what), parameter_(std::move(parameter)) {}
  const std::string& parameter() const noexcept { return parameter_; }

 private:
  std::string parameter_;
};

class TriangulationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class TopologyError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class DegenerateTriangleError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a force or position turns non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t particle, long substep, int tau, long sample_id)
      : std::runtime_error("divergence at particle " + std::to_string(particle) +
                           " (sample " + std::to_string(sample_id) + ", tau " +
                           std::to_string(tau) + ", substep " + std::to_string(substep) + ")"),
        particle_(particle), substep_(substep), tau_(tau), sample_id_(sample_id) {}
  std::size_t particle() const noexcept { return particle_; }
  long substep() const noexcept { return substep_; }
  int tau() const noexcept { return tau_; }
  long sample_id() const noexcept { return sample_id_; }

 private:
  std::size_t particle_;
  long substep_;
  int tau_;
  long sample_id_;
};

class DomainError : public std::domain_error {
  using std::domain_error::domain_error;
};

class ExtractionError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed, truncated or version-mismatched file.
class FormatError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ChecksumError : public FormatError {
  using FormatError::FormatError;
};

}  // namespace cpd
