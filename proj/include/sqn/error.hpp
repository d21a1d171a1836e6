#pragma once

#include <stdexcept>
#include <string>

namespace sqn {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameters violate a physical invariant (negative rate, zero detuning, ...).
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Root scan found no sign change of the steady-state residual.
class NoRoot : public Error {
 public:
  NoRoot(double n_lo, double n_hi);
  double n_lo() const { return n_lo_; }
  double n_hi() const { return n_hi_; }

 private:
  double n_lo_;
  double n_hi_;
};

class SingularResponse : public Error {
 public:
  using Error::Error;
};

/// The analytic bistability bounds only hold for identical qubits.
class NotEqualQubit : public Error {
 public:
  using Error::Error;
};

/// Pump sits exactly on the bare cavity frequency.
class DegenerateDetuning : public Error {
 public:
  using Error::Error;
};

class StepSizeUnderflow : public Error {
 public:
  using Error::Error;
};

class BoundExceeded : public Error {
 public:
  using Error::Error;
};

class WindowEmpty : public Error {
 public:
  using Error::Error;
};

class NoDip : public Error {
 public:
  using Error::Error;
};

class SingularJacobian : public Error {
 public:
  using Error::Error;
};

class BranchAmbiguity : public Error {
 public:
  using Error::Error;
};

/// Bad configuration or input file. `key()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace sqn
