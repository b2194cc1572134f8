#pragma once

#include <stdexcept>
#include <string>

namespace xmrc {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A corpus, config, or trace file could not be read or parsed.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A backend was asked for something it does not support.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// The prompt does not fit in the backend's context window.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// Network or remote-service failure (backend or judge endpoint).
class TransportError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace xmrc
