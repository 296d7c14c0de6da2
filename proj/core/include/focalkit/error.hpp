#pragma once

#include <stdexcept>
#include <string>

namespace focalkit {

// Base of every exception the library throws. Subclasses are distinct so
// callers (the CLI in particular) can map them onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class BehindCameraError : public Error {
 public:
  using Error::Error;
};

class EmptyEvaluationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class MissingFileError : public IoError {
 public:
  explicit MissingFileError(const std::string& path) : IoError(path, "no such file") {}
};

class BitDepthError : public IoError {
 public:
  using IoError::IoError;
};

class ManifestError : public Error {
 public:
  using Error::Error;
};

// Raised when a training step produces a non-finite loss.
class NumericalError : public Error {
 public:
  NumericalError(long step, std::string sample_id, const std::string& what)
      : Error(what), step_(step), sample_id_(std::move(sample_id)) {}
  long step() const noexcept { return step_; }
  const std::string& sample_id() const noexcept { return sample_id_; }

 private:
  long step_;
  std::string sample_id_;
};

}  // namespace focalkit
