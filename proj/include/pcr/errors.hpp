#pragma once

#include <stdexcept>
#include <string>

namespace pcr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid input data or configuration; the message names the offending item.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(std::string path, const std::string& cause)
      : Error(path + ": " + cause), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace pcr
