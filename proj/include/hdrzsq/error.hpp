#pragma once

#include <stdexcept>
#include <string>

namespace hdrzsq {

// Broad failure classes. The CLI maps these onto its exit codes.
enum class ErrorKind {
  kUsage,      // bad argument or precondition violated by the caller
  kFormat,     // malformed or unsupported input data
  kIntegrity,  // checksum, sequence or consistency failure inside a container
  kIo,         // the operating system refused a read or write
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace hdrzsq
