#pragma once

#include <stdexcept>
#include <string>

namespace promforge {

// Error categories mirror the status codes of the C API one-to-one.
enum class ErrorCode {
  kInvalidArgument = 1,
  kConfig,
  kIo,
  kCorruptFile,
  kVersionMismatch,
  kChecksum,
  kNonConvergence,
  kEmptySelection,
  kDuplicateAssignment,
  kStructureViolation,
  kNumeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool ok, const std::string& what, ErrorCode code = ErrorCode::kInvalidArgument) {
  if (!ok) throw Error(code, what);
}

}  // namespace promforge
