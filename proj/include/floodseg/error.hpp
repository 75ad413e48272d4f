#pragma once

#include <stdexcept>
#include <string>

namespace floodseg {

// Error categories. The C API exposes these as negative status codes.
enum class Errc {
  format = 1,      // malformed, truncated or oversized file payloads
  argument = 2,    // precondition violation on call arguments
  shape = 3,       // tensor/layer dimension mismatch
  numeric = 4,     // NaN/Inf encountered in a numeric buffer
  loss = 5,        // degenerate loss input (no valid pixels)
  evaluation = 6,  // degenerate evaluation input
  coverage = 7,    // stitching found an uncovered pixel
  io = 8,          // file could not be opened/read/written
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::format: return "format error";
    case Errc::argument: return "argument error";
    case Errc::shape: return "shape error";
    case Errc::numeric: return "numeric error";
    case Errc::loss: return "loss error";
    case Errc::evaluation: return "evaluation error";
    case Errc::coverage: return "coverage error";
    case Errc::io: return "io error";
  }
  return "error";
}

}  // namespace floodseg
