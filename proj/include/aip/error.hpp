#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aip {

enum class ErrorKind {
  Dimension,
  Domain,
  Optimization,
  Config,
  Split,
  Selection,
  Io,
  Sampling,
  Training,
  Argument,
  Scoring,
  Attack,
  Layout,
  Codec,
  Evaluation,
  Statistics,
  Validation,
  Stage,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers switch on kind() when they
// need to tell failure classes apart.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Optimization: return "optimization";
    case ErrorKind::Config: return "config";
    case ErrorKind::Split: return "split";
    case ErrorKind::Selection: return "selection";
    case ErrorKind::Io: return "io";
    case ErrorKind::Sampling: return "sampling";
    case ErrorKind::Training: return "training";
    case ErrorKind::Argument: return "argument";
    case ErrorKind::Scoring: return "scoring";
    case ErrorKind::Attack: return "attack";
    case ErrorKind::Layout: return "layout";
    case ErrorKind::Codec: return "codec";
    case ErrorKind::Evaluation: return "evaluation";
    case ErrorKind::Statistics: return "statistics";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Stage: return "stage";
  }
  return "unknown";
}

}  // namespace aip
