#pragma once
// Shared error type, label/view enums, and small helpers used across the
// library.

#include <cstdint>
#include <stdexcept>
#include <string>

namespace inspl {

// Every failure the library can raise. The CLI maps these onto exit codes,
// so each code carries a severity class.
enum class ErrorCode {
  // input / data errors (exit code 1)
  UnknownEndpoint,
  ShapeMismatch,
  IndexOutOfRange,
  InsufficientColumns,
  MalformedRow,
  UnknownClassToken,
  CrossTimestepEdge,
  DuplicateTxId,
  BadSplit,
  EmptyBatch,
  EmptyScores,
  EmptyGraph,
  Misalignment,
  EmptyTrainingSet,
  LengthMismatch,
  SingleClass,
  BadConfig,
  IoError,
  // artifact errors (exit code 2)
  VersionMismatch,
  // internal invariant violations (exit code 3)
  Internal,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnknownEndpoint: return "UnknownEndpoint";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InsufficientColumns: return "InsufficientColumns";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::UnknownClassToken: return "UnknownClassToken";
    case ErrorCode::CrossTimestepEdge: return "CrossTimestepEdge";
    case ErrorCode::DuplicateTxId: return "DuplicateTxId";
    case ErrorCode::BadSplit: return "BadSplit";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::Misalignment: return "Misalignment";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

  // Severity class for process exit codes: 1 input, 2 artifact, 3 internal.
  int exit_class() const {
    switch (code_) {
      case ErrorCode::VersionMismatch: return 2;
      case ErrorCode::Internal: return 3;
      default: return 1;
    }
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

// Node label. Unknown rows are kept in graphs but never reach the
// classifier.
enum class Label : std::uint8_t { Illicit = 0, Licit = 1, Unknown = 2 };

inline const char* label_name(Label l) {
  switch (l) {
    case Label::Illicit: return "illicit";
    case Label::Licit: return "licit";
    case Label::Unknown: return "unknown";
  }
  return "?";
}

// Which slice of the raw feature columns feeds the encoder: all 166, or the
// 94 local ones (a strict prefix).
enum class FeatureView : std::uint8_t { AF = 0, LF = 1 };

inline constexpr int kAfWidth = 166;
inline constexpr int kLfWidth = 94;

inline int view_width(FeatureView v) {
  return v == FeatureView::AF ? kAfWidth : kLfWidth;
}

inline const char* view_name(FeatureView v) {
  return v == FeatureView::AF ? "af" : "lf";
}

// Feature block handed to the classifier: embeddings only, or local/all raw
// features concatenated with the embeddings.
enum class Scenario : std::uint8_t { DNE = 0, LF_DNE = 1, AF_DNE = 2 };

inline const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::DNE: return "dne";
    case Scenario::LF_DNE: return "lf-dne";
    case Scenario::AF_DNE: return "af-dne";
  }
  return "?";
}

// Train mode uses batch statistics and updates running stats; Eval
// normalizes with the stored running stats.
enum class Mode : std::uint8_t { Train = 0, Eval = 1 };

}  // namespace inspl
