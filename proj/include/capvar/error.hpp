#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace capvar {

enum class ErrorCode {
  // corpus
  ParseError,
  ProtocolViolation,
  DuplicateKey,
  EmptyAfterTokenization,
  EmptyInput,
  // ngram
  InvalidContextLength,
  NegativeCount,
  InvalidArgument,
  CacheFormat,
  // scorers
  EmptyTrainingPool,
  FormatError,
  UnknownCaption,
  NegativeSurprisal,
  // stats
  LengthMismatch,
  InsufficientCaptions,
  // pipeline
  ConfigError,
  IoError,
  Internal,
};

std::string_view error_code_name(ErrorCode code);

// Which of the CLI's exit classes an error belongs to: 2 config, 3 data,
// 4 internal invariant violation.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace capvar
