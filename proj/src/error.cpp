#include "capvar/error.hpp"

namespace capvar {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::ProtocolViolation: return "PROTOCOL_VIOLATION";
    case ErrorCode::DuplicateKey: return "DUPLICATE_KEY";
    case ErrorCode::EmptyAfterTokenization: return "EMPTY_AFTER_TOKENIZATION";
    case ErrorCode::EmptyInput: return "EMPTY_INPUT";
    case ErrorCode::InvalidContextLength: return "INVALID_CONTEXT_LENGTH";
    case ErrorCode::NegativeCount: return "NEGATIVE_COUNT";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::CacheFormat: return "CACHE_FORMAT";
    case ErrorCode::EmptyTrainingPool: return "EMPTY_TRAINING_POOL";
    case ErrorCode::FormatError: return "FORMAT_ERROR";
    case ErrorCode::UnknownCaption: return "UNKNOWN_CAPTION";
    case ErrorCode::NegativeSurprisal: return "NEGATIVE_SURPRISAL";
    case ErrorCode::LengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::InsufficientCaptions: return "INSUFFICIENT_CAPTIONS";
    case ErrorCode::ConfigError: return "CONFIG_ERROR";
    case ErrorCode::IoError: return "IO_ERROR";
    case ErrorCode::Internal: return "INTERNAL";
  }
  return "UNKNOWN";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
      return 2;
    case ErrorCode::NegativeCount:
    case ErrorCode::InvalidContextLength:
    case ErrorCode::Internal:
      return 4;
    default:
      return 3;
  }
}

}  // namespace capvar
