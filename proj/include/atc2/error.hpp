#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace atc2 {

enum class ErrorCode {
  MalformedRecord,
  InvariantViolation,
  MalformedTags,
  MalformedLattice,
  EmptyAudio,
  EmptySequenceSet,
  PositiveDiscount,
  NoPath,
  SingleClassCorpus,
  EmptyCorpus,
  EmptyEvidence,
  NoEntities,
  EmptySet,
  LengthMismatch,
  EmptyReference,
  ConfigCycle,
  UnknownBlock,
  InvalidConfig,
  MissingField,
  ZeroAudioLen,
  IllegalTransition,
  IoError,
};

constexpr std::string_view to_string_view(ErrorCode c) noexcept {
  switch (c) {
    case ErrorCode::MalformedRecord: return "MALFORMED_RECORD";
    case ErrorCode::InvariantViolation: return "INVARIANT_VIOLATION";
    case ErrorCode::MalformedTags: return "MALFORMED_TAGS";
    case ErrorCode::MalformedLattice: return "MALFORMED_LATTICE";
    case ErrorCode::EmptyAudio: return "EMPTY_AUDIO";
    case ErrorCode::EmptySequenceSet: return "EMPTY_SEQUENCE_SET";
    case ErrorCode::PositiveDiscount: return "POSITIVE_DISCOUNT";
    case ErrorCode::NoPath: return "NO_PATH";
    case ErrorCode::SingleClassCorpus: return "SINGLE_CLASS_CORPUS";
    case ErrorCode::EmptyCorpus: return "EMPTY_CORPUS";
    case ErrorCode::EmptyEvidence: return "EMPTY_EVIDENCE";
    case ErrorCode::NoEntities: return "NO_ENTITIES";
    case ErrorCode::EmptySet: return "EMPTY_SET";
    case ErrorCode::LengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::EmptyReference: return "EMPTY_REFERENCE";
    case ErrorCode::ConfigCycle: return "CONFIG_CYCLE";
    case ErrorCode::UnknownBlock: return "UNKNOWN_BLOCK";
    case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::MissingField: return "MISSING_FIELD";
    case ErrorCode::ZeroAudioLen: return "ZERO_AUDIO_LEN";
    case ErrorCode::IllegalTransition: return "ILLEGAL_TRANSITION";
    case ErrorCode::IoError: return "IO_ERROR";
  }
  return "UNKNOWN";
}

/// Single exception type for the whole library; tests and the pipeline
/// dispatch on code() rather than on the exception hierarchy.
class AtcError : public std::runtime_error {
 public:
  AtcError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string_view(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace atc2
