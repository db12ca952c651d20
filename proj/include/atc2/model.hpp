#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atc2/lattice.hpp"

namespace atc2 {

enum class EntityLabel { Callsign, Command, Value };
enum class Role { Atco, Pilot };

constexpr std::string_view to_string_view(EntityLabel l) noexcept {
  switch (l) {
    case EntityLabel::Callsign: return "callsign";
    case EntityLabel::Command: return "command";
    case EntityLabel::Value: return "value";
  }
  return "unk";
}

constexpr std::string_view to_string_view(Role r) noexcept {
  return r == Role::Atco ? "ATCO" : "PILOT";
}

std::optional<EntityLabel> entity_label_from(std::string_view s);
std::optional<Role> role_from(std::string_view s);

/// Token span, end exclusive.
struct EntitySpan {
  EntityLabel label = EntityLabel::Callsign;
  int start = 0;
  int end = 0;

  bool operator==(const EntitySpan&) const = default;
};

struct Turn {
  Role role = Role::Atco;
  int start = 0;
  int end = 0;

  bool operator==(const Turn&) const = default;
};

/// Normalized token sequence with entity spans and speaker turns.
/// Tokens outside every entity span are implicitly UNK. Empty `turns`
/// means the transcript has not been diarized; non-empty turns must
/// partition [0, tokens.size()).
struct AnnotatedTranscript {
  std::vector<std::string> tokens;
  std::vector<EntitySpan> entities;
  std::vector<Turn> turns;

  bool operator==(const AnnotatedTranscript&) const = default;
};

/// Throws InvariantViolation if spans are out of bounds, entities overlap,
/// or non-empty turns fail to partition the token range.
void validate(const AnnotatedTranscript& t);

/// `<label> ... </label>` plain-text rendering; UNK tokens unwrapped,
/// single spaces between items.
std::string render_tagged(const AnnotatedTranscript& t);

/// Exact inverse of render_tagged (turns come back empty).
/// Throws MalformedTags on unbalanced or unknown tags.
AnnotatedTranscript parse_tagged(const std::string& text);

struct TranscriptToken {
  std::string word;
  double conf = 1.0;  // recognizer confidence in [0,1]

  bool operator==(const TranscriptToken&) const = default;
};

enum class SegmentStatus { Pending, Ok, Error };

/// One ATC transmission as it moves through the pipeline.
struct SegmentRecord {
  std::string id;
  std::string airport_icao;                 // 4-letter ICAO code
  std::optional<std::int64_t> frequency_hz;
  std::optional<std::int64_t> captured_at;  // UTC epoch seconds
  std::optional<std::vector<double>> audio; // mono PCM, 16 kHz assumed
  double audio_len = 0.0;                   // seconds
  double speech_len = 0.0;                  // seconds
  std::optional<double> avg_snr;            // dB, clamped to [0, 40]
  std::optional<int> num_spk;               // [1, 10], absent until diarized
  std::optional<Lattice> lattice;
  std::vector<TranscriptToken> transcript;
  std::optional<double> avg_word_conf;      // [0, 1]
  int wrd_cnt = 0;
  std::optional<double> eld_score;          // [0, 1]
  std::optional<AnnotatedTranscript> annotation;
  std::optional<double> quality_score;
  SegmentStatus status = SegmentStatus::Pending;
  std::string error_reason;  // set when status == Error, e.g. "TOO_NOISY"

  std::vector<std::string> transcript_words() const;
};

/// Parses one JSONL line. Enforces invariants: clamps avg_snr, num_spk and
/// confidences into range, recomputes wrd_cnt from the transcript.
/// Throws MalformedRecord (bad JSON, missing id) or InvariantViolation
/// (speech_len > audio_len, negative lengths).
SegmentRecord parse_segment_record(const std::string& line);

/// Lossless for all present fields; absent optionals are omitted.
std::string serialize_segment_record(const SegmentRecord& r);

std::vector<SegmentRecord> read_records_jsonl(const std::string& path);
void write_records_jsonl(const std::string& path,
                         const std::vector<SegmentRecord>& records);

// ISO-8601 UTC timestamps ("2022-02-09T12:00:00Z") <-> epoch seconds.
std::string format_utc(std::int64_t epoch_s);
std::int64_t parse_utc(const std::string& iso);

/// Surveillance context: callsign codes plausible in the airspace during
/// [valid_from, valid_to] (absent bounds mean unbounded).
struct ContextList {
  std::vector<std::string> callsigns;  // ICAO format, e.g. "DLH77RM"
  std::optional<std::int64_t> valid_from;
  std::optional<std::int64_t> valid_to;

  bool active_at(std::int64_t ts) const {
    return (!valid_from || ts >= *valid_from) && (!valid_to || ts <= *valid_to);
  }
};

bool looks_like_callsign(const std::string& code);

/// CSV, one code per line, header and window columns optional.
ContextList read_context_csv(const std::string& path);

}  // namespace atc2
