#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "atc2/eld.hpp"
#include "atc2/model.hpp"
#include "atc2/textnorm.hpp"

namespace atc2 {

// Rule lexicon driving the phraseology tagger. Command patterns are
// multi-token and matched longest-first ("cleared to land" before
// "cleared"); value templates mix literals with <digits> / <letter>
// placeholders ("flight level <digits>", "runway <digits> left").
struct PhraseologyGrammar {
  std::vector<std::vector<std::string>> commands;
  std::vector<std::vector<std::string>> value_templates;
  std::vector<std::string> greetings;
  std::vector<std::vector<std::string>> airline_names;  // telephony names

  static PhraseologyGrammar builtin(const AirlineTable& airlines);
  static PhraseologyGrammar parse_json(const std::string& text);
  std::string to_json() const;
};

// Tags a normalized token stream with callsign / command / value spans;
// untagged tokens stay outside every span. Callsigns are airline-name +
// digit/letter-word runs; with a context list, its expansions are matched
// too (≥ 0.8 positional token overlap) and win on conflict. Span priority
// on overlap: callsign > value > command.
AnnotatedTranscript tag_entities(const std::vector<std::string>& tokens,
                                 const PhraseologyGrammar& grammar,
                                 const ContextList* context = nullptr,
                                 const AirlineTable* airlines = nullptr);

// ATCO vs. PILOT through the linear text classifier (trained with
// positive = ATCO, confidences 1.0). Returns the decision and P(ATCO).
std::pair<Role, double> detect_role(const std::vector<std::string>& tokens,
                                    const EldModel& model);

// Splits concatenated transmissions at speaker changes: before a callsign
// mention that follows a command/value region or greeting, and before a
// readback-form verb ("descending") after a command/value region. Each
// turn is labeled by rule: imperative command verb → ATCO, readback
// morphology or trailing callsign → PILOT. Turns partition the range;
// unsplittable input falls back to a single turn.
std::vector<Turn> diarize_text(const std::vector<std::string>& tokens,
                               const PhraseologyGrammar& grammar);

// tag + diarize in one pass.
AnnotatedTranscript understand(const std::vector<std::string>& tokens,
                               const PhraseologyGrammar& grammar,
                               const ContextList* context = nullptr,
                               const AirlineTable* airlines = nullptr);

}  // namespace atc2
