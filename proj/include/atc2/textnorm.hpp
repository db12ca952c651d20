#pragma once

#include <map>
#include <string>
#include <vector>

namespace atc2 {

// Lowercased, verbalized token stream. Digits are read out one by one
// ("125" -> "one two five"), short all-caps runs are spelled as letters
// ("FL" -> "f l"), and spoken aliases such as "niner" are folded to their
// canonical forms. Applying normalize to its own output is a no-op.
std::vector<std::string> normalize(const std::string& text);

// ICAO spelling alphabet, index 0 = "alfa" ... 25 = "zulu".
const std::vector<std::string>& icao_alphabet();

// Digit words, index 0 = "zero" ... 9 = "nine".
const std::vector<std::string>& digit_words();

// Maps 3-letter airline designators (ICAO) to spoken telephony names,
// e.g. "CSN" -> "china southern".
using AirlineTable = std::map<std::string, std::string>;

const AirlineTable& default_airline_table();
AirlineTable load_airline_table_csv(const std::string& path);

enum class VerbalizationKind { Full, Spelled, Shortened };

struct Verbalization {
  std::vector<std::string> tokens;
  VerbalizationKind kind;
};

struct CallsignExpansion {
  std::string code;                  // the raw code, e.g. "CSN325"
  std::vector<Verbalization> forms;  // spoken variants, deduplicated
  bool unknown_designator = false;   // airline prefix missing from table
};

// Expands a written callsign code into the ways crews actually say it:
// the full telephony form ("china southern three two five"), the
// letter-by-letter spelling, and the shortened tail form. Unknown airline
// designators are flagged, not fatal; the spelled form is still produced.
CallsignExpansion expand_callsign(const std::string& code,
                                  const AirlineTable& table);

enum class BoostMode { Unigram, Ngram };

// Flattens expansions into the sequences fed to the biasing FST builder.
// Ngram mode keeps each verbalization as one sequence; unigram mode
// splits them into single-token sequences (deduplicated, order preserved).
std::vector<std::vector<std::string>> expansions_to_ngrams(
    const std::vector<CallsignExpansion>& expansions, BoostMode mode);

}  // namespace atc2
