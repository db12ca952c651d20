#pragma once

#include <string>
#include <vector>

#include "atc2/model.hpp"
#include "atc2/textnorm.hpp"

namespace atc2 {

enum class EditOp { Hit, Sub, Del, Ins };

struct AlignedPair {
  EditOp op;
  int ref_index = -1;  // -1 for insertions
  int hyp_index = -1;  // -1 for deletions
};

// Counts satisfy S+D+H = |ref| and S+I+H = |hyp|.
struct AlignmentResult {
  int hits = 0;
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int ref_len = 0;
  int hyp_len = 0;
  std::vector<AlignedPair> pairs;

  double rate() const {
    return static_cast<double>(substitutions + deletions + insertions) /
           std::max(1, ref_len);
  }
  void add(const AlignmentResult& o) {
    hits += o.hits;
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    ref_len += o.ref_len;
    hyp_len += o.hyp_len;
  }
};

// Levenshtein alignment with unit costs; on equal cost the backtrace
// prefers hits, then substitutions, deletions, insertions, making the
// alignment (and the aligned-pair list) deterministic.
AlignmentResult wer(const std::vector<std::string>& ref,
                    const std::vector<std::string>& hyp);

// Word errors restricted to the reference positions covered by the
// transcript's `label` spans: the full utterances are aligned first, then
// only hits/substitutions/deletions on labelled reference tokens — plus
// insertions falling strictly inside a labelled region — are kept.
// Throws NoEntities when the reference carries no span of that label.
AlignmentResult entity_wer(const AnnotatedTranscript& ref,
                           const std::vector<std::string>& hyp,
                           EntityLabel label = EntityLabel::Callsign);

// True iff the hypothesis token run equals one of the accepted spoken
// forms of the reference callsign code.
bool callsign_match(const std::vector<std::string>& hyp_span,
                    const std::string& ref_code, const AirlineTable& table);

// Fraction of utterances whose hypothesis callsign region matches an
// accepted verbalization of the per-utterance reference code. Throws
// EmptySet when the lists are empty.
double callsign_accuracy(const std::vector<std::string>& ref_codes,
                         const std::vector<std::vector<std::string>>& hyp_spans,
                         const AirlineTable& table);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// P = tp/(tp+fp), R = tp/(tp+fn), F1 their harmonic mean; each defaults
// to 0 when its denominator is 0.
Prf prf(int tp, int fp, int fn);

// Exact-span matching for one label: a hypothesis span is a true positive
// iff (label, start, end) all agree with a reference span. Token lengths
// must match (LengthMismatch).
Prf span_prf(const AnnotatedTranscript& ref, const AnnotatedTranscript& hyp,
             EntityLabel label);

struct LabeledRange {
  std::string speaker;
  int start = 0;  // token index, end exclusive
  int end = 0;
};

// Jaccard error rate over token-index sets: each reference speaker is
// matched to the hypothesis cluster maximizing |∩|/|∪|, and the result is
// one minus the mean of those ratios. Throws EmptyReference when the
// reference has no speakers.
double jer(const std::vector<LabeledRange>& ref,
           const std::vector<LabeledRange>& hyp);

// Turn-based convenience: speakers are the two roles.
double jer(const std::vector<Turn>& ref, const std::vector<Turn>& hyp);

std::vector<LabeledRange> to_ranges(const std::vector<Turn>& turns);

}  // namespace atc2
