#pragma once

#include <string>
#include <vector>

#include "atc2/model.hpp"

namespace atc2 {

// Inputs to the ranking score, clamped to their valid ranges before use:
// snr [0,40] dB, speakers [1,10], speech/audio ratio [0,1], the two
// classifier scores [0,1], and a non-negative word count.
struct QualityInputs {
  double avg_snr = 0.0;
  int num_spk = 1;
  double speech_ratio = 0.0;
  double eld_score = 0.0;
  double avg_word_conf = 0.0;
  int wrd_cnt = 0;
};

QualityInputs clamp_inputs(QualityInputs in);

// The six additive terms: ln(x+e) for snr, speaker count, speech ratio
// and word count; 3x for the two classifier scores. total is their sum,
// monotone strictly increasing in every input over the clamped domain.
struct QualityBreakdown {
  double snr_term = 0.0;
  double spk_term = 0.0;
  double ratio_term = 0.0;
  double eld_term = 0.0;
  double conf_term = 0.0;
  double wrd_term = 0.0;
  double total = 0.0;
};

QualityBreakdown quality_breakdown(const QualityInputs& in);

inline double quality_score(const QualityInputs& in) {
  return quality_breakdown(in).total;
}

// Reads the six inputs off a processed record. Throws ZeroAudioLen when
// audio_len <= 0 and MissingField naming every absent input.
QualityBreakdown quality_breakdown(const SegmentRecord& r);

struct RankedSegment {
  std::string id;
  double score = 0.0;
  double speech_len = 0.0;  // seconds
};

// Counts and speech-hours surviving each processing stage, ending with
// the selected annotation batch.
struct FunnelStage {
  std::string name;
  int count = 0;
  double hours = 0.0;
};

struct Selection {
  std::vector<RankedSegment> ranked;    // full score-sorted order
  std::vector<RankedSegment> selected;  // prefix fitting the hour budget
  std::vector<FunnelStage> funnel;      // recorded → … → selected
};

// Sorts scored records by total descending (id ascending on ties) and
// keeps the longest prefix whose summed speech_len stays within
// top_hours. 0 selects nothing; negative keeps everything. Records that
// ended in error are excluded from ranking but counted in the funnel.
Selection rank_and_select(const std::vector<SegmentRecord>& records,
                          double top_hours);

std::string funnel_report(const Selection& s);

}  // namespace atc2
