#include "atc2/quality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "atc2/error.hpp"

namespace atc2 {

QualityInputs clamp_inputs(QualityInputs in) {
  in.avg_snr = std::clamp(in.avg_snr, 0.0, 40.0);
  in.num_spk = std::clamp(in.num_spk, 1, 10);
  in.speech_ratio = std::clamp(in.speech_ratio, 0.0, 1.0);
  in.eld_score = std::clamp(in.eld_score, 0.0, 1.0);
  in.avg_word_conf = std::clamp(in.avg_word_conf, 0.0, 1.0);
  in.wrd_cnt = std::max(0, in.wrd_cnt);
  return in;
}

QualityBreakdown quality_breakdown(const QualityInputs& raw) {
  const QualityInputs in = clamp_inputs(raw);
  const double e = std::exp(1.0);
  QualityBreakdown b;
  b.snr_term = std::log(in.avg_snr + e);
  b.spk_term = std::log(in.num_spk + e);
  b.ratio_term = std::log(in.speech_ratio + e);
  b.eld_term = 3.0 * in.eld_score;
  b.conf_term = 3.0 * in.avg_word_conf;
  b.wrd_term = std::log(in.wrd_cnt + e);
  b.total = b.snr_term + b.spk_term + b.ratio_term + b.eld_term + b.conf_term +
            b.wrd_term;
  return b;
}

QualityBreakdown quality_breakdown(const SegmentRecord& r) {
  if (r.audio_len <= 0.0)
    throw AtcError(ErrorCode::ZeroAudioLen,
                   "record " + r.id + ": audio_len must be positive");
  std::string missing;
  auto need = [&missing](bool present, const char* name) {
    if (!present) {
      if (!missing.empty()) missing += ", ";
      missing += name;
    }
  };
  need(r.avg_snr.has_value(), "avg_snr");
  need(r.num_spk.has_value(), "num_spk");
  need(r.eld_score.has_value(), "eld_score");
  need(r.avg_word_conf.has_value(), "avg_word_conf");
  if (!missing.empty())
    throw AtcError(ErrorCode::MissingField,
                   "record " + r.id + ": missing " + missing);

  QualityInputs in;
  in.avg_snr = *r.avg_snr;
  in.num_spk = *r.num_spk;
  in.speech_ratio = r.speech_len / r.audio_len;
  in.eld_score = *r.eld_score;
  in.avg_word_conf = *r.avg_word_conf;
  in.wrd_cnt = r.wrd_cnt;
  return quality_breakdown(in);
}

Selection rank_and_select(const std::vector<SegmentRecord>& records,
                          double top_hours) {
  Selection sel;
  for (const auto& r : records) {
    if (r.status == SegmentStatus::Error || !r.quality_score) continue;
    sel.ranked.push_back({r.id, *r.quality_score, r.speech_len});
  }
  std::sort(sel.ranked.begin(), sel.ranked.end(),
            [](const RankedSegment& a, const RankedSegment& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.id < b.id;
            });

  const double budget_s = top_hours * 3600.0;
  double used = 0.0;
  for (const auto& r : sel.ranked) {
    if (top_hours >= 0.0 && used + r.speech_len > budget_s) break;
    used += r.speech_len;
    sel.selected.push_back(r);
  }

  auto reason_is = [](const SegmentRecord& r,
                      std::initializer_list<const char*> reasons) {
    if (r.status != SegmentStatus::Error) return false;
    for (const char* reason : reasons)
      if (r.error_reason == reason) return true;
    return false;
  };
  double hours_all = 0.0, hours_vad = 0.0, hours_snr = 0.0, hours_eld = 0.0;
  int n_vad = 0, n_snr = 0, n_eld = 0;
  for (const auto& r : records) {
    hours_all += r.audio_len;
    const bool cut_vad = reason_is(r, {"EMPTY_AUDIO", "TOO_SHORT", "TOO_LONG"});
    const bool cut_snr = reason_is(r, {"TOO_NOISY"});
    const bool cut_other = r.status == SegmentStatus::Error && !cut_vad && !cut_snr;
    if (cut_vad) continue;
    ++n_vad;
    hours_vad += r.speech_len;
    if (cut_snr) continue;
    ++n_snr;
    hours_snr += r.speech_len;
    if (cut_other) continue;  // NON_ENGLISH, EMPTY_EVIDENCE, decode failures
    ++n_eld;
    hours_eld += r.speech_len;
  }
  double hours_sel = 0.0;
  for (const auto& r : sel.selected) hours_sel += r.speech_len;
  const double h = 3600.0;
  sel.funnel = {
      {"recorded", static_cast<int>(records.size()), hours_all / h},
      {"post-vad", n_vad, hours_vad / h},
      {"post-snr", n_snr, hours_snr / h},
      {"post-eld", n_eld, hours_eld / h},
      {"selected", static_cast<int>(sel.selected.size()), hours_sel / h},
  };
  return sel;
}

std::string funnel_report(const Selection& s) {
  std::ostringstream out;
  char line[96];
  std::snprintf(line, sizeof(line), "%-10s %8s %10s\n", "stage", "count",
                "hours");
  out << line;
  for (const auto& st : s.funnel) {
    std::snprintf(line, sizeof(line), "%-10s %8d %10.3f\n", st.name.c_str(),
                  st.count, st.hours);
    out << line;
  }
  return out.str();
}

}  // namespace atc2
