#include "atc2/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "atc2/error.hpp"

namespace atc2 {

AlignmentResult wer(const std::vector<std::string>& ref,
                    const std::vector<std::string>& hyp) {
  const int r = static_cast<int>(ref.size());
  const int h = static_cast<int>(hyp.size());
  std::vector<std::vector<int>> d(r + 1, std::vector<int>(h + 1, 0));
  for (int i = 0; i <= r; ++i) d[i][0] = i;
  for (int j = 0; j <= h; ++j) d[0][j] = j;
  for (int i = 1; i <= r; ++i)
    for (int j = 1; j <= h; ++j) {
      const int match = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d[i][j] = std::min({match, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }

  AlignmentResult res;
  res.ref_len = r;
  res.hyp_len = h;
  int i = r, j = h;
  std::vector<AlignedPair> rev;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] &&
        d[i][j] == d[i - 1][j - 1]) {
      rev.push_back({EditOp::Hit, i - 1, j - 1});
      --i, --j;
    } else if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + 1) {
      rev.push_back({EditOp::Sub, i - 1, j - 1});
      --i, --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      rev.push_back({EditOp::Del, i - 1, -1});
      --i;
    } else {
      rev.push_back({EditOp::Ins, -1, j - 1});
      --j;
    }
  }
  res.pairs.assign(rev.rbegin(), rev.rend());
  for (const auto& p : res.pairs) {
    switch (p.op) {
      case EditOp::Hit: ++res.hits; break;
      case EditOp::Sub: ++res.substitutions; break;
      case EditOp::Del: ++res.deletions; break;
      case EditOp::Ins: ++res.insertions; break;
    }
  }
  return res;
}

AlignmentResult entity_wer(const AnnotatedTranscript& ref,
                           const std::vector<std::string>& hyp,
                           EntityLabel label) {
  std::vector<EntitySpan> spans;
  for (const auto& s : ref.entities)
    if (s.label == label) spans.push_back(s);
  if (spans.empty())
    throw AtcError(ErrorCode::NoEntities, "reference has no such spans");

  auto inside = [&spans](int ref_index) {
    for (const auto& s : spans)
      if (ref_index >= s.start && ref_index < s.end) return true;
    return false;
  };
  auto strictly_inside = [&spans](int boundary) {
    for (const auto& s : spans)
      if (boundary > s.start && boundary < s.end) return true;
    return false;
  };

  const AlignmentResult full = wer(ref.tokens, hyp);
  AlignmentResult res;
  int consumed = 0;  // reference tokens consumed so far, for insertions
  for (const auto& p : full.pairs) {
    bool keep = false;
    if (p.op == EditOp::Ins) {
      keep = strictly_inside(consumed);
    } else {
      keep = inside(p.ref_index);
      ++consumed;
    }
    if (!keep) continue;
    res.pairs.push_back(p);
    switch (p.op) {
      case EditOp::Hit: ++res.hits; break;
      case EditOp::Sub: ++res.substitutions; break;
      case EditOp::Del: ++res.deletions; break;
      case EditOp::Ins: ++res.insertions; break;
    }
  }
  for (const auto& s : spans) res.ref_len += s.end - s.start;
  res.hyp_len = res.hits + res.substitutions + res.insertions;
  return res;
}

bool callsign_match(const std::vector<std::string>& hyp_span,
                    const std::string& ref_code, const AirlineTable& table) {
  if (hyp_span.empty()) return false;
  const CallsignExpansion exp = expand_callsign(ref_code, table);
  for (const auto& form : exp.forms)
    if (form.tokens == hyp_span) return true;
  return false;
}

double callsign_accuracy(const std::vector<std::string>& ref_codes,
                         const std::vector<std::vector<std::string>>& hyp_spans,
                         const AirlineTable& table) {
  if (ref_codes.size() != hyp_spans.size())
    throw AtcError(ErrorCode::LengthMismatch,
                   "reference/hypothesis utterance counts differ");
  int total = 0, correct = 0;
  for (std::size_t i = 0; i < ref_codes.size(); ++i) {
    if (ref_codes[i].empty()) continue;  // utterance without a callsign
    ++total;
    if (callsign_match(hyp_spans[i], ref_codes[i], table)) ++correct;
  }
  if (total == 0)
    throw AtcError(ErrorCode::EmptySet, "no utterances carry a callsign");
  return static_cast<double>(correct) / total;
}

Prf prf(int tp, int fp, int fn) {
  if (tp < 0 || fp < 0 || fn < 0)
    throw AtcError(ErrorCode::InvariantViolation, "negative counts");
  Prf r;
  r.precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
  r.recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
  r.f1 = (r.precision + r.recall > 0.0)
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

Prf span_prf(const AnnotatedTranscript& ref, const AnnotatedTranscript& hyp,
             EntityLabel label) {
  if (ref.tokens.size() != hyp.tokens.size())
    throw AtcError(ErrorCode::LengthMismatch,
                   "transcripts have different token counts");
  std::set<std::pair<int, int>> ref_spans, hyp_spans;
  for (const auto& s : ref.entities)
    if (s.label == label) ref_spans.emplace(s.start, s.end);
  for (const auto& s : hyp.entities)
    if (s.label == label) hyp_spans.emplace(s.start, s.end);
  int tp = 0;
  for (const auto& s : hyp_spans) tp += ref_spans.count(s);
  return prf(tp, static_cast<int>(hyp_spans.size()) - tp,
             static_cast<int>(ref_spans.size()) - tp);
}

namespace {

std::map<std::string, std::set<int>> cluster_tokens(
    const std::vector<LabeledRange>& ranges) {
  std::map<std::string, std::set<int>> clusters;
  for (const auto& r : ranges) {
    if (r.start > r.end)
      throw AtcError(ErrorCode::InvariantViolation, "range start > end");
    auto& s = clusters[r.speaker];
    for (int i = r.start; i < r.end; ++i) s.insert(i);
  }
  // A speaker appearing only via empty ranges carries no tokens.
  for (auto it = clusters.begin(); it != clusters.end();)
    it = it->second.empty() ? clusters.erase(it) : std::next(it);
  return clusters;
}

}  // namespace

double jer(const std::vector<LabeledRange>& ref,
           const std::vector<LabeledRange>& hyp) {
  const auto ref_clusters = cluster_tokens(ref);
  const auto hyp_clusters = cluster_tokens(hyp);
  if (ref_clusters.empty())
    throw AtcError(ErrorCode::EmptyReference, "reference has no speakers");
  double sum = 0.0;
  for (const auto& [spk, rset] : ref_clusters) {
    (void)spk;
    double best = 0.0;
    for (const auto& [hspk, hset] : hyp_clusters) {
      (void)hspk;
      std::size_t inter = 0;
      for (int t : rset) inter += hset.count(t);
      const std::size_t uni = rset.size() + hset.size() - inter;
      if (uni > 0)
        best = std::max(best, static_cast<double>(inter) / uni);
    }
    sum += best;
  }
  return 1.0 - sum / static_cast<double>(ref_clusters.size());
}

std::vector<LabeledRange> to_ranges(const std::vector<Turn>& turns) {
  std::vector<LabeledRange> out;
  out.reserve(turns.size());
  for (const auto& t : turns)
    out.push_back({std::string(to_string_view(t.role)), t.start, t.end});
  return out;
}

double jer(const std::vector<Turn>& ref, const std::vector<Turn>& hyp) {
  return jer(to_ranges(ref), to_ranges(hyp));
}

}  // namespace atc2
