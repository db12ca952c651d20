#include "atc2/model.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "atc2/error.hpp"

namespace atc2 {

using nlohmann::json;

std::optional<EntityLabel> entity_label_from(std::string_view s) {
  if (s == "callsign") return EntityLabel::Callsign;
  if (s == "command") return EntityLabel::Command;
  if (s == "value") return EntityLabel::Value;
  return std::nullopt;
}

std::optional<Role> role_from(std::string_view s) {
  if (s == "ATCO") return Role::Atco;
  if (s == "PILOT") return Role::Pilot;
  return std::nullopt;
}

void validate(const AnnotatedTranscript& t) {
  const int n = static_cast<int>(t.tokens.size());
  auto spans = t.entities;
  std::sort(spans.begin(), spans.end(),
            [](const EntitySpan& a, const EntitySpan& b) {
              return a.start < b.start;
            });
  int prev_end = 0;
  for (const auto& s : spans) {
    if (s.start < 0 || s.end > n || s.start >= s.end)
      throw AtcError(ErrorCode::InvariantViolation, "entity span out of bounds");
    if (s.start < prev_end)
      throw AtcError(ErrorCode::InvariantViolation, "overlapping entity spans");
    prev_end = s.end;
  }
  if (!t.turns.empty()) {
    auto turns = t.turns;
    std::sort(turns.begin(), turns.end(),
              [](const Turn& a, const Turn& b) { return a.start < b.start; });
    int cursor = 0;
    for (const auto& u : turns) {
      if (u.start != cursor || u.end <= u.start)
        throw AtcError(ErrorCode::InvariantViolation,
                       "turns do not partition the token range");
      cursor = u.end;
    }
    if (cursor != n)
      throw AtcError(ErrorCode::InvariantViolation,
                     "turns do not cover the token range");
  }
}

std::string render_tagged(const AnnotatedTranscript& t) {
  validate(t);
  auto spans = t.entities;
  std::sort(spans.begin(), spans.end(),
            [](const EntitySpan& a, const EntitySpan& b) {
              return a.start < b.start;
            });
  std::string out;
  auto append = [&out](std::string_view piece) {
    if (!out.empty()) out += ' ';
    out += piece;
  };
  std::size_t next_span = 0;
  for (int i = 0; i < static_cast<int>(t.tokens.size()); ++i) {
    if (next_span < spans.size() && spans[next_span].start == i) {
      const auto& s = spans[next_span];
      append("<" + std::string(to_string_view(s.label)) + ">");
      for (int j = s.start; j < s.end; ++j) append(t.tokens[j]);
      append("</" + std::string(to_string_view(s.label)) + ">");
      i = s.end - 1;
      ++next_span;
    } else {
      append(t.tokens[i]);
    }
  }
  return out;
}

AnnotatedTranscript parse_tagged(const std::string& text) {
  AnnotatedTranscript t;
  std::istringstream in(text);
  std::string item;
  std::optional<EntityLabel> open;
  int open_start = 0;
  while (in >> item) {
    if (item.size() > 2 && item.front() == '<' && item.back() == '>') {
      const bool closing = item[1] == '/';
      const std::string name = item.substr(closing ? 2 : 1,
                                           item.size() - (closing ? 3 : 2));
      auto label = entity_label_from(name);
      if (!label)
        throw AtcError(ErrorCode::MalformedTags, "unknown tag <" + name + ">");
      if (closing) {
        if (!open || *open != *label)
          throw AtcError(ErrorCode::MalformedTags,
                         "unbalanced closing tag </" + name + ">");
        t.entities.push_back(
            {*open, open_start, static_cast<int>(t.tokens.size())});
        if (open_start == static_cast<int>(t.tokens.size()))
          throw AtcError(ErrorCode::MalformedTags, "empty <" + name + "> span");
        open.reset();
      } else {
        if (open)
          throw AtcError(ErrorCode::MalformedTags,
                         "nested tag <" + name + ">");
        open = *label;
        open_start = static_cast<int>(t.tokens.size());
      }
    } else {
      t.tokens.push_back(item);
    }
  }
  if (open)
    throw AtcError(ErrorCode::MalformedTags, "unclosed tag");
  return t;
}

std::vector<std::string> SegmentRecord::transcript_words() const {
  std::vector<std::string> words;
  words.reserve(transcript.size());
  for (const auto& t : transcript) words.push_back(t.word);
  return words;
}

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

json transcript_to_json(const std::vector<TranscriptToken>& ts) {
  json arr = json::array();
  for (const auto& t : ts) arr.push_back({{"word", t.word}, {"conf", t.conf}});
  return arr;
}

std::string status_tag(const SegmentRecord& r) {
  switch (r.status) {
    case SegmentStatus::Pending: return "pending";
    case SegmentStatus::Ok: return "ok";
    case SegmentStatus::Error:
      return r.error_reason.empty() ? "error" : "error:" + r.error_reason;
  }
  return "pending";
}

void apply_status_tag(SegmentRecord& r, const std::string& tag) {
  if (tag == "pending") {
    r.status = SegmentStatus::Pending;
  } else if (tag == "ok") {
    r.status = SegmentStatus::Ok;
  } else if (tag.rfind("error", 0) == 0) {
    r.status = SegmentStatus::Error;
    if (tag.size() > 6 && tag[5] == ':') r.error_reason = tag.substr(6);
  } else {
    throw AtcError(ErrorCode::MalformedRecord, "unknown status tag: " + tag);
  }
}

}  // namespace

SegmentRecord parse_segment_record(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw AtcError(ErrorCode::MalformedRecord, e.what());
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
      j["id"].get<std::string>().empty())
    throw AtcError(ErrorCode::MalformedRecord, "missing id");

  SegmentRecord r;
  try {
    r.id = j["id"].get<std::string>();
    if (j.contains("airport_icao")) r.airport_icao = j["airport_icao"];
    if (j.contains("frequency_hz"))
      r.frequency_hz = j["frequency_hz"].get<std::int64_t>();
    if (j.contains("captured_at"))
      r.captured_at = parse_utc(j["captured_at"].get<std::string>());
    if (j.contains("audio"))
      r.audio = j["audio"].get<std::vector<double>>();
    if (j.contains("audio_len")) r.audio_len = j["audio_len"].get<double>();
    if (j.contains("speech_len")) r.speech_len = j["speech_len"].get<double>();
    if (j.contains("avg_snr"))
      r.avg_snr = std::clamp(j["avg_snr"].get<double>(), 0.0, 40.0);
    if (j.contains("num_spk"))
      r.num_spk = std::clamp(j["num_spk"].get<int>(), 1, 10);
    if (j.contains("lattice"))
      r.lattice = Lattice::parse(j["lattice"].get<std::string>());
    if (j.contains("transcript")) {
      for (const auto& tok : j["transcript"]) {
        TranscriptToken t;
        t.word = tok.at("word").get<std::string>();
        t.conf = clamp01(tok.value("conf", 1.0));
        r.transcript.push_back(std::move(t));
      }
    }
    if (j.contains("avg_word_conf"))
      r.avg_word_conf = clamp01(j["avg_word_conf"].get<double>());
    if (j.contains("eld_score"))
      r.eld_score = clamp01(j["eld_score"].get<double>());
    if (j.contains("annotation")) {
      const auto& a = j["annotation"];
      AnnotatedTranscript t = parse_tagged(a.at("tagged").get<std::string>());
      for (const auto& u : a.value("turns", json::array())) {
        auto role = role_from(u.at("role").get<std::string>());
        if (!role)
          throw AtcError(ErrorCode::MalformedRecord,
                         "unknown role " + u.at("role").get<std::string>());
        t.turns.push_back({*role, u.at("start").get<int>(),
                           u.at("end").get<int>()});
      }
      validate(t);
      r.annotation = std::move(t);
    }
    if (j.contains("quality_score"))
      r.quality_score = j["quality_score"].get<double>();
    if (j.contains("status")) apply_status_tag(r, j["status"]);
  } catch (const json::exception& e) {
    throw AtcError(ErrorCode::MalformedRecord,
                   "record " + r.id + ": " + e.what());
  }

  if (r.audio_len < 0 || r.speech_len < 0)
    throw AtcError(ErrorCode::InvariantViolation,
                   "record " + r.id + ": negative length");
  if (r.speech_len > r.audio_len)
    throw AtcError(ErrorCode::InvariantViolation,
                   "record " + r.id + ": speech_len > audio_len");
  r.wrd_cnt = static_cast<int>(r.transcript.size());
  return r;
}

std::string serialize_segment_record(const SegmentRecord& r) {
  json j;
  j["id"] = r.id;
  if (!r.airport_icao.empty()) j["airport_icao"] = r.airport_icao;
  if (r.frequency_hz) j["frequency_hz"] = *r.frequency_hz;
  if (r.captured_at) j["captured_at"] = format_utc(*r.captured_at);
  if (r.audio) j["audio"] = *r.audio;
  j["audio_len"] = r.audio_len;
  j["speech_len"] = r.speech_len;
  if (r.avg_snr) j["avg_snr"] = *r.avg_snr;
  if (r.num_spk) j["num_spk"] = *r.num_spk;
  if (r.lattice) j["lattice"] = r.lattice->serialize();
  if (!r.transcript.empty()) j["transcript"] = transcript_to_json(r.transcript);
  if (r.avg_word_conf) j["avg_word_conf"] = *r.avg_word_conf;
  j["wrd_cnt"] = r.wrd_cnt;
  if (r.eld_score) j["eld_score"] = *r.eld_score;
  if (r.annotation) {
    json a;
    a["tagged"] = render_tagged(*r.annotation);
    json turns = json::array();
    for (const auto& u : r.annotation->turns)
      turns.push_back({{"role", std::string(to_string_view(u.role))},
                       {"start", u.start},
                       {"end", u.end}});
    a["turns"] = std::move(turns);
    j["annotation"] = std::move(a);
  }
  if (r.quality_score) j["quality_score"] = *r.quality_score;
  j["status"] = status_tag(r);
  return j.dump();
}

std::vector<SegmentRecord> read_records_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AtcError(ErrorCode::IoError, "cannot open " + path);
  std::vector<SegmentRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(parse_segment_record(line));
  }
  return records;
}

void write_records_jsonl(const std::string& path,
                         const std::vector<SegmentRecord>& records) {
  std::ofstream out(path);
  if (!out) throw AtcError(ErrorCode::IoError, "cannot write " + path);
  for (const auto& r : records) out << serialize_segment_record(r) << '\n';
}

std::string format_utc(std::int64_t epoch_s) {
  const std::int64_t days = epoch_s / 86400 - (epoch_s % 86400 < 0 ? 1 : 0);
  std::int64_t rem = epoch_s - days * 86400;
  // civil-from-days (Howard Hinnant's algorithm)
  std::int64_t z = days + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = yoe + era * 400;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  const std::int64_t d = doy - (153 * mp + 2) / 5 + 1;
  const std::int64_t m = mp < 10 ? mp + 3 : mp - 9;
  const std::int64_t year = y + (m <= 2 ? 1 : 0);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02lld-%02lldT%02lld:%02lld:%02lldZ",
                static_cast<long long>(year), static_cast<long long>(m),
                static_cast<long long>(d), static_cast<long long>(rem / 3600),
                static_cast<long long>((rem % 3600) / 60),
                static_cast<long long>(rem % 60));
  return buf;
}

std::int64_t parse_utc(const std::string& iso) {
  int y, mo, d, h, mi, s;
  if (std::sscanf(iso.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi,
                  &s) != 6)
    throw AtcError(ErrorCode::MalformedRecord, "bad timestamp: " + iso);
  // days-from-civil
  const std::int64_t yy = y - (mo <= 2 ? 1 : 0);
  const std::int64_t era = (yy >= 0 ? yy : yy - 399) / 400;
  const std::int64_t yoe = yy - era * 400;
  const std::int64_t doy = (153 * (mo > 2 ? mo - 3 : mo + 9) + 2) / 5 + d - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  const std::int64_t days = era * 146097 + doe - 719468;
  return days * 86400 + h * 3600 + mi * 60 + s;
}

bool looks_like_callsign(const std::string& code) {
  static const std::regex airline(R"([A-Z]{2,3}[A-Z0-9]+)");
  static const std::regex registration(R"([A-Z]{1,2}-?[A-Z0-9]{2,5})");
  return std::regex_match(code, airline) ||
         std::regex_match(code, registration);
}

ContextList read_context_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AtcError(ErrorCode::IoError, "cannot open " + path);
  ContextList ctx;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string code, from, to;
    std::getline(row, code, ',');
    std::getline(row, from, ',');
    std::getline(row, to, ',');
    if (first && !looks_like_callsign(code)) {
      first = false;  // header row
      continue;
    }
    first = false;
    if (!looks_like_callsign(code))
      throw AtcError(ErrorCode::MalformedRecord, "bad callsign code: " + code);
    ctx.callsigns.push_back(code);
    if (!from.empty() && !ctx.valid_from) ctx.valid_from = parse_utc(from);
    if (!to.empty() && !ctx.valid_to) ctx.valid_to = parse_utc(to);
  }
  return ctx;
}

}  // namespace atc2
