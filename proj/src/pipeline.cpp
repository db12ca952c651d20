#include "atc2/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "atc2/error.hpp"
#include "atc2/quality.hpp"
#include "atc2/signal.hpp"
#include "atc2/synth.hpp"

namespace atc2 {

using nlohmann::json;

namespace {

const std::set<std::string>& known_ops() {
  static const std::set<std::string> ops = {
      "vad", "snr", "decode", "confidence", "eld", "entities", "quality",
      "gate"};
  return ops;
}

const std::set<std::string>& gate_fields() {
  static const std::set<std::string> fields = {
      "audio_len", "speech_len", "wrd_cnt",      "avg_snr",
      "num_spk",   "eld_score",  "avg_word_conf", "quality_score"};
  return fields;
}

const std::set<std::string>& setting_keys() {
  static const std::set<std::string> keys = {"min_len_s", "max_len_s",
                                             "min_snr_db", "min_eld_score"};
  return keys;
}

Block gate(std::string name, std::string field, std::string cmp,
           std::string setting, std::string reason) {
  Block b;
  b.name = std::move(name);
  b.op = "gate";
  b.field = std::move(field);
  b.cmp = std::move(cmp);
  b.threshold_setting = std::move(setting);
  b.reason = std::move(reason);
  return b;
}

bool post_json(const std::string& host, int port, const std::string& path,
               const std::string& body) {
  httplib::Client client(host, port);
  client.set_connection_timeout(2, 0);
  client.set_read_timeout(2, 0);
  auto res = client.Post(path, body, "application/json");
  return res && res->status >= 200 && res->status < 300;
}

}  // namespace

PipelineConfig PipelineConfig::default_config() {
  PipelineConfig cfg;
  auto op = [](std::string name) {
    Block b;
    b.op = name;
    b.name = std::move(name);
    return b;
  };
  cfg.blocks = {
      op("vad"),
      op("snr"),
      gate("gate_snr", "avg_snr", ">=", "min_snr_db", "TOO_NOISY"),
      gate("gate_min_len", "audio_len", ">=", "min_len_s", "TOO_SHORT"),
      gate("gate_max_len", "audio_len", "<=", "max_len_s", "TOO_LONG"),
      op("decode"),
      op("confidence"),
      op("eld"),
      gate("gate_eld", "eld_score", ">=", "min_eld_score", "NON_ENGLISH"),
      op("entities"),
      op("quality"),
  };
  for (std::size_t i = 0; i + 1 < cfg.blocks.size(); ++i)
    cfg.edges.emplace_back(cfg.blocks[i].name, cfg.blocks[i + 1].name);
  return cfg;
}

PipelineConfig PipelineConfig::parse_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw AtcError(ErrorCode::InvalidConfig, e.what());
  }
  PipelineConfig cfg;
  try {
    cfg.parallelism = j.value("parallelism", 1);
    for (const auto& jb : j.at("blocks")) {
      Block b;
      b.name = jb.at("name").get<std::string>();
      b.op = jb.at("op").get<std::string>();
      b.field = jb.value("field", "");
      b.cmp = jb.value("cmp", "");
      if (jb.contains("threshold")) b.threshold = jb["threshold"].get<double>();
      b.threshold_setting = jb.value("threshold_setting", "");
      b.reason = jb.value("reason", "");
      cfg.blocks.push_back(std::move(b));
    }
    for (const auto& je : j.value("edges", json::array())) {
      if (!je.is_array() || je.size() != 2)
        throw AtcError(ErrorCode::InvalidConfig, "edge must be a [from,to] pair");
      cfg.edges.emplace_back(je[0].get<std::string>(),
                             je[1].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw AtcError(ErrorCode::InvalidConfig, e.what());
  }
  return cfg;
}

std::string PipelineConfig::to_json() const {
  json j;
  j["parallelism"] = parallelism;
  j["blocks"] = json::array();
  for (const auto& b : blocks) {
    json jb;
    jb["name"] = b.name;
    jb["op"] = b.op;
    if (!b.field.empty()) jb["field"] = b.field;
    if (!b.cmp.empty()) jb["cmp"] = b.cmp;
    if (b.threshold) jb["threshold"] = *b.threshold;
    if (!b.threshold_setting.empty())
      jb["threshold_setting"] = b.threshold_setting;
    if (!b.reason.empty()) jb["reason"] = b.reason;
    j["blocks"].push_back(std::move(jb));
  }
  j["edges"] = json::array();
  for (const auto& [from, to] : edges) j["edges"].push_back({from, to});
  return j.dump(2);
}

std::vector<int> PipelineConfig::validate_and_order() const {
  const int n = static_cast<int>(blocks.size());
  if (n == 0) throw AtcError(ErrorCode::InvalidConfig, "config has no blocks");
  if (parallelism < 1)
    throw AtcError(ErrorCode::InvalidConfig, "parallelism must be >= 1");

  std::map<std::string, int> index;
  for (int i = 0; i < n; ++i) {
    const Block& b = blocks[i];
    if (b.name.empty())
      throw AtcError(ErrorCode::InvalidConfig, "block with empty name");
    if (!index.emplace(b.name, i).second)
      throw AtcError(ErrorCode::InvalidConfig,
                     "duplicate block name '" + b.name + "'");
    if (!known_ops().count(b.op))
      throw AtcError(ErrorCode::UnknownBlock,
                     "unknown op '" + b.op + "' in block '" + b.name + "'");
    if (b.op == "gate") {
      if (!gate_fields().count(b.field))
        throw AtcError(ErrorCode::InvalidConfig,
                       "gate '" + b.name + "' tests unknown field '" +
                           b.field + "'");
      if (b.cmp != ">=" && b.cmp != "<=" && b.cmp != ">" && b.cmp != "<")
        throw AtcError(ErrorCode::InvalidConfig,
                       "gate '" + b.name + "' has bad comparator '" + b.cmp +
                           "'");
      if (!b.threshold && b.threshold_setting.empty())
        throw AtcError(ErrorCode::InvalidConfig,
                       "gate '" + b.name + "' has no threshold");
      if (!b.threshold_setting.empty() &&
          !setting_keys().count(b.threshold_setting))
        throw AtcError(ErrorCode::InvalidConfig,
                       "gate '" + b.name + "' references unknown setting '" +
                           b.threshold_setting + "'");
      if (b.reason.empty())
        throw AtcError(ErrorCode::InvalidConfig,
                       "gate '" + b.name + "' has no failure reason");
    }
  }

  std::vector<std::vector<int>> succ(n);
  std::vector<int> indeg(n, 0);
  for (const auto& [from, to] : edges) {
    auto fi = index.find(from);
    auto ti = index.find(to);
    if (fi == index.end())
      throw AtcError(ErrorCode::UnknownBlock, "edge from unknown block '" +
                                                  from + "'");
    if (ti == index.end())
      throw AtcError(ErrorCode::UnknownBlock,
                     "edge to unknown block '" + to + "'");
    succ[fi->second].push_back(ti->second);
    ++indeg[ti->second];
  }

  int sources = 0;
  for (int i = 0; i < n; ++i) sources += indeg[i] == 0 ? 1 : 0;
  if (sources != 1)
    throw AtcError(ErrorCode::InvalidConfig,
                   sources == 0 ? "no source block (every block has inputs)"
                                : "blocks unreachable from the source");

  // Kahn's algorithm; ready blocks taken in declaration order so the
  // result is stable for a given config file.
  std::vector<int> order;
  std::vector<int> deg = indeg;
  std::vector<bool> done(n, false);
  for (int step = 0; step < n; ++step) {
    int pick = -1;
    for (int i = 0; i < n; ++i) {
      if (!done[i] && deg[i] == 0) {
        pick = i;
        break;
      }
    }
    if (pick < 0) throw AtcError(ErrorCode::ConfigCycle, "config graph has a cycle");
    done[pick] = true;
    order.push_back(pick);
    for (int s : succ[pick]) --deg[s];
  }
  return order;
}

JobSettings JobSettings::parse_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw AtcError(ErrorCode::InvalidConfig, e.what());
  }
  JobSettings s;
  try {
    s.audio_format = j.value("audio_format", s.audio_format);
    s.min_len_s = j.value("min_len_s", s.min_len_s);
    s.max_len_s = j.value("max_len_s", s.max_len_s);
    s.min_snr_db = j.value("min_snr_db", s.min_snr_db);
    s.min_eld_score = j.value("min_eld_score", s.min_eld_score);
    s.asr_language = j.value("asr_language", s.asr_language);
  } catch (const json::exception& e) {
    throw AtcError(ErrorCode::InvalidConfig, e.what());
  }
  if (!(s.min_len_s < s.max_len_s))
    throw AtcError(ErrorCode::InvalidConfig, "min_len_s must be < max_len_s");
  if (s.min_eld_score < 0.0 || s.min_eld_score > 1.0)
    throw AtcError(ErrorCode::InvalidConfig, "min_eld_score must be in [0,1]");
  return s;
}

std::string JobSettings::to_json() const {
  json j;
  j["audio_format"] = audio_format;
  j["min_len_s"] = min_len_s;
  j["max_len_s"] = max_len_s;
  j["min_snr_db"] = min_snr_db;
  j["min_eld_score"] = min_eld_score;
  j["asr_language"] = asr_language;
  return j.dump(2);
}

double JobSettings::setting(const std::string& key) const {
  if (key == "min_len_s") return min_len_s;
  if (key == "max_len_s") return max_len_s;
  if (key == "min_snr_db") return min_snr_db;
  if (key == "min_eld_score") return min_eld_score;
  throw AtcError(ErrorCode::InvalidConfig, "unknown setting '" + key + "'");
}

std::string callback_to_json(const CallbackEvent& ev) {
  json j;
  j["job_id"] = ev.job_id;
  j["stage"] = ev.stage;
  j["kind"] = std::string(to_string_view(ev.kind));
  j["reason"] = ev.reason;
  j["ts"] = ev.ts;
  return j.dump();
}

void FileCallbackSink::emit(const CallbackEvent& ev) {
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(path_, std::ios::app);
  if (!out) {
    std::cerr << "callback file '" << path_ << "' not writable\n";
    return;
  }
  out << callback_to_json(ev) << '\n';
}

void HttpCallbackSink::emit(const CallbackEvent& ev) {
  std::lock_guard<std::mutex> lock(mu_);
  static const std::regex url_re(R"(^http://([^/:]+)(?::(\d+))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url_, m, url_re)) {
    std::cerr << "callback url '" << url_ << "' not supported\n";
    return;
  }
  const std::string host = m[1];
  const int port = m[2].matched ? std::stoi(m[2]) : 80;
  const std::string path = m[3].matched ? std::string(m[3]) : "/";
  const std::string body = callback_to_json(ev);
  for (int attempt = 0; attempt < 3; ++attempt) {
    if (post_json(host, port, path, body)) return;
  }
  std::cerr << "callback delivery to " << url_ << " failed after 3 attempts\n";
}

std::vector<double> stage_percentages(const StageTiming& t) {
  if (t.total <= 0.0)
    throw AtcError(ErrorCode::InvalidConfig, "timing total must be positive");
  std::vector<double> out;
  out.reserve(t.stages.size());
  for (const auto& [name, sec] : t.stages) {
    (void)name;
    out.push_back(std::round(sec / t.total * 10000.0) / 100.0);
  }
  return out;
}

std::string timing_report(const StageTiming& t) {
  const std::vector<double> pct = stage_percentages(t);
  std::size_t width = 12;
  for (const auto& [name, sec] : t.stages) {
    (void)sec;
    width = std::max(width, name.size());
  }
  std::ostringstream os;
  char buf[64];
  auto row = [&](const std::string& name, double sec, double p) {
    os << name << std::string(width - name.size() + 2, ' ');
    std::snprintf(buf, sizeof(buf), "%9.3f  %6.2f\n", sec, p);
    os << buf;
  };
  os << "stage" << std::string(width - 5 + 2, ' ');
  std::snprintf(buf, sizeof(buf), "%9s  %6s\n", "seconds", "%");
  os << buf;
  for (std::size_t i = 0; i < t.stages.size(); ++i)
    row(t.stages[i].first, t.stages[i].second, pct[i]);
  row("total", t.total, 100.0);
  std::snprintf(buf, sizeof(buf), "rtf  %.3f\n", t.rtf());
  os << buf;
  return os.str();
}

namespace {

constexpr int kSampleRate = 16000;

std::optional<double> field_value(const SegmentRecord& r,
                                  const std::string& field) {
  if (field == "audio_len") return r.audio_len;
  if (field == "speech_len") return r.speech_len;
  if (field == "wrd_cnt") return static_cast<double>(r.wrd_cnt);
  if (field == "avg_snr") return r.avg_snr;
  if (field == "num_spk")
    return r.num_spk ? std::optional<double>(*r.num_spk) : std::nullopt;
  if (field == "eld_score") return r.eld_score;
  if (field == "avg_word_conf") return r.avg_word_conf;
  if (field == "quality_score") return r.quality_score;
  return std::nullopt;
}

bool compare(double value, const std::string& cmp, double threshold) {
  if (cmp == ">=") return value >= threshold;
  if (cmp == "<=") return value <= threshold;
  if (cmp == ">") return value > threshold;
  return value < threshold;
}

struct JobScratch {
  std::vector<VadSegment> segments;
};

// Runs one block over the record. Returns the failure reason when a gate
// rejects, empty string otherwise. Ops signal hard failures via AtcError.
std::string run_block(const Block& b, SegmentRecord& r, const JobSettings& js,
                      const RunResources& res, JobScratch& scratch) {
  if (b.op == "gate") {
    const double threshold = b.threshold_setting.empty()
                                 ? *b.threshold
                                 : js.setting(b.threshold_setting);
    const std::optional<double> value = field_value(r, b.field);
    if (!value)
      throw AtcError(ErrorCode::MissingField,
                     "gate '" + b.name + "' needs field '" + b.field + "'");
    return compare(*value, b.cmp, threshold) ? "" : b.reason;
  }
  if (b.op == "vad") {
    if (r.audio) {
      if (r.audio->empty()) throw AtcError(ErrorCode::EmptyAudio, r.id);
      scratch.segments = vad(*r.audio, kSampleRate);
      r.audio_len =
          static_cast<double>(r.audio->size()) / kSampleRate;
      r.speech_len = speech_length(scratch.segments);
    } else if (r.audio_len <= 0.0) {
      throw AtcError(ErrorCode::EmptyAudio, r.id);
    }
    return "";
  }
  if (b.op == "snr") {
    if (r.audio)
      r.avg_snr = estimate_snr(*r.audio, kSampleRate, scratch.segments);
    return "";
  }
  if (b.op == "decode") {
    if (r.lattice) {
      const Lattice working =
          res.bias ? compose_bias(*r.lattice, *res.bias) : *r.lattice;
      const BestPath bp = best_path(working);
      const std::vector<double> post = word_posteriors(working);
      r.transcript.clear();
      for (std::size_t i = 0; i < bp.tokens.size(); ++i)
        r.transcript.push_back(
            {bp.tokens[i], post[bp.arc_indices[i]]});
    } else if (r.transcript.empty()) {
      throw AtcError(ErrorCode::MissingField,
                     "record '" + r.id + "' has neither lattice nor transcript");
    }
    r.wrd_cnt = static_cast<int>(r.transcript.size());
    return "";
  }
  if (b.op == "confidence") {
    double sum = 0.0;
    for (const auto& t : r.transcript) sum += t.conf;
    r.avg_word_conf =
        r.transcript.empty() ? 0.0 : sum / static_cast<double>(r.transcript.size());
    return "";
  }
  if (b.op == "eld") {
    const std::shared_ptr<const EldModel> model =
        res.eld ? res.eld : builtin_eld_model();
    r.eld_score = model->score(r.transcript);
    return "";
  }
  if (b.op == "entities") {
    static const AirlineTable default_airlines = default_airline_table();
    static const PhraseologyGrammar default_grammar =
        PhraseologyGrammar::builtin(default_airlines);
    const AirlineTable& airlines =
        res.airlines ? *res.airlines : default_airlines;
    const PhraseologyGrammar& grammar =
        res.grammar ? *res.grammar : default_grammar;
    const ContextList* context = res.context.get();
    if (context && r.captured_at && !context->active_at(*r.captured_at))
      context = nullptr;
    AnnotatedTranscript t =
        understand(r.transcript_words(), grammar, context, &airlines);
    std::set<Role> roles;
    for (const auto& turn : t.turns) roles.insert(turn.role);
    r.num_spk = std::max<int>(1, static_cast<int>(roles.size()));
    r.annotation = std::move(t);
    return "";
  }
  if (b.op == "quality") {
    r.quality_score = quality_breakdown(r).total;
    return "";
  }
  throw AtcError(ErrorCode::UnknownBlock, b.op);
}

}  // namespace

JobResult run_job(const SegmentRecord& record, const PipelineConfig& cfg,
                  const JobSettings& js, CallbackSink& sink,
                  const RunResources& res) {
  const std::vector<int> order = cfg.validate_and_order();

  JobResult result;
  result.record = record;
  result.record.status = SegmentStatus::Pending;
  result.record.error_reason.clear();
  result.timing.audio_len = record.audio_len;

  SegmentRecord& r = result.record;
  const std::int64_t ts = record.captured_at.value_or(0);
  JobScratch scratch;

  std::string last_stage;
  for (int bi : order) {
    const Block& b = cfg.blocks[bi];
    const auto t0 = std::chrono::steady_clock::now();
    std::string fail;
    try {
      fail = run_block(b, r, js, res, scratch);
    } catch (const AtcError& e) {
      result.timing.stages.emplace_back(
          b.name, std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                          .count());
      r.status = SegmentStatus::Error;
      r.error_reason = std::string(to_string_view(e.code()));
      result.terminal = {r.id, b.name, CallbackKind::Error, r.error_reason, ts};
      sink.emit(result.terminal);
      result.timing.total = 0.0;
      for (const auto& [name, sec] : result.timing.stages) {
        (void)name;
        result.timing.total += sec;
      }
      result.timing.audio_len = r.audio_len;
      return result;
    }
    result.timing.stages.emplace_back(
        b.name,
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count());
    if (!fail.empty()) {
      r.status = SegmentStatus::Error;
      r.error_reason = fail;
      result.terminal = {r.id, b.name, CallbackKind::Error, fail, ts};
      sink.emit(result.terminal);
      result.timing.total = 0.0;
      for (const auto& [name, sec] : result.timing.stages) {
        (void)name;
        result.timing.total += sec;
      }
      result.timing.audio_len = r.audio_len;
      return result;
    }
    sink.emit({r.id, b.name, CallbackKind::Progress, "", ts});
    last_stage = b.name;
  }

  r.status = SegmentStatus::Ok;
  result.terminal = {r.id, last_stage, CallbackKind::Ok, "", ts};
  sink.emit(result.terminal);
  result.timing.total = 0.0;
  for (const auto& [name, sec] : result.timing.stages) {
    (void)name;
    result.timing.total += sec;
  }
  result.timing.audio_len = r.audio_len;
  return result;
}

std::vector<JobResult> run_jobs(const std::vector<SegmentRecord>& records,
                                const PipelineConfig& cfg,
                                const JobSettings& js, CallbackSink& sink,
                                const RunResources& res) {
  cfg.validate_and_order();  // config errors surface before any callback
  std::vector<JobResult> results(records.size());
  if (records.empty()) return results;

  const int workers = std::max(
      1, std::min(cfg.parallelism, static_cast<int>(records.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto body = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= records.size()) return;
      try {
        results[i] = run_job(records[i], cfg, js, sink, res);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

std::shared_ptr<const EldModel> builtin_eld_model() {
  static const std::shared_ptr<const EldModel> model = [] {
    EldModel::TrainOptions opts;
    opts.seed = 7;
    return std::make_shared<const EldModel>(
        EldModel::train(make_bilingual_corpus(120, 7), opts));
  }();
  return model;
}

}  // namespace atc2
