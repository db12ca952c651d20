#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "atc2/eld.hpp"
#include "atc2/lattice.hpp"
#include "atc2/model.hpp"
#include "atc2/textnorm.hpp"
#include "atc2/understand.hpp"

namespace atc2 {

// One node of the processing graph. Regular blocks run a named operation
// over the record; gate blocks compare a record field against a threshold
// (literal or looked up in JobSettings) and short-circuit the job with the
// given reason when the comparison fails.
struct Block {
  std::string name;
  std::string op;  // "vad","snr","decode","confidence","eld","entities","quality","gate"
  std::string field;              // gates: record field to test
  std::string cmp;                // gates: one of >=, <=, >, <
  std::optional<double> threshold;
  std::string threshold_setting;  // gates: JobSettings key, overrides literal
  std::string reason;             // gates: terminal reason on failure
};

struct PipelineConfig {
  std::vector<Block> blocks;                        // declaration order kept
  std::vector<std::pair<std::string, std::string>> edges;
  int parallelism = 1;

  static PipelineConfig default_config();
  static PipelineConfig parse_json(const std::string& text);
  std::string to_json() const;

  // Topological order (stable w.r.t. declaration order). Throws
  // ConfigCycle, UnknownBlock (op or edge endpoint), InvalidConfig
  // (unreachable blocks, bad gate spec, several sources).
  std::vector<int> validate_and_order() const;
};

struct JobSettings {
  std::string audio_format = "pcm_f64";
  double min_len_s = 1.0;
  double max_len_s = 60.0;
  double min_snr_db = 5.0;
  double min_eld_score = 0.5;
  std::string asr_language = "en";

  static JobSettings parse_json(const std::string& text);
  std::string to_json() const;
  double setting(const std::string& key) const;  // InvalidConfig if unknown
};

enum class CallbackKind { Progress, Ok, Error };

constexpr std::string_view to_string_view(CallbackKind k) {
  switch (k) {
    case CallbackKind::Progress: return "PROGRESS";
    case CallbackKind::Ok: return "OK";
    case CallbackKind::Error: return "ERROR";
  }
  return "?";
}

struct CallbackEvent {
  std::string job_id;
  std::string stage;
  CallbackKind kind = CallbackKind::Progress;
  std::string reason;   // set on ERROR
  std::int64_t ts = 0;  // record capture time (0 when unknown), so that
                        // identical inputs yield identical event streams
};

class CallbackSink {
 public:
  virtual ~CallbackSink() = default;
  virtual void emit(const CallbackEvent& ev) = 0;
};

// Appends one JSON object per event; thread-safe.
class FileCallbackSink : public CallbackSink {
 public:
  explicit FileCallbackSink(std::string path) : path_(std::move(path)) {}
  void emit(const CallbackEvent& ev) override;

 private:
  std::string path_;
  std::mutex mu_;
};

// POSTs each event to the configured URL; failures are retried three
// times, then logged to stderr. Never fails the job.
class HttpCallbackSink : public CallbackSink {
 public:
  explicit HttpCallbackSink(std::string url) : url_(std::move(url)) {}
  void emit(const CallbackEvent& ev) override;

 private:
  std::string url_;
  std::mutex mu_;
};

// In-memory collector for tests; thread-safe.
class MemoryCallbackSink : public CallbackSink {
 public:
  void emit(const CallbackEvent& ev) override {
    std::lock_guard<std::mutex> lock(mu_);
    events_.push_back(ev);
  }
  std::vector<CallbackEvent> events() const {
    std::lock_guard<std::mutex> lock(mu_);
    return events_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<CallbackEvent> events_;
};

std::string callback_to_json(const CallbackEvent& ev);

struct StageTiming {
  std::vector<std::pair<std::string, double>> stages;  // (name, seconds)
  double total = 0.0;
  double audio_len = 0.0;

  double rtf() const { return audio_len > 0 ? total / audio_len : 0.0; }
};

// Per-stage share of total, rounded to two decimals (so the values are
// exactly what the report prints). Throws InvalidConfig when total <= 0.
std::vector<double> stage_percentages(const StageTiming& t);

// Fixed-width text table: stage, seconds (3 decimals), percent
// (2 decimals), then a total row and an rtf line.
std::string timing_report(const StageTiming& t);

// Cross-job resources a run may carry: a prebuilt biasing transducer for
// the decode block, the English detector for the eld block (falls back to
// a small built-in detector when none is supplied), and the surveillance
// context + airline table the entities block hands to the tagger.
struct RunResources {
  std::shared_ptr<const BiasingFst> bias;
  std::shared_ptr<const EldModel> eld;
  std::shared_ptr<const ContextList> context;
  std::shared_ptr<const AirlineTable> airlines;
  std::shared_ptr<const PhraseologyGrammar> grammar;
};

struct JobResult {
  SegmentRecord record;
  StageTiming timing;
  CallbackEvent terminal;
};

// Runs one record through the graph in topological order, emitting a
// PROGRESS event after each completed block and exactly one terminal OK /
// ERROR event. A failed gate (or a block raising AtcError) short-circuits
// the remaining blocks; the record comes back with status error:<REASON>.
// Config problems (cycle, unknown op) throw instead, before any callback.
JobResult run_job(const SegmentRecord& record, const PipelineConfig& cfg,
                  const JobSettings& js, CallbackSink& sink,
                  const RunResources& res = {});

// Worker pool over independent jobs; output order matches input order.
// `cfg.parallelism` threads (at least 1) share the callback sink.
std::vector<JobResult> run_jobs(const std::vector<SegmentRecord>& records,
                                const PipelineConfig& cfg,
                                const JobSettings& js, CallbackSink& sink,
                                const RunResources& res = {});

// The detector used when RunResources carries none: trained once on the
// built-in bilingual seed corpus, deterministic across runs.
std::shared_ptr<const EldModel> builtin_eld_model();

}  // namespace atc2
