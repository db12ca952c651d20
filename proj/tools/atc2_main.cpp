#include <array>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "atc2/eld.hpp"
#include "atc2/error.hpp"
#include "atc2/lattice.hpp"
#include "atc2/lifecycle.hpp"
#include "atc2/metrics.hpp"
#include "atc2/model.hpp"
#include "atc2/pipeline.hpp"
#include "atc2/quality.hpp"
#include "atc2/synth.hpp"
#include "atc2/textnorm.hpp"
#include "atc2/understand.hpp"

using nlohmann::json;

namespace {

using namespace atc2;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AtcError(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class NullSink : public CallbackSink {
 public:
  void emit(const CallbackEvent&) override {}
};

std::unique_ptr<CallbackSink> make_sink(const std::string& spec) {
  if (spec.empty() || spec == "none") return std::make_unique<NullSink>();
  if (spec.rfind("http://", 0) == 0)
    return std::make_unique<HttpCallbackSink>(spec);
  return std::make_unique<FileCallbackSink>(spec);
}

AirlineTable airlines_from(const std::string& path) {
  return path.empty() ? default_airline_table() : load_airline_table_csv(path);
}

// "id,code" rows, header optional.
std::map<std::string, std::string> read_gt_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AtcError(ErrorCode::IoError, "cannot open " + path);
  std::map<std::string, std::string> gt;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line.empty() || line == "id,code" || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw AtcError(ErrorCode::MalformedRecord, "expected id,code row: " + line);
    gt[line.substr(0, comma)] = line.substr(comma + 1);
  }
  return gt;
}

void decode_into(SegmentRecord& rec, const BiasingFst* bias) {
  if (!rec.lattice) return;
  const Lattice working =
      bias ? compose_bias(*rec.lattice, *bias) : *rec.lattice;
  const BestPath bp = best_path(working);
  const std::vector<double> post = word_posteriors(working);
  rec.transcript.clear();
  for (std::size_t i = 0; i < bp.tokens.size(); ++i)
    rec.transcript.push_back({bp.tokens[i], post[bp.arc_indices[i]]});
  rec.wrd_cnt = static_cast<int>(rec.transcript.size());
  double sum = 0.0;
  for (const auto& t : rec.transcript) sum += t.conf;
  rec.avg_word_conf =
      rec.transcript.empty() ? 0.0 : sum / static_cast<double>(rec.transcript.size());
}

int cmd_gen(const std::string& spec_path, const std::string& out_dir) {
  SynthSpec spec;
  if (!spec_path.empty()) spec = SynthSpec::parse_json(slurp(spec_path));
  const SynthCorpus corpus = generate_corpus(spec);
  write_corpus(corpus, out_dir);
  std::cerr << "wrote " << corpus.records.size() << " records ("
            << corpus.gt_callsigns.size() << " with callsigns, pool "
            << corpus.context.callsigns.size() << ") to " << out_dir << "\n";
  return 0;
}

int cmd_process(const std::string& config_path, const std::string& settings_path,
                const std::string& in_path, const std::string& out_path,
                const std::string& callbacks, const std::string& context_path,
                const std::string& eld_model_path,
                const std::string& airlines_path,
                const std::string& timing_out) {
  const PipelineConfig cfg = config_path.empty()
                                 ? PipelineConfig::default_config()
                                 : PipelineConfig::parse_json(slurp(config_path));
  const JobSettings js = settings_path.empty()
                             ? JobSettings()
                             : JobSettings::parse_json(slurp(settings_path));
  cfg.validate_and_order();

  RunResources res;
  if (!context_path.empty())
    res.context = std::make_shared<const ContextList>(read_context_csv(context_path));
  if (!eld_model_path.empty())
    res.eld = std::make_shared<const EldModel>(EldModel::load(eld_model_path));
  res.airlines = std::make_shared<const AirlineTable>(airlines_from(airlines_path));
  res.grammar = std::make_shared<const PhraseologyGrammar>(
      PhraseologyGrammar::builtin(*res.airlines));

  const std::vector<SegmentRecord> records = read_records_jsonl(in_path);
  const std::unique_ptr<CallbackSink> sink = make_sink(callbacks);
  const std::vector<JobResult> results = run_jobs(records, cfg, js, *sink, res);

  std::vector<SegmentRecord> out;
  out.reserve(results.size());
  int ok = 0;
  for (const auto& r : results) {
    ok += r.record.status == SegmentStatus::Ok ? 1 : 0;
    out.push_back(r.record);
  }
  write_records_jsonl(out_path, out);

  if (!timing_out.empty()) {
    std::ofstream tf(timing_out);
    if (!tf) throw AtcError(ErrorCode::IoError, "cannot write " + timing_out);
    for (const auto& r : results) {
      json j;
      j["job_id"] = r.record.id;
      j["audio_len"] = r.timing.audio_len;
      j["stages"] = json::array();
      for (const auto& [name, sec] : r.timing.stages)
        j["stages"].push_back({name, sec});
      tf << j.dump() << '\n';
    }
  }
  std::cerr << "processed " << results.size() << " records: " << ok << " ok, "
            << results.size() - ok << " error\n";
  return 0;
}

int cmd_rank(const std::string& in_path, double top_hours,
             const std::string& out_path) {
  const std::vector<SegmentRecord> records = read_records_jsonl(in_path);
  const Selection sel = rank_and_select(records, top_hours);
  std::cout << funnel_report(sel);
  if (!out_path.empty()) {
    std::set<std::string> keep;
    for (const auto& s : sel.selected) keep.insert(s.id);
    std::vector<SegmentRecord> out;
    for (const auto& r : records)
      if (keep.count(r.id)) out.push_back(r);
    write_records_jsonl(out_path, out);
  }
  return 0;
}

int cmd_boost(const std::string& in_path, const std::string& out_path,
              const std::string& context_path, double discount,
              const std::string& mode, const std::string& airlines_path) {
  const AirlineTable airlines = airlines_from(airlines_path);
  std::vector<SegmentRecord> records = read_records_jsonl(in_path);
  static const PhraseologyGrammar grammar = PhraseologyGrammar::builtin(
      default_airline_table());

  if (mode == "gt") {
    const std::map<std::string, std::string> gt = read_gt_csv(context_path);
    for (auto& rec : records) {
      const auto it = gt.find(rec.id);
      if (it == gt.end()) {
        decode_into(rec, nullptr);
      } else {
        const CallsignExpansion exp = expand_callsign(it->second, airlines);
        const BiasingFst fst = build_biasing_fst(
            expansions_to_ngrams({exp}, BoostMode::Ngram), discount);
        decode_into(rec, &fst);
      }
      if (!rec.transcript.empty())
        rec.annotation = understand(rec.transcript_words(), grammar);
    }
  } else {
    const BoostMode bm = mode == "unigram" ? BoostMode::Unigram : BoostMode::Ngram;
    if (mode != "unigram" && mode != "ngram" && mode != "none")
      throw AtcError(ErrorCode::InvalidConfig, "unknown boost mode '" + mode + "'");
    std::unique_ptr<BiasingFst> fst;
    if (mode != "none") {
      const ContextList ctx = read_context_csv(context_path);
      std::vector<CallsignExpansion> expansions;
      for (const auto& code : ctx.callsigns)
        expansions.push_back(expand_callsign(code, airlines));
      fst = std::make_unique<BiasingFst>(
          build_biasing_fst(expansions_to_ngrams(expansions, bm), discount));
    }
    for (auto& rec : records) {
      decode_into(rec, fst.get());
      if (!rec.transcript.empty())
        rec.annotation = understand(rec.transcript_words(), grammar);
    }
  }
  write_records_jsonl(out_path, records);
  std::cerr << "decoded " << records.size() << " records (mode " << mode
            << ", discount " << discount << ")\n";
  return 0;
}

std::vector<Role> token_roles(const AnnotatedTranscript& t) {
  std::vector<Role> roles(t.tokens.size(), Role::Atco);
  for (const auto& turn : t.turns)
    for (int i = turn.start; i < turn.end; ++i) roles[i] = turn.role;
  return roles;
}

int cmd_eval(const std::string& task, const std::string& hyp_path,
             const std::string& ref_path, const std::string& gt_path,
             const std::string& airlines_path) {
  const std::vector<SegmentRecord> hyps = read_records_jsonl(hyp_path);
  const std::vector<SegmentRecord> refs = read_records_jsonl(ref_path);
  std::map<std::string, const SegmentRecord*> ref_by_id;
  for (const auto& r : refs) ref_by_id[r.id] = &r;

  json out;
  out["task"] = task;
  int paired = 0, skipped = 0;

  if (task == "asr") {
    AlignmentResult total;
    AlignmentResult entity_total;
    int entity_utts = 0;
    for (const auto& h : hyps) {
      const auto it = ref_by_id.find(h.id);
      if (it == ref_by_id.end() || h.status == SegmentStatus::Error) {
        ++skipped;
        continue;
      }
      ++paired;
      total.add(wer(it->second->transcript_words(), h.transcript_words()));
      if (it->second->annotation) {
        try {
          entity_total.add(entity_wer(*it->second->annotation,
                                      h.transcript_words(),
                                      EntityLabel::Callsign));
          ++entity_utts;
        } catch (const AtcError& e) {
          if (e.code() != ErrorCode::NoEntities) throw;
        }
      }
    }
    out["wer"] = total.rate();
    out["hits"] = total.hits;
    out["substitutions"] = total.substitutions;
    out["deletions"] = total.deletions;
    out["insertions"] = total.insertions;
    out["ref_len"] = total.ref_len;
    if (entity_utts > 0) {
      out["entity_wer"] = entity_total.rate();
      out["entity_utterances"] = entity_utts;
    }
  } else if (task == "ner") {
    std::map<std::string, std::array<int, 3>> counts;  // label -> tp,fp,fn
    for (const auto& h : hyps) {
      const auto it = ref_by_id.find(h.id);
      if (it == ref_by_id.end() || !h.annotation || !it->second->annotation) {
        ++skipped;
        continue;
      }
      ++paired;
      for (EntityLabel label : {EntityLabel::Callsign, EntityLabel::Command,
                                EntityLabel::Value}) {
        std::set<std::pair<int, int>> r, y;
        for (const auto& s : it->second->annotation->entities)
          if (s.label == label) r.insert({s.start, s.end});
        for (const auto& s : h.annotation->entities)
          if (s.label == label) y.insert({s.start, s.end});
        auto& c = counts[std::string(to_string_view(label))];
        for (const auto& span : y) c[r.count(span) ? 0 : 1] += 1;
        for (const auto& span : r) c[2] += y.count(span) ? 0 : 1;
      }
    }
    for (const auto& [label, c] : counts) {
      const Prf p = prf(c[0], c[1], c[2]);
      out[label] = {{"precision", p.precision},
                    {"recall", p.recall},
                    {"f1", p.f1},
                    {"tp", c[0]},
                    {"fp", c[1]},
                    {"fn", c[2]}};
    }
    if (!gt_path.empty()) {
      const AirlineTable airlines = airlines_from(airlines_path);
      const std::map<std::string, std::string> gt = read_gt_csv(gt_path);
      std::vector<std::string> codes;
      std::vector<std::vector<std::string>> spans;
      int unmatched = 0;
      for (const auto& h : hyps) {
        const auto it = gt.find(h.id);
        if (it == gt.end()) continue;
        if (!h.annotation) {
          ++unmatched;
          continue;
        }
        const EntitySpan* first = nullptr;
        for (const auto& s : h.annotation->entities)
          if (s.label == EntityLabel::Callsign) {
            first = &s;
            break;
          }
        std::vector<std::string> tokens;
        if (first)
          tokens.assign(h.annotation->tokens.begin() + first->start,
                        h.annotation->tokens.begin() + first->end);
        codes.push_back(it->second);
        spans.push_back(std::move(tokens));
      }
      if (!codes.empty()) {
        out["callsign_accuracy"] = callsign_accuracy(codes, spans, airlines);
        out["callsign_evaluated"] = codes.size();
        out["callsign_unavailable"] = unmatched;
      }
    }
  } else if (task == "srd") {
    int agree = 0, total = 0, tp = 0, fp = 0, fn = 0;
    for (const auto& h : hyps) {
      const auto it = ref_by_id.find(h.id);
      if (it == ref_by_id.end() || !h.annotation || !it->second->annotation ||
          h.annotation->turns.empty() || it->second->annotation->turns.empty()) {
        ++skipped;
        continue;
      }
      ++paired;
      const std::vector<Role> hr = token_roles(*h.annotation);
      const std::vector<Role> rr = token_roles(*it->second->annotation);
      const std::size_t n = std::min(hr.size(), rr.size());
      for (std::size_t i = 0; i < n; ++i) {
        ++total;
        agree += hr[i] == rr[i] ? 1 : 0;
        if (hr[i] == Role::Atco && rr[i] == Role::Atco) ++tp;
        if (hr[i] == Role::Atco && rr[i] == Role::Pilot) ++fp;
        if (hr[i] == Role::Pilot && rr[i] == Role::Atco) ++fn;
      }
    }
    out["token_accuracy"] = total > 0 ? static_cast<double>(agree) / total : 0.0;
    const Prf p = prf(tp, fp, fn);
    out["atco_precision"] = p.precision;
    out["atco_recall"] = p.recall;
    out["atco_f1"] = p.f1;
    out["tokens"] = total;
  } else if (task == "diar") {
    double sum = 0.0;
    for (const auto& h : hyps) {
      const auto it = ref_by_id.find(h.id);
      if (it == ref_by_id.end() || !h.annotation || !it->second->annotation ||
          h.annotation->turns.empty() || it->second->annotation->turns.empty()) {
        ++skipped;
        continue;
      }
      ++paired;
      sum += jer(it->second->annotation->turns, h.annotation->turns);
    }
    out["jer_mean"] = paired > 0 ? sum / paired : 0.0;
  } else {
    throw AtcError(ErrorCode::InvalidConfig, "unknown eval task '" + task + "'");
  }

  out["evaluated"] = paired;
  out["skipped"] = skipped;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_report(const std::string& timing_path) {
  std::ifstream in(timing_path);
  if (!in) throw AtcError(ErrorCode::IoError, "cannot open " + timing_path);
  StageTiming agg;
  std::map<std::string, std::size_t> index;
  std::string line;
  int jobs = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw AtcError(ErrorCode::MalformedRecord, e.what());
    }
    ++jobs;
    agg.audio_len += j.value("audio_len", 0.0);
    for (const auto& st : j.at("stages")) {
      const std::string name = st.at(0).get<std::string>();
      const double sec = st.at(1).get<double>();
      auto [it, fresh] = index.emplace(name, agg.stages.size());
      if (fresh)
        agg.stages.emplace_back(name, sec);
      else
        agg.stages[it->second].second += sec;
      agg.total += sec;
    }
  }
  if (jobs == 0)
    throw AtcError(ErrorCode::MalformedRecord, "no timing entries in file");
  std::cout << timing_report(agg);
  return 0;
}

int cmd_lifecycle(const std::string& events_path, double stale_days,
                  double purge_days) {
  std::ifstream in(events_path);
  if (!in) throw AtcError(ErrorCode::IoError, "cannot open " + events_path);
  LifecycleOptions opts;
  opts.stale_age_days = stale_days;
  opts.dropped_purge_days = purge_days;

  std::map<std::string, AnnotationItem> items;
  int applied = 0, rejected = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw AtcError(ErrorCode::MalformedRecord, e.what());
    }
    std::string id, kind_name;
    std::int64_t now = 0;
    try {
      id = j.at("recording_id").get<std::string>();
      kind_name = j.at("event").get<std::string>();
      now = j.value("now", 0);
    } catch (const json::exception& e) {
      throw AtcError(ErrorCode::MalformedRecord, e.what());
    }
    const auto kind = lifecycle_event_from(kind_name);
    if (!kind)
      throw AtcError(ErrorCode::MalformedRecord, "unknown event '" + kind_name + "'");

    auto it = items.find(id);
    if (it == items.end()) {
      if (*kind == LifecycleEventKind::Push) {
        items.emplace(id, AnnotationItem::pushed(id, now));
        ++applied;
      } else {
        std::cerr << id << ": " << kind_name << " before Push rejected\n";
        ++rejected;
      }
      continue;
    }
    try {
      it->second = lifecycle_step(it->second, {*kind, now}, opts);
      ++applied;
    } catch (const AtcError& e) {
      if (e.code() != ErrorCode::IllegalTransition) throw;
      std::cerr << id << ": " << kind_name << " in state "
                << to_string_view(it->second.state) << " rejected\n";
      ++rejected;
    }
  }

  for (const auto& [id, item] : items) {
    json j;
    j["recording_id"] = id;
    j["state"] = std::string(to_string_view(item.state));
    j["thumbs_down"] = item.thumbs_down;
    j["anonymize"] = item.anonymize;
    std::cout << j.dump() << "\n";
  }
  std::cerr << applied << " events applied, " << rejected << " rejected\n";
  return 0;
}

int cmd_train(const std::string& in_path, int bilingual_n, std::uint64_t seed,
              double frac, int epochs, double lr, double l2,
              const std::string& out_path) {
  std::vector<EldModel::LabelledUtterance> corpus;
  if (!in_path.empty()) {
    std::ifstream in(in_path);
    if (!in) throw AtcError(ErrorCode::IoError, "cannot open " + in_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(line);
        EldModel::LabelledUtterance u;
        u.positive = j.at("positive").get<bool>();
        for (const auto& w : j.at("words")) {
          if (w.is_string())
            u.words.push_back({w.get<std::string>(), 1.0});
          else
            u.words.push_back({w.at("word").get<std::string>(),
                               w.value("conf", 1.0)});
        }
        corpus.push_back(std::move(u));
      } catch (const json::exception& e) {
        throw AtcError(ErrorCode::MalformedRecord, e.what());
      }
    }
  } else {
    corpus = make_bilingual_corpus(bilingual_n, seed, frac);
  }

  EldModel::TrainOptions opts;
  opts.epochs = epochs;
  opts.learning_rate = lr;
  opts.l2 = l2;
  opts.seed = seed;
  const EldModel model = EldModel::train(corpus, opts);
  model.save(out_path);

  int correct = 0;
  for (const auto& u : corpus)
    correct += model.decide(u.words) == u.positive ? 1 : 0;
  json j;
  j["utterances"] = corpus.size();
  j["vocabulary"] = model.vocabulary().size();
  j["train_accuracy"] = static_cast<double>(correct) / corpus.size();
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ATC speech-data pipeline tools"};
  app.require_subcommand(1);

  // gen
  std::string gen_spec, gen_out;
  auto* gen = app.add_subcommand("gen", "generate a synthetic corpus");
  gen->add_option("--spec", gen_spec, "generator spec JSON");
  gen->add_option("--out", gen_out, "output directory")->required();

  // process
  std::string p_config, p_settings, p_in, p_out, p_callbacks, p_context,
      p_eld, p_airlines, p_timing;
  auto* process = app.add_subcommand("process", "run records through the pipeline");
  process->add_option("--config", p_config, "pipeline config JSON");
  process->add_option("--settings", p_settings, "job settings JSON");
  process->add_option("--in", p_in, "input records JSONL")->required();
  process->add_option("--out", p_out, "output records JSONL")->required();
  process->add_option("--callbacks", p_callbacks,
                      "event sink: file path, http:// URL, or 'none'");
  process->add_option("--context", p_context, "surveillance callsign CSV");
  process->add_option("--eld-model", p_eld, "trained language-detector JSON");
  process->add_option("--airlines", p_airlines, "airline telephony CSV");
  process->add_option("--timing-out", p_timing,
                      "per-job stage timing JSONL (wall clock, not "
                      "reproducible across runs)");

  // rank
  std::string r_in, r_out;
  double r_hours = 0.0;
  auto* rank = app.add_subcommand("rank", "rank processed records by quality");
  rank->add_option("--in", r_in, "processed records JSONL")->required();
  rank->add_option("--top-hours", r_hours, "speech-hour budget (<0: keep all)")
      ->required();
  rank->add_option("--out", r_out, "write selected records JSONL");

  // boost
  std::string b_in, b_out, b_context, b_mode = "ngram", b_airlines;
  double b_discount = -0.5;
  auto* boost = app.add_subcommand("boost", "decode lattices with callsign biasing");
  boost->add_option("--in", b_in, "records JSONL with lattices")->required();
  boost->add_option("--out", b_out, "output records JSONL")->required();
  boost->add_option("--context", b_context,
                    "callsign CSV (plain list, or id,code rows for --mode gt)");
  boost->add_option("--discount", b_discount, "per-token discount (<= 0)");
  boost->add_option("--mode", b_mode, "none | unigram | ngram | gt");
  boost->add_option("--airlines", b_airlines, "airline telephony CSV");

  // eval
  std::string e_task, e_hyp, e_ref, e_gt, e_airlines;
  auto* eval = app.add_subcommand("eval", "score hypotheses against references");
  eval->add_option("--task", e_task, "asr | ner | srd | diar")->required();
  eval->add_option("--hyp", e_hyp, "hypothesis records JSONL")->required();
  eval->add_option("--ref", e_ref, "reference records JSONL")->required();
  eval->add_option("--gt", e_gt, "id,code callsign CSV (ner task)");
  eval->add_option("--airlines", e_airlines, "airline telephony CSV");

  // report
  std::string t_timing;
  auto* report = app.add_subcommand("report", "aggregate stage timing");
  report->add_option("--timing", t_timing, "timing JSONL from process")
      ->required();

  // lifecycle
  std::string l_replay;
  double l_stale = 30.0, l_purge = 7.0;
  auto* lifecycle = app.add_subcommand("lifecycle", "replay annotation events");
  lifecycle->add_option("--replay", l_replay, "events JSONL")->required();
  lifecycle->add_option("--stale-days", l_stale, "queued-untouched drop age");
  lifecycle->add_option("--purge-days", l_purge, "dropped purge age");

  // train
  std::string tr_in, tr_out;
  int tr_n = 120, tr_epochs = 400;
  std::uint64_t tr_seed = 7;
  double tr_frac = 0.5, tr_lr = 0.5, tr_l2 = 1e-4;
  auto* train = app.add_subcommand("train", "train the linear text classifier");
  train->add_option("--in", tr_in, "labelled utterances JSONL");
  train->add_option("--bilingual", tr_n, "generate a two-language corpus of n");
  train->add_option("--seed", tr_seed, "corpus seed");
  train->add_option("--frac", tr_frac, "positive-class fraction");
  train->add_option("--epochs", tr_epochs, "training epochs");
  train->add_option("--lr", tr_lr, "learning rate");
  train->add_option("--l2", tr_l2, "l2 penalty");
  train->add_option("--out", tr_out, "model output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_spec, gen_out);
    if (process->parsed())
      return cmd_process(p_config, p_settings, p_in, p_out, p_callbacks,
                         p_context, p_eld, p_airlines, p_timing);
    if (rank->parsed()) return cmd_rank(r_in, r_hours, r_out);
    if (boost->parsed())
      return cmd_boost(b_in, b_out, b_context, b_discount, b_mode, b_airlines);
    if (eval->parsed()) return cmd_eval(e_task, e_hyp, e_ref, e_gt, e_airlines);
    if (report->parsed()) return cmd_report(t_timing);
    if (lifecycle->parsed()) return cmd_lifecycle(l_replay, l_stale, l_purge);
    if (train->parsed())
      return cmd_train(tr_in, tr_n, tr_seed, tr_frac, tr_epochs, tr_lr, tr_l2,
                       tr_out);
  } catch (const AtcError& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::ConfigCycle:
      case ErrorCode::UnknownBlock:
      case ErrorCode::InvalidConfig:
        return 3;
      default:
        return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
