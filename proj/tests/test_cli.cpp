#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "atc2/eld.hpp"
#include "atc2/model.hpp"
#include "atc2/pipeline.hpp"

using namespace atc2;
using nlohmann::json;

namespace {

const std::string& work() {
  static const std::string dir = [] {
    std::filesystem::remove_all("cli_work");
    std::filesystem::create_directories("cli_work");
    return std::string("cli_work");
  }();
  return dir;
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

int count_lines(const std::string& path) {
  std::ifstream in(path);
  int n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

CliResult cli(const std::string& args) {
  static int counter = 0;
  const std::string out = work() + "/stdout_" + std::to_string(counter);
  const std::string err = work() + "/stderr_" + std::to_string(counter);
  ++counter;
  const std::string cmd =
      std::string(ATC2_BIN_PATH) + " " + args + " > " + out + " 2> " + err;
  const int status = std::system(cmd.c_str());
  CliResult r;
  if (status >= 0 && WIFEXITED(status)) r.code = WEXITSTATUS(status);
  r.out = slurp_file(out);
  r.err = slurp_file(err);
  return r;
}

// The stock generator corpus, produced once and shared by the tests.
const std::string& corpus_dir() {
  static const std::string dir = [] {
    const std::string d = work() + "/corpus";
    REQUIRE(cli("gen --out " + d).code == 0);
    return d;
  }();
  return dir;
}

// The stock corpus run through the default pipeline, once.
const std::string& processed_path() {
  static const std::string path = [] {
    const std::string p = work() + "/processed.jsonl";
    REQUIRE(cli("process --in " + corpus_dir() + "/records.jsonl --out " + p)
                .code == 0);
    return p;
  }();
  return path;
}

}  // namespace

TEST_CASE("usage problems exit with code 2") {
  CHECK(cli("").code == 2);                       // no subcommand
  CHECK(cli("frobnicate").code == 2);             // unknown subcommand
  CHECK(cli("rank --in x.jsonl").code == 2);      // missing required option
  CHECK(cli("process --in no_such_file.jsonl --out " + work() + "/x.jsonl")
            .code == 2);                          // unreadable input
}

TEST_CASE("gen writes the corpus files and is deterministic") {
  const std::string spec = work() + "/spec.json";
  write_text(spec,
             R"({"num_utterances":30,"frac_non_english":0.2,)"
             R"("callsign_pool":5,"noise":0.3,"seed":77})");
  const std::string a = work() + "/gen_a";
  const std::string b = work() + "/gen_b";
  CHECK(cli("gen --spec " + spec + " --out " + a).code == 0);
  CHECK(cli("gen --spec " + spec + " --out " + b).code == 0);

  for (const char* name :
       {"records.jsonl", "reference.jsonl", "context.csv", "context_gt.csv"}) {
    const std::string fa = a + "/" + name;
    const std::string fb = b + "/" + name;
    INFO(name);
    REQUIRE(std::filesystem::exists(fa));
    CHECK(slurp_file(fa) == slurp_file(fb));
  }
  CHECK(count_lines(a + "/records.jsonl") == 30);
  CHECK(count_lines(a + "/reference.jsonl") == 30);

  const std::string bad = work() + "/bad_spec.json";
  write_text(bad, "{oops");
  CHECK(cli("gen --spec " + bad + " --out " + work() + "/gen_bad").code == 3);
}

TEST_CASE("process fills records in, emits callbacks, and is reproducible") {
  const std::string in = corpus_dir() + "/records.jsonl";
  const std::string out1 = work() + "/proc1.jsonl";
  const std::string out2 = work() + "/proc2.jsonl";
  const std::string cb1 = work() + "/cb1.jsonl";
  const std::string cb2 = work() + "/cb2.jsonl";
  const std::string t1 = work() + "/timing1.jsonl";

  CHECK(cli("process --in " + in + " --out " + out1 + " --callbacks " + cb1 +
            " --timing-out " + t1)
            .code == 0);
  CHECK(cli("process --in " + in + " --out " + out2 + " --callbacks " + cb2)
            .code == 0);

  // Identical inputs give byte-identical records and event streams.
  CHECK(slurp_file(out1) == slurp_file(out2));
  CHECK(slurp_file(cb1) == slurp_file(cb2));
  CHECK(count_lines(cb1) > count_lines(in));  // progress plus terminals

  const std::vector<SegmentRecord> inputs = read_records_jsonl(in);
  const std::vector<SegmentRecord> results = read_records_jsonl(out1);
  REQUIRE(results.size() == inputs.size());
  int ok = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    CHECK(results[i].id == inputs[i].id);  // worker pool kept the order
    if (results[i].status == SegmentStatus::Ok) {
      ++ok;
      CHECK(results[i].quality_score.has_value());
      CHECK(results[i].annotation.has_value());
      CHECK(results[i].eld_score.value_or(0.0) >= 0.5);
    } else {
      CHECK(!results[i].error_reason.empty());
    }
  }
  CHECK(ok > 0);
  CHECK(ok < static_cast<int>(results.size()));  // the gates did some work

  // Per-job stage timing is one JSON object per record.
  REQUIRE(count_lines(t1) == static_cast<int>(results.size()));
  std::ifstream tf(t1);
  std::string line;
  while (std::getline(tf, line)) {
    const json j = json::parse(line);
    CHECK(j.contains("job_id"));
    CHECK(j.at("stages").is_array());
    CHECK(!j.at("stages").empty());
  }
}

TEST_CASE("process rejects bad configs and settings with exit 3") {
  PipelineConfig cyc = PipelineConfig::default_config();
  cyc.edges.emplace_back("quality", "snr");
  const std::string cfg = work() + "/cyclic.json";
  write_text(cfg, cyc.to_json());
  const std::string in = corpus_dir() + "/records.jsonl";
  CHECK(cli("process --config " + cfg + " --in " + in + " --out " + work() +
            "/never.jsonl")
            .code == 3);

  const std::string settings = work() + "/bad_settings.json";
  write_text(settings, R"({"min_len_s":60.0,"max_len_s":30.0})");
  CHECK(cli("process --settings " + settings + " --in " + in + " --out " +
            work() + "/never.jsonl")
            .code == 3);
}

TEST_CASE("boost modes trade accuracy as expected under eval") {
  const std::string in = corpus_dir() + "/records.jsonl";
  const std::string ref = corpus_dir() + "/reference.jsonl";
  const std::string none = work() + "/boost_none.jsonl";
  const std::string ngram = work() + "/boost_ngram.jsonl";
  const std::string gt = work() + "/boost_gt.jsonl";

  CHECK(cli("boost --in " + in + " --out " + none + " --mode none").code == 0);
  CHECK(cli("boost --in " + in + " --out " + ngram + " --mode ngram" +
            " --context " + corpus_dir() + "/context.csv --discount -0.5")
            .code == 0);
  CHECK(cli("boost --in " + in + " --out " + gt + " --mode gt --context " +
            corpus_dir() + "/context_gt.csv --discount -0.5")
            .code == 0);

  auto eval_asr = [&](const std::string& hyp) {
    const CliResult r = cli("eval --task asr --hyp " + hyp + " --ref " + ref);
    REQUIRE(r.code == 0);
    return json::parse(r.out);
  };
  const json e_none = eval_asr(none);
  const json e_ngram = eval_asr(ngram);
  const json e_gt = eval_asr(gt);

  CHECK(e_none.at("evaluated").get<int>() == count_lines(in));
  CHECK(e_none.at("wer").get<double>() > 0.0);  // the noise left real errors
  CHECK(e_gt.at("wer").get<double>() == 0.0);   // exact context repairs all
  CHECK(e_gt.at("entity_wer").get<double>() == 0.0);
  CHECK(e_ngram.at("entity_wer").get<double>() <=
        e_none.at("entity_wer").get<double>() + 1e-12);
  CHECK(e_ngram.at("wer").get<double>() <=
        e_none.at("wer").get<double>() + 1e-12);

  auto eval_ner = [&](const std::string& hyp) {
    const CliResult r = cli("eval --task ner --hyp " + hyp + " --ref " + ref +
                            " --gt " + corpus_dir() + "/context_gt.csv");
    REQUIRE(r.code == 0);
    return json::parse(r.out);
  };
  const json n_none = eval_ner(none);
  const json n_gt = eval_ner(gt);
  const double acc_none = n_none.at("callsign_accuracy").get<double>();
  const double acc_gt = n_gt.at("callsign_accuracy").get<double>();
  CHECK(acc_gt == 1.0);
  CHECK(acc_none < acc_gt);
  CHECK(acc_none >= 0.0);
  CHECK(n_none.at("callsign").at("f1").get<double>() >= 0.0);
  CHECK(n_none.at("callsign").at("f1").get<double>() <= 1.0);

  // Role and turn agreement over the same hypotheses.
  const CliResult srd =
      cli("eval --task srd --hyp " + none + " --ref " + ref);
  REQUIRE(srd.code == 0);
  const json s = json::parse(srd.out);
  CHECK(s.at("evaluated").get<int>() > 0);
  CHECK(s.at("token_accuracy").get<double>() >= 0.0);
  CHECK(s.at("token_accuracy").get<double>() <= 1.0);

  const CliResult diar =
      cli("eval --task diar --hyp " + none + " --ref " + ref);
  REQUIRE(diar.code == 0);
  const json d = json::parse(diar.out);
  CHECK(d.at("jer_mean").get<double>() >= 0.0);
  CHECK(d.at("jer_mean").get<double>() <= 1.0);

  CHECK(cli("eval --task bogus --hyp " + none + " --ref " + ref).code == 3);
  CHECK(cli("boost --in " + in + " --out " + work() +
            "/never.jsonl --mode bogus")
            .code == 3);
}

TEST_CASE("rank prints the funnel and respects the speech budget") {
  const std::string sel = work() + "/selected.jsonl";
  const CliResult r =
      cli("rank --in " + processed_path() + " --top-hours 0.05 --out " + sel);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("recorded") != std::string::npos);
  CHECK(r.out.find("selected") != std::string::npos);
  CHECK(r.out.find("hours") != std::string::npos);

  const std::vector<SegmentRecord> picked = read_records_jsonl(sel);
  CHECK(!picked.empty());
  double speech = 0.0;
  for (const auto& rec : picked) {
    CHECK(rec.status == SegmentStatus::Ok);
    CHECK(rec.quality_score.has_value());
    speech += rec.speech_len;
  }
  CHECK(speech <= 0.05 * 3600.0 + 1e-9);

  const std::string none = work() + "/selected_none.jsonl";
  REQUIRE(cli("rank --in " + processed_path() + " --top-hours 0 --out " + none)
              .code == 0);
  CHECK(count_lines(none) == 0);

  const CliResult all =
      cli("rank --in " + processed_path() + " --top-hours -1");
  REQUIRE(all.code == 0);
  CHECK(all.out.find("selected") != std::string::npos);
}

TEST_CASE("report aggregates a timing log into the share table") {
  const std::string timing = work() + "/report_timing.jsonl";
  write_text(timing,
             R"({"job_id":"t","audio_len":5.016,"stages":[)"
             R"(["pre-processing",2.540],["VAD",2.436],["SNR",0.655],)"
             R"(["diarization",7.128],["callsign expansion",0.464],)"
             R"(["ASR",7.021],["ELD",1.292],["callsign extraction",0.069],)"
             R"(["post-processing",0.245]]})"
             "\n");
  const CliResult r = cli("report --timing " + timing);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("diarization") != std::string::npos);
  CHECK(r.out.find("32.62") != std::string::npos);
  CHECK(r.out.find("100.00") != std::string::npos);
  CHECK(r.out.find("rtf  4.356") != std::string::npos);

  CHECK(cli("report --timing no_such_file.jsonl").code == 2);
  const std::string empty = work() + "/empty_timing.jsonl";
  write_text(empty, "\n");
  CHECK(cli("report --timing " + empty).code == 2);
}

TEST_CASE("lifecycle replays an event log to per-item states") {
  const std::string events = work() + "/events.jsonl";
  std::ostringstream ev;
  ev << R"({"recording_id":"a","event":"Push","now":0})" << "\n"
     << R"({"recording_id":"a","event":"SaveAnnotation","now":10})" << "\n"
     << R"({"recording_id":"a","event":"RecheckOk","now":20})" << "\n"
     << R"({"recording_id":"a","event":"Export","now":30})" << "\n"
     << R"({"recording_id":"b","event":"Push","now":0})" << "\n"
     << R"({"recording_id":"b","event":"ThumbDown","now":5})" << "\n"
     << R"({"recording_id":"b","event":"ThumbDown","now":6})" << "\n"
     << R"({"recording_id":"b","event":"ThumbDown","now":7})" << "\n"
     << R"({"recording_id":"c","event":"Push","now":0})" << "\n"
     << R"({"recording_id":"c","event":"RecheckOk","now":40})" << "\n"
     << R"({"recording_id":"d","event":"SaveAnnotation","now":1})" << "\n"
     << R"({"recording_id":"e","event":"Push","now":0})" << "\n"
     << R"({"recording_id":"e","event":"ThumbDown","now":1})" << "\n"
     << R"({"recording_id":"e","event":"ThumbDown","now":2})" << "\n"
     << R"({"recording_id":"e","event":"ThumbDown","now":3})" << "\n"
     << R"({"recording_id":"e","event":"AgeTick","now":691203})" << "\n";
  write_text(events, ev.str());

  const CliResult r = cli("lifecycle --replay " + events);
  REQUIRE(r.code == 0);
  std::map<std::string, json> items;
  std::istringstream out(r.out);
  std::string line;
  while (std::getline(out, line))
    if (!line.empty()) {
      const json j = json::parse(line);
      items[j.at("recording_id").get<std::string>()] = j;
    }
  REQUIRE(items.size() == 4);  // d was never pushed
  CHECK(items.at("a").at("state") == "Finished");
  CHECK(items.at("b").at("state") == "Dropped");
  CHECK(items.at("b").at("thumbs_down") == 3);
  CHECK(items.at("c").at("state") == "QueuedUntouched");
  CHECK(items.at("e").at("state") == "Deleted");
  CHECK(r.err.find("rejected") != std::string::npos);
  CHECK(r.err.find("2 rejected") != std::string::npos);

  // The age thresholds are options.
  const std::string stale_events = work() + "/stale_events.jsonl";
  write_text(stale_events,
             R"({"recording_id":"f","event":"Push","now":0})"
             "\n"
             R"({"recording_id":"f","event":"AgeTick","now":172800})"
             "\n");
  const CliResult stale =
      cli("lifecycle --replay " + stale_events + " --stale-days 1");
  REQUIRE(stale.code == 0);
  CHECK(json::parse(stale.out).at("state") == "Dropped");

  const std::string bad = work() + "/bad_events.jsonl";
  write_text(bad, R"({"recording_id":"x","event":"Discombobulate","now":0})"
                  "\n");
  CHECK(cli("lifecycle --replay " + bad).code == 2);
}

TEST_CASE("train writes a deterministic usable model") {
  const std::string m1 = work() + "/model1.json";
  const std::string m2 = work() + "/model2.json";
  const CliResult r1 =
      cli("train --bilingual 80 --seed 11 --frac 0.5 --out " + m1);
  REQUIRE(r1.code == 0);
  REQUIRE(cli("train --bilingual 80 --seed 11 --frac 0.5 --out " + m2).code ==
          0);
  CHECK(slurp_file(m1) == slurp_file(m2));
  CHECK(!slurp_file(m1).empty());
  CHECK(json::parse(r1.out).at("train_accuracy").get<double>() >= 0.95);

  const EldModel model = EldModel::load(m1);
  CHECK(model.decide({{"descend", 1.0}, {"flight", 1.0}, {"level", 1.0}}));
  CHECK(!model.decide({{"dobry", 1.0}, {"den", 1.0}, {"prosim", 1.0}}));

  // Training also accepts a labelled-utterance file.
  const std::string labelled = work() + "/labelled.jsonl";
  std::ostringstream rows;
  for (int i = 0; i < 6; ++i)
    rows << R"({"positive":true,"words":["descend","flight","level","one"]})"
         << "\n"
         << R"({"positive":false,"words":[{"word":"dobry","conf":0.9},"den"]})"
         << "\n";
  write_text(labelled, rows.str());
  const std::string m3 = work() + "/model3.json";
  REQUIRE(cli("train --in " + labelled + " --out " + m3).code == 0);
  CHECK(EldModel::load(m3).decide({{"descend", 1.0}, {"flight", 1.0}}));
}
