#include "atc2/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

#include "atc2/error.hpp"
#include "atc2/textnorm.hpp"

namespace atc2 {

using nlohmann::json;

SynthSpec SynthSpec::parse_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw AtcError(ErrorCode::InvalidConfig, e.what());
  }
  SynthSpec s;
  try {
    s.num_utterances = j.value("num_utterances", s.num_utterances);
    s.frac_non_english = j.value("frac_non_english", s.frac_non_english);
    s.callsign_pool = j.value("callsign_pool", s.callsign_pool);
    s.noise = j.value("noise", s.noise);
    s.seed = j.value("seed", s.seed);
  } catch (const json::exception& e) {
    throw AtcError(ErrorCode::InvalidConfig, e.what());
  }
  return s;
}

std::string SynthSpec::to_json() const {
  json j;
  j["num_utterances"] = num_utterances;
  j["frac_non_english"] = frac_non_english;
  j["callsign_pool"] = callsign_pool;
  j["noise"] = noise;
  j["seed"] = seed;
  return j.dump(2);
}

namespace {

// All draws funnel through one engine so a seed fixes every choice; the
// helpers avoid std distributions, whose sequences vary by implementation.
struct Rng {
  std::mt19937_64 g;
  explicit Rng(std::uint64_t seed) : g(seed) {}
  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(g() % n); }
  double unit() { return (g() >> 11) * (1.0 / 9007199254740992.0); }
  bool coin(double p) { return unit() < p; }
};

// Designators with one-word telephony names that do not collide with the
// spelling alphabet or digit words.
const std::vector<std::string>& pool_designators() {
  static const std::vector<std::string> d = {"DLH", "RYR", "AUA", "SWR",
                                             "BAW", "FIN", "IBE", "THY",
                                             "UAL", "EIN"};
  return d;
}

const std::vector<std::string>& czech_words() {
  static const std::vector<std::string> w = {
      "dobry",    "den",     "tady",   "praha",     "radar",
      "klesejte", "na",      "hladinu", "sto",      "dvacet",
      "rozumim",  "konec",   "dekuji", "prosim",    "drahu",
      "tri",      "jedna",   "pristani", "povoleno", "rychlost"};
  return w;
}

std::vector<std::string> english_words() {
  std::vector<std::string> w = digit_words();
  const AirlineTable& table = default_airline_table();
  for (const auto& code : pool_designators()) {
    std::string name = table.at(code);
    w.push_back(name);
  }
  const std::vector<std::string> extra = {
      "descend",  "climb",   "maintain", "turn",      "left",      "right",
      "reduce",   "speed",   "contact",  "cleared",   "to",        "land",
      "hold",     "short",   "go",       "around",    "squawk",    "report",
      "taxi",     "vacate",  "monitor",  "expect",    "line",      "up",
      "wait",     "proceed", "direct",   "flight",    "level",     "heading",
      "runway",   "knots",   "feet",     "frequency", "decimal",   "qnh",
      "altitude", "center",  "descending", "climbing", "turning",
      "reducing", "contacting", "maintaining", "good", "morning",
      "afternoon", "evening", "day",     "hello",     "goodbye"};
  w.insert(w.end(), extra.begin(), extra.end());
  return w;
}

struct PoolEntry {
  std::string code;
  std::vector<std::string> tokens;  // airline name + digit words
  char last_digit = '0';
  char sibling_digit = '0';  // last digit of the paired confusable code
};

// Codes come in pairs that differ only in the final digit, so a digit
// confusion can land exactly on another plausible callsign.
std::vector<PoolEntry> build_pool(int size) {
  const auto& designators = pool_designators();
  const AirlineTable& table = default_airline_table();
  std::vector<PoolEntry> pool;
  const int pairs = (size + 1) / 2;
  for (int p = 0; p < pairs && static_cast<int>(pool.size()) < size; ++p) {
    const std::string& code = designators[p % designators.size()];
    const int d1 = 1 + (p / static_cast<int>(designators.size())) % 9;
    const int d2a = (2 * p) % 10;
    const int d2b = (2 * p + 1) % 10;
    const std::string name = table.at(code);
    for (int variant = 0; variant < 2; ++variant) {
      if (static_cast<int>(pool.size()) >= size) break;
      const int last = variant == 0 ? d2a : d2b;
      const int other = variant == 0 ? d2b : d2a;
      PoolEntry e;
      e.code = code + std::to_string(d1) + std::to_string(last);
      e.tokens = {name, digit_words()[d1], digit_words()[last]};
      e.last_digit = static_cast<char>('0' + last);
      e.sibling_digit = static_cast<char>('0' + other);
      pool.push_back(std::move(e));
    }
  }
  return pool;
}

struct Phrase {
  std::vector<std::string> command;
  std::vector<std::string> value;
  std::vector<std::string> readback_digits;  // empty: no readback variant
  std::string readback_verb;
};

Phrase sample_phrase(Rng& rng, bool want_readback) {
  const auto& dw = digit_words();
  const std::size_t kind = want_readback ? rng.pick(5) : rng.pick(7);
  Phrase ph;
  switch (kind) {
    case 0:
    case 1: {
      ph.command = {kind == 0 ? "descend" : "climb"};
      ph.readback_verb = kind == 0 ? "descending" : "climbing";
      const std::string a = dw[1 + rng.pick(8)];
      const std::string b = dw[rng.pick(10)];
      ph.value = {"flight", "level", a, b};
      ph.readback_digits = {a, b};
      break;
    }
    case 2:
    case 3: {
      ph.command = {"turn", kind == 2 ? "left" : "right"};
      ph.readback_verb = "turning";
      const std::string a = dw[rng.pick(4)];
      const std::string b = dw[rng.pick(10)];
      const std::string c = dw[rng.pick(10)];
      ph.value = {"heading", a, b, c};
      ph.readback_digits = {a, b, c};
      break;
    }
    case 4: {
      ph.command = {"reduce", "speed"};
      ph.readback_verb = "reducing";
      const std::string a = dw[1 + rng.pick(2)];
      const std::string b = dw[rng.pick(10)];
      ph.value = {a, b, "zero", "knots"};
      ph.readback_digits = {a, b, "zero"};
      break;
    }
    case 5: {
      ph.command = {"contact"};
      const std::string a = dw[1 + rng.pick(3)];
      const std::string b = dw[rng.pick(10)];
      const std::string c = dw[rng.pick(10)];
      ph.value = {"one", a, b, "decimal", c};
      break;
    }
    default: {
      ph.command = {"cleared", "to", "land"};
      const std::string a = dw[rng.pick(4)];
      const std::string b = dw[rng.pick(10)];
      ph.value = {"runway", a, b, rng.coin(0.5) ? "left" : "right"};
      break;
    }
  }
  return ph;
}

Lattice make_lattice(const std::vector<std::string>& tokens,
                     int confused_pos, const std::string& wrong_word) {
  const int n = static_cast<int>(tokens.size());
  std::vector<Arc> arcs;
  for (int i = 0; i < n; ++i) {
    arcs.push_back({i, i + 1, tokens[i],
                    i == confused_pos ? -std::log(0.45) : 0.05});
    if (i == confused_pos)
      arcs.push_back({i, i + 1, wrong_word, -std::log(0.55)});
  }
  return Lattice(n + 1, std::move(arcs), {{n, 0.0}});
}

}  // namespace

SynthCorpus generate_corpus(const SynthSpec& spec) {
  if (spec.num_utterances < 0)
    throw AtcError(ErrorCode::InvalidConfig, "num_utterances must be >= 0");
  if (spec.frac_non_english < 0.0 || spec.frac_non_english > 1.0)
    throw AtcError(ErrorCode::InvalidConfig, "frac_non_english must be in [0,1]");
  if (spec.noise < 0.0 || spec.noise > 1.0)
    throw AtcError(ErrorCode::InvalidConfig, "noise must be in [0,1]");
  if (spec.callsign_pool < 2)
    throw AtcError(ErrorCode::InvalidConfig, "callsign_pool must be >= 2");

  Rng rng(spec.seed);
  const std::vector<PoolEntry> pool = build_pool(spec.callsign_pool);
  const auto& dw = digit_words();

  SynthCorpus corpus;
  for (const auto& e : pool) corpus.context.callsigns.push_back(e.code);

  for (int i = 0; i < spec.num_utterances; ++i) {
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "utt-%04d", i);
    const std::string id = idbuf;

    const bool non_english = rng.coin(spec.frac_non_english);

    std::vector<std::string> tokens;
    std::vector<EntitySpan> entities;
    std::vector<Turn> turns;
    int confused_pos = -1;
    std::string wrong_word;

    if (non_english) {
      const std::size_t len = 6 + rng.pick(5);
      for (std::size_t k = 0; k < len; ++k)
        tokens.push_back(czech_words()[rng.pick(czech_words().size())]);
      turns.push_back({Role::Atco, 0, static_cast<int>(tokens.size())});
    } else {
      const PoolEntry& cs = pool[rng.pick(pool.size())];
      const bool readback = rng.coin(0.5);
      const Phrase ph = sample_phrase(rng, readback);

      tokens = cs.tokens;
      const int cs_end = static_cast<int>(tokens.size());
      entities.push_back({EntityLabel::Callsign, 0, cs_end});
      int cursor = cs_end;
      if (ph.command == std::vector<std::string>{"cleared", "to", "land"}) {
        tokens.insert(tokens.end(), ph.value.begin(), ph.value.end());
        entities.push_back({EntityLabel::Value, cursor,
                            cursor + static_cast<int>(ph.value.size())});
        cursor += static_cast<int>(ph.value.size());
        tokens.insert(tokens.end(), ph.command.begin(), ph.command.end());
        entities.push_back({EntityLabel::Command, cursor,
                            cursor + static_cast<int>(ph.command.size())});
        cursor += static_cast<int>(ph.command.size());
      } else {
        tokens.insert(tokens.end(), ph.command.begin(), ph.command.end());
        entities.push_back({EntityLabel::Command, cursor,
                            cursor + static_cast<int>(ph.command.size())});
        cursor += static_cast<int>(ph.command.size());
        tokens.insert(tokens.end(), ph.value.begin(), ph.value.end());
        entities.push_back({EntityLabel::Value, cursor,
                            cursor + static_cast<int>(ph.value.size())});
        cursor += static_cast<int>(ph.value.size());
      }

      if (readback && !ph.readback_verb.empty()) {
        turns.push_back({Role::Atco, 0, cursor});
        const int pilot_start = cursor;
        tokens.push_back(ph.readback_verb);
        ++cursor;
        tokens.insert(tokens.end(), ph.readback_digits.begin(),
                      ph.readback_digits.end());
        cursor += static_cast<int>(ph.readback_digits.size());
        tokens.insert(tokens.end(), cs.tokens.begin(), cs.tokens.end());
        entities.push_back({EntityLabel::Callsign, cursor,
                            cursor + static_cast<int>(cs.tokens.size())});
        cursor += static_cast<int>(cs.tokens.size());
        turns.push_back({Role::Pilot, pilot_start, cursor});
      } else {
        turns.push_back({Role::Atco, 0, cursor});
      }

      corpus.gt_callsigns[id] = cs.code;

      if (rng.coin(spec.noise)) {
        confused_pos = cs_end - 1;  // last digit of the leading callsign
        if (rng.coin(0.5)) {
          wrong_word = dw[cs.sibling_digit - '0'];
        } else {
          std::vector<std::string> candidates;
          for (const auto& d : dw)
            if (d != dw[cs.last_digit - '0'] && d != dw[cs.sibling_digit - '0'])
              candidates.push_back(d);
          wrong_word = candidates[rng.pick(candidates.size())];
        }
      }
    }

    const double audio_len = 3.0 + rng.unit() * 5.0;
    const double speech_ratio = 0.5 + rng.unit() * 0.4;
    const double snr = rng.coin(0.05) ? 1.0 + rng.unit() * 3.5
                                      : 8.0 + rng.unit() * 14.0;

    SegmentRecord rec;
    rec.id = id;
    rec.airport_icao = "LKPR";
    rec.frequency_hz = 118'000'000 + static_cast<std::int64_t>(i % 20) * 25'000;
    rec.captured_at = 1644408000 + static_cast<std::int64_t>(i) * 10;
    rec.audio_len = audio_len;
    rec.speech_len = audio_len * speech_ratio;
    rec.avg_snr = snr;
    rec.lattice = make_lattice(tokens, confused_pos, wrong_word);
    rec.status = SegmentStatus::Pending;

    SegmentRecord ref = rec;
    ref.lattice.reset();
    for (const auto& t : tokens) ref.transcript.push_back({t, 1.0});
    ref.wrd_cnt = static_cast<int>(tokens.size());
    ref.avg_word_conf = 1.0;
    AnnotatedTranscript ann;
    ann.tokens = tokens;
    ann.entities = entities;
    ann.turns = turns;
    validate(ann);
    std::set<Role> roles;
    for (const auto& t : turns) roles.insert(t.role);
    ref.num_spk = std::max<int>(1, static_cast<int>(roles.size()));
    ref.annotation = std::move(ann);
    ref.status = SegmentStatus::Ok;

    corpus.records.push_back(std::move(rec));
    corpus.references.push_back(std::move(ref));
  }
  return corpus;
}

void write_corpus(const SynthCorpus& corpus, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw AtcError(ErrorCode::IoError, "cannot create " + dir);

  const std::filesystem::path base(dir);
  write_records_jsonl((base / "records.jsonl").string(), corpus.records);
  write_records_jsonl((base / "reference.jsonl").string(), corpus.references);

  std::ofstream ctx(base / "context.csv");
  if (!ctx) throw AtcError(ErrorCode::IoError, "cannot write context.csv");
  ctx << "callsign\n";
  for (const auto& code : corpus.context.callsigns) ctx << code << '\n';

  std::ofstream gt(base / "context_gt.csv");
  if (!gt) throw AtcError(ErrorCode::IoError, "cannot write context_gt.csv");
  gt << "id,code\n";
  for (const auto& [id, code] : corpus.gt_callsigns)
    gt << id << ',' << code << '\n';
}

std::vector<EldModel::LabelledUtterance> make_bilingual_corpus(
    int n, std::uint64_t seed, double frac_english) {
  Rng rng(seed);
  const std::vector<std::string> english = english_words();
  const std::vector<std::string>& czech = czech_words();
  const int n_english = static_cast<int>(std::llround(n * frac_english));

  std::vector<EldModel::LabelledUtterance> corpus;
  corpus.reserve(n);
  for (int i = 0; i < n; ++i) {
    EldModel::LabelledUtterance u;
    u.positive = i < n_english;
    const std::vector<std::string>& vocab = u.positive ? english : czech;
    const std::size_t len = 5 + rng.pick(8);
    for (std::size_t k = 0; k < len; ++k)
      u.words.push_back({vocab[rng.pick(vocab.size())], 1.0});
    corpus.push_back(std::move(u));
  }
  return corpus;
}

}  // namespace atc2
