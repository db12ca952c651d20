#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "atc2/error.hpp"
#include "atc2/metrics.hpp"
#include "atc2/synth.hpp"
#include "atc2/understand.hpp"
#include "oracles.hpp"

using namespace atc2;
using oracles::code_of;
using oracles::split;

namespace {

const PhraseologyGrammar& grammar() {
  static const PhraseologyGrammar g =
      PhraseologyGrammar::builtin(default_airline_table());
  return g;
}

bool has_span(const AnnotatedTranscript& t, EntityLabel label, int start,
              int end) {
  return std::find(t.entities.begin(), t.entities.end(),
                   EntitySpan{label, start, end}) != t.entities.end();
}

// No turn boundary may fall strictly inside an entity span.
bool turns_respect_entities(const AnnotatedTranscript& t) {
  for (const auto& e : t.entities)
    for (const auto& u : t.turns)
      if (e.start < u.start && u.start < e.end) return false;
  return true;
}

}  // namespace

TEST_CASE("a full clearance is tagged value, command, callsign") {
  const auto tokens = split(
      "runway three four left cleared to land china southern three two five");
  const auto t = tag_entities(tokens, grammar());
  REQUIRE(t.entities.size() == 3);
  CHECK(has_span(t, EntityLabel::Value, 0, 4));
  CHECK(has_span(t, EntityLabel::Command, 4, 7));
  CHECK(has_span(t, EntityLabel::Callsign, 7, 12));
}

TEST_CASE("greetings carry no entities") {
  const auto t = tag_entities(split("good morning"), grammar());
  CHECK(t.entities.empty());
}

TEST_CASE("longest command wins over its own prefix") {
  const auto t = tag_entities(split("cleared to land"), grammar());
  REQUIRE(t.entities.size() == 1);
  CHECK(has_span(t, EntityLabel::Command, 0, 3));
}

TEST_CASE("surveillance context recovers a garbled callsign") {
  ContextList ctx;
  ctx.callsigns = {"CSN325"};

  // Truncated: four of the five expected tokens are present.
  const auto partial = tag_entities(split("china southern three two"),
                                    grammar(), &ctx,
                                    &default_airline_table());
  REQUIRE(partial.entities.size() == 1);
  CHECK(has_span(partial, EntityLabel::Callsign, 0, 4));

  // Garbled middle token: the grammar span stops early, the context
  // match covers the full five tokens and wins.
  const auto tokens = split("china southern three two zzz");
  const auto without = tag_entities(tokens, grammar());
  CHECK(has_span(without, EntityLabel::Callsign, 0, 4));
  const auto with =
      tag_entities(tokens, grammar(), &ctx, &default_airline_table());
  CHECK(has_span(with, EntityLabel::Callsign, 0, 5));

  // Below the 0.8 overlap bar the context changes nothing.
  ContextList far_ctx;
  far_ctx.callsigns = {"BAW11"};
  const auto probe = split("speedbird nine nine nine nine");
  const auto with_far =
      tag_entities(probe, grammar(), &far_ctx, &default_airline_table());
  CHECK(with_far.entities == tag_entities(probe, grammar()).entities);
}

TEST_CASE("tagger reproduces generated annotations exactly") {
  SynthSpec spec;
  spec.num_utterances = 60;
  spec.frac_non_english = 0.0;
  spec.callsign_pool = 6;
  spec.noise = 0.0;
  spec.seed = 9;
  const SynthCorpus corpus = generate_corpus(spec);

  int tp = 0, fp = 0, fn = 0;
  for (const auto& ref : corpus.references) {
    REQUIRE(ref.annotation.has_value());
    const auto got = understand(ref.transcript_words(), grammar());
    CHECK(got.entities == ref.annotation->entities);
    CHECK(got.turns == ref.annotation->turns);
    for (const auto& e : got.entities) {
      const bool match =
          std::find(ref.annotation->entities.begin(),
                    ref.annotation->entities.end(),
                    e) != ref.annotation->entities.end();
      match ? ++tp : ++fp;
    }
    for (const auto& e : ref.annotation->entities)
      if (std::find(got.entities.begin(), got.entities.end(), e) ==
          got.entities.end())
        ++fn;
  }
  const Prf overall = prf(tp, fp, fn);
  CHECK(overall.f1 == doctest::Approx(1.0));
}

TEST_CASE("context can only improve callsign tagging") {
  SynthSpec spec;
  spec.num_utterances = 40;
  spec.frac_non_english = 0.0;
  spec.callsign_pool = 8;
  spec.noise = 0.0;
  spec.seed = 21;
  const SynthCorpus corpus = generate_corpus(spec);
  ContextList ctx = corpus.context;

  oracles::TestRng rng(77);
  double f1_with = 0.0, f1_without = 0.0;
  for (const auto& ref : corpus.references) {
    auto tokens = ref.transcript_words();
    // Corrupt one token inside the reference callsign span.
    const auto& spans = ref.annotation->entities;
    auto cs = std::find_if(spans.begin(), spans.end(), [](const EntitySpan& e) {
      return e.label == EntityLabel::Callsign;
    });
    REQUIRE(cs != spans.end());
    tokens[cs->start + rng.pick(cs->end - cs->start)] = "zzz";

    AnnotatedTranscript plain = tag_entities(tokens, grammar());
    AnnotatedTranscript boosted =
        tag_entities(tokens, grammar(), &ctx, &default_airline_table());
    plain.tokens = boosted.tokens = tokens;
    f1_without += span_prf(*ref.annotation, plain, EntityLabel::Callsign).f1;
    f1_with += span_prf(*ref.annotation, boosted, EntityLabel::Callsign).f1;

    CHECK(turns_respect_entities(understand(tokens, grammar(), &ctx,
                                            &default_airline_table())));
  }
  CHECK(f1_with >= f1_without - 1e-9);
}

TEST_CASE("role detection separates instructions from readbacks") {
  std::vector<EldModel::LabelledUtterance> corpus;
  const char* imperative[] = {"descend", "climb",  "turn",
                              "contact", "reduce", "maintain"};
  const char* readback[] = {"descending", "climbing", "turning",
                            "contacting", "reducing", "maintaining"};
  const char* airlines[] = {"lufthansa", "speedbird", "vueling"};
  auto utt = [](const std::string& text) {
    std::vector<TranscriptToken> out;
    for (const auto& w : split(text)) out.push_back({w, 1.0});
    return out;
  };
  for (int v = 0; v < 6; ++v)
    for (int a = 0; a < 3; ++a) {
      const std::string who = std::string(airlines[a]) + " one two";
      corpus.push_back({utt(who + " " + imperative[v] + " flight level eight zero"),
                        true});
      corpus.push_back({utt(std::string(readback[v]) +
                            " flight level eight zero " + who),
                        false});
    }
  const EldModel model = EldModel::train(corpus);

  auto [role_a, p_a] =
      detect_role(split("lufthansa one two descend flight level eight zero"),
                  model);
  CHECK(role_a == Role::Atco);
  CHECK(p_a >= 0.5);

  auto [role_p, p_p] =
      detect_role(split("descending flight level eight zero lufthansa one two"),
                  model);
  CHECK(role_p == Role::Pilot);
  CHECK(p_p < 0.5);

  CHECK(code_of([&] { detect_role({}, model); }) == ErrorCode::EmptyEvidence);
}

TEST_CASE("an instruction plus its readback splits into two turns") {
  const auto tokens = split(
      "lufthansa one two descend eight zero descending eight zero lufthansa one two");
  const auto turns = diarize_text(tokens, grammar());
  REQUIRE(turns.size() == 2);
  CHECK(turns[0] == Turn{Role::Atco, 0, 6});
  CHECK(turns[1] == Turn{Role::Pilot, 6, 12});
}

TEST_CASE("turn labels follow their cues") {
  // Imperative verb: the controller is speaking.
  auto atco = diarize_text(split("descend flight level eight zero"), grammar());
  REQUIRE(atco.size() == 1);
  CHECK(atco[0].role == Role::Atco);

  // Readback morphology marks the pilot.
  auto rb = diarize_text(split("descending eight zero lufthansa one two"),
                         grammar());
  REQUIRE(rb.size() == 1);
  CHECK(rb[0].role == Role::Pilot);

  // A trailing callsign with no instruction also reads as the pilot.
  auto trail = diarize_text(split("eight zero lufthansa one two"), grammar());
  REQUIRE(trail.size() == 1);
  CHECK(trail[0].role == Role::Pilot);

  // Unsplittable small talk falls back to one controller turn.
  auto greet = diarize_text(split("good morning"), grammar());
  REQUIRE(greet.size() == 1);
  CHECK(greet[0] == Turn{Role::Atco, 0, 2});
}

TEST_CASE("turns always partition the token range") {
  oracles::TestRng rng(404);
  const std::vector<std::string> vocab = {
      "lufthansa", "one",  "two",   "descend", "descending", "flight",
      "level",     "zero", "eight", "cleared", "to",         "land",
      "good",      "morning", "runway", "contact"};
  for (int it = 0; it < 300; ++it) {
    const int n = 1 + rng.pick(14);
    std::vector<std::string> tokens(n);
    for (auto& w : tokens) w = vocab[rng.pick((int)vocab.size())];
    AnnotatedTranscript t = understand(tokens, grammar());
    CHECK(t.tokens == tokens);
    REQUIRE(!t.turns.empty());
    CHECK_NOTHROW(validate(t));
    CHECK(turns_respect_entities(t));
  }
  CHECK(diarize_text({}, grammar()).empty());
}

TEST_CASE("understand composes tagging and diarization") {
  const auto tokens = split(
      "lufthansa one two descend eight zero descending eight zero lufthansa one two");
  const auto combined = understand(tokens, grammar());
  CHECK(combined.entities == tag_entities(tokens, grammar()).entities);
  CHECK(combined.turns == diarize_text(tokens, grammar()));
}
