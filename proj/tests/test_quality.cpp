#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "atc2/error.hpp"
#include "atc2/quality.hpp"
#include "oracles.hpp"

using namespace atc2;
using oracles::code_of;

namespace {

QualityInputs inputs(double snr, int spk, double ratio, double eld,
                     double conf, int wrd) {
  QualityInputs in;
  in.avg_snr = snr;
  in.num_spk = spk;
  in.speech_ratio = ratio;
  in.eld_score = eld;
  in.avg_word_conf = conf;
  in.wrd_cnt = wrd;
  return in;
}

SegmentRecord scored(const std::string& id, double score, double speech_len) {
  SegmentRecord r;
  r.id = id;
  r.audio_len = speech_len + 1.0;
  r.speech_len = speech_len;
  r.quality_score = score;
  r.status = SegmentStatus::Ok;
  return r;
}

}  // namespace

TEST_CASE("the all-floor segment scores its known constant") {
  const double total = quality_score(inputs(0, 1, 0, 0, 0, 0));
  CHECK(std::abs(total - 4.3133) <= 1e-3);
  CHECK(total ==
        doctest::Approx(oracles::score_formula(0, 1, 0, 0, 0, 0)));
}

TEST_CASE("a strong segment scores near 14.43") {
  const double total = quality_score(inputs(20, 2, 0.5, 0.9, 0.8, 30));
  CHECK(std::abs(total - 14.431) <= 1e-2);
}

TEST_CASE("breakdown terms sum to the total and match the formula") {
  oracles::TestRng rng(64);
  for (int it = 0; it < 300; ++it) {
    const auto in = inputs(50.0 * rng.unit() - 5.0, rng.pick(13),
                           1.4 * rng.unit() - 0.2, 1.2 * rng.unit() - 0.1,
                           1.2 * rng.unit() - 0.1, rng.pick(60) - 5);
    const QualityBreakdown b = quality_breakdown(in);
    CHECK(b.total == doctest::Approx(b.snr_term + b.spk_term + b.ratio_term +
                                     b.eld_term + b.conf_term + b.wrd_term));
    CHECK(b.total ==
          doctest::Approx(oracles::score_formula(
              in.avg_snr, in.num_spk, in.speech_ratio, in.eld_score,
              in.avg_word_conf, in.wrd_cnt)).epsilon(1e-12));
  }
}

TEST_CASE("raising any input never lowers the score") {
  oracles::TestRng rng(129);
  for (int it = 0; it < 1000; ++it) {
    const auto base = inputs(40.0 * rng.unit(), 1 + rng.pick(10), rng.unit(),
                             rng.unit(), rng.unit(), rng.pick(50));
    auto bumped = base;
    switch (rng.pick(6)) {
      case 0: bumped.avg_snr = base.avg_snr + 39.0 * rng.unit() *
                               (40.0 - base.avg_snr) / 40.0; break;
      case 1: bumped.num_spk = std::min(10, base.num_spk + 1 + rng.pick(3)); break;
      case 2: bumped.speech_ratio = base.speech_ratio +
                                    (1.0 - base.speech_ratio) * rng.unit(); break;
      case 3: bumped.eld_score = base.eld_score +
                                 (1.0 - base.eld_score) * rng.unit(); break;
      case 4: bumped.avg_word_conf = base.avg_word_conf +
                                     (1.0 - base.avg_word_conf) * rng.unit(); break;
      case 5: bumped.wrd_cnt = base.wrd_cnt + 1 + rng.pick(20); break;
    }
    CHECK(quality_score(bumped) >= quality_score(base) - 1e-12);
  }
}

TEST_CASE("record scoring reads the six fields and reports gaps") {
  SegmentRecord r;
  r.id = "q";
  r.audio_len = 10.0;
  r.speech_len = 5.0;
  r.avg_snr = 20.0;
  r.num_spk = 2;
  r.eld_score = 0.9;
  r.avg_word_conf = 0.8;
  r.wrd_cnt = 30;
  const QualityBreakdown b = quality_breakdown(r);
  CHECK(b.total == doctest::Approx(quality_score(inputs(20, 2, 0.5, 0.9, 0.8, 30))));

  SegmentRecord missing = r;
  missing.eld_score.reset();
  try {
    quality_breakdown(missing);
    FAIL("expected an error");
  } catch (const AtcError& e) {
    CHECK(e.code() == ErrorCode::MissingField);
    CHECK(std::string(e.what()).find("eld_score") != std::string::npos);
  }

  SegmentRecord bare = r;
  bare.eld_score.reset();
  bare.avg_word_conf.reset();
  try {
    quality_breakdown(bare);
    FAIL("expected an error");
  } catch (const AtcError& e) {
    CHECK(std::string(e.what()).find("eld_score") != std::string::npos);
    CHECK(std::string(e.what()).find("avg_word_conf") != std::string::npos);
  }

  SegmentRecord zero = r;
  zero.audio_len = 0.0;
  zero.speech_len = 0.0;
  CHECK(code_of([&] { quality_breakdown(zero); }) == ErrorCode::ZeroAudioLen);
}

TEST_CASE("ranking sorts by score then id") {
  std::vector<SegmentRecord> records = {
      scored("c", 9.0, 60), scored("a", 11.0, 60), scored("b", 11.0, 60)};
  const Selection sel = rank_and_select(records, -1.0);
  REQUIRE(sel.ranked.size() == 3);
  CHECK(sel.ranked[0].id == "a");  // ties resolve toward the smaller id
  CHECK(sel.ranked[1].id == "b");
  CHECK(sel.ranked[2].id == "c");
  CHECK(sel.selected.size() == 3);  // negative budget keeps everything
}

TEST_CASE("selection fills the hour budget with the best prefix") {
  std::vector<SegmentRecord> records = {
      scored("a", 12.0, 1800), scored("b", 11.0, 1800), scored("c", 10.0, 1800)};
  const Selection one_hour = rank_and_select(records, 1.0);
  REQUIRE(one_hour.selected.size() == 2);
  CHECK(one_hour.selected[0].id == "a");
  CHECK(one_hour.selected[1].id == "b");

  CHECK(rank_and_select(records, 0.0).selected.empty());
  CHECK(rank_and_select(records, 10.0).selected.size() == 3);
}

TEST_CASE("errored and unscored records never rank") {
  auto err = scored("x", 99.0, 60);
  err.status = SegmentStatus::Error;
  err.error_reason = "TOO_NOISY";
  auto pending = scored("y", 98.0, 60);
  pending.quality_score.reset();
  std::vector<SegmentRecord> records = {scored("a", 5.0, 60), err, pending};
  const Selection sel = rank_and_select(records, -1.0);
  REQUIRE(sel.ranked.size() == 1);
  CHECK(sel.ranked[0].id == "a");
}

TEST_CASE("the funnel reflects where records were cut") {
  auto too_short = scored("s", 0.0, 30);
  too_short.status = SegmentStatus::Error;
  too_short.error_reason = "TOO_SHORT";
  too_short.quality_score.reset();
  auto noisy = scored("n", 0.0, 30);
  noisy.status = SegmentStatus::Error;
  noisy.error_reason = "TOO_NOISY";
  noisy.quality_score.reset();
  auto czech = scored("z", 0.0, 30);
  czech.status = SegmentStatus::Error;
  czech.error_reason = "NON_ENGLISH";
  czech.quality_score.reset();
  std::vector<SegmentRecord> records = {scored("a", 8.0, 3600), too_short,
                                        noisy, czech};

  const Selection sel = rank_and_select(records, -1.0);
  REQUIRE(sel.funnel.size() == 5);
  CHECK(sel.funnel[0].name == "recorded");
  CHECK(sel.funnel[0].count == 4);
  CHECK(sel.funnel[1].name == "post-vad");
  CHECK(sel.funnel[1].count == 3);  // TOO_SHORT drops here
  CHECK(sel.funnel[2].name == "post-snr");
  CHECK(sel.funnel[2].count == 2);  // TOO_NOISY drops here
  CHECK(sel.funnel[3].name == "post-eld");
  CHECK(sel.funnel[3].count == 1);  // NON_ENGLISH drops here
  CHECK(sel.funnel[4].name == "selected");
  CHECK(sel.funnel[4].count == 1);
  CHECK(sel.funnel[4].hours == doctest::Approx(1.0));

  const std::string report = funnel_report(sel);
  CHECK(report.find("recorded") != std::string::npos);
  CHECK(report.find("selected") != std::string::npos);
  CHECK(report.find("hours") != std::string::npos);
}
