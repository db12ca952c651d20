#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "atc2/error.hpp"
#include "atc2/signal.hpp"
#include "oracles.hpp"

using namespace atc2;
using oracles::code_of;

namespace {

constexpr double kRate = 16000.0;

std::vector<double> silence(double seconds) {
  return std::vector<double>(static_cast<std::size_t>(seconds * kRate), 0.0);
}

// Constant-power square wave: exact RMS regardless of where frames fall.
void add_square(std::vector<double>& s, double start_s, double len_s,
                double amp) {
  const std::size_t a = static_cast<std::size_t>(start_s * kRate);
  const std::size_t b = a + static_cast<std::size_t>(len_s * kRate);
  for (std::size_t i = a; i < b && i < s.size(); ++i)
    s[i] = (i % 2 == 0) ? amp : -amp;
}

}  // namespace

TEST_CASE("silence has no speech segments") {
  CHECK(vad(silence(1.0), kRate).empty());
}

TEST_CASE("a padded tone is localized to within one frame") {
  auto s = silence(3.0);
  add_square(s, 1.0, 1.0, 0.5);
  auto segs = vad(s, kRate);
  REQUIRE(segs.size() == 1);
  CHECK(std::abs(segs[0].start - 1.0) <= 0.025 + 1e-9);
  CHECK(std::abs(segs[0].end - 2.0) <= 0.025 + 1e-9);
  CHECK(speech_length(segs) == doctest::Approx(1.0).epsilon(0.06));
}

TEST_CASE("pauses shorter than 0.2s merge, longer ones split") {
  auto merged = silence(3.0);
  add_square(merged, 0.5, 0.5, 0.5);
  add_square(merged, 1.1, 0.5, 0.5);  // 0.1 s gap
  auto one = vad(merged, kRate);
  REQUIRE(one.size() == 1);
  CHECK(one[0].start == doctest::Approx(0.5).epsilon(0.06));
  CHECK(one[0].end == doctest::Approx(1.6).epsilon(0.06));

  auto apart = silence(3.0);
  add_square(apart, 0.5, 0.5, 0.5);
  add_square(apart, 1.3, 0.5, 0.5);  // 0.3 s gap
  CHECK(vad(apart, kRate).size() == 2);
}

TEST_CASE("vad decisions are invariant to global gain") {
  auto s = silence(4.0);
  add_square(s, 0.0, 4.0, 0.001);  // low-level noise floor everywhere
  add_square(s, 1.0, 0.8, 0.5);
  add_square(s, 2.5, 0.6, 0.4);
  auto base = vad(s, kRate);
  REQUIRE(!base.empty());
  for (double gain : {2.0, 0.5, 8.0}) {
    auto scaled = s;
    for (double& x : scaled) x *= gain;
    auto segs = vad(scaled, kRate);
    REQUIRE(segs.size() == base.size());
    for (std::size_t i = 0; i < segs.size(); ++i) {
      CHECK(segs[i].start == base[i].start);
      CHECK(segs[i].end == base[i].end);
    }
  }
}

TEST_CASE("vad input validation") {
  CHECK(code_of([] { vad({}, kRate); }) == ErrorCode::EmptyAudio);
  CHECK(code_of([] { vad({0.1, 0.2}, kRate, 5); }) ==
        ErrorCode::InvariantViolation);
  CHECK(code_of([] { vad({0.1, 0.2}, kRate, 200); }) ==
        ErrorCode::InvariantViolation);
  CHECK(code_of([] { vad({0.1, 0.2}, 0.0); }) ==
        ErrorCode::InvariantViolation);
}

TEST_CASE("snr of a 100x power ratio is 20 dB") {
  auto s = silence(2.0);
  add_square(s, 0.0, 0.5, 0.01);
  add_square(s, 0.5, 1.0, 0.1);  // 100x the noise power
  add_square(s, 1.5, 0.5, 0.01);
  const std::vector<VadSegment> segs = {{0.5, 1.5}};
  CHECK(std::abs(estimate_snr(s, kRate, segs) - 20.0) <= 0.1);
}

TEST_CASE("degenerate speech/noise splits give 0 dB") {
  auto s = silence(1.0);
  add_square(s, 0.0, 1.0, 0.3);
  CHECK(estimate_snr(s, kRate, {{0.0, 1.0}}) == 0.0);  // all speech
  CHECK(estimate_snr(s, kRate, {}) == 0.0);            // no speech
  auto equal = silence(2.0);
  add_square(equal, 0.0, 2.0, 0.2);
  CHECK(estimate_snr(equal, kRate, {{0.0, 1.0}}) ==
        doctest::Approx(0.0).epsilon(1e-9));  // equal powers
}

TEST_CASE("snr clamps to [0, 40]") {
  auto loud = silence(2.0);
  add_square(loud, 0.0, 1.0, 1e-5);
  add_square(loud, 1.0, 1.0, 1.0);
  CHECK(estimate_snr(loud, kRate, {{1.0, 2.0}}) == 40.0);
  CHECK(estimate_snr(loud, kRate, {{0.0, 1.0}}) == 0.0);  // inverted split
  CHECK(code_of([] { estimate_snr({}, kRate, {}); }) == ErrorCode::EmptyAudio);
}

TEST_CASE("wav io round-trips 16-bit audio") {
  WavData w;
  w.sample_rate = 8000.0;
  for (int i = 0; i < 800; ++i)
    w.samples.push_back(0.8 * std::sin(2.0 * M_PI * 440.0 * i / 8000.0));
  const std::string path = "wav_test.wav";
  write_wav(path, w);
  auto back = read_wav(path);
  std::remove(path.c_str());
  CHECK(back.sample_rate == doctest::Approx(8000.0));
  REQUIRE(back.samples.size() == w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    CHECK(std::abs(back.samples[i] - w.samples[i]) <= 1e-3);
}

TEST_CASE("non-wav bytes are rejected") {
  const std::string path = "not_a_wav.wav";
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("definitely not riff data", f);
    std::fclose(f);
  }
  CHECK(code_of([&] { read_wav(path); }) == ErrorCode::MalformedRecord);
  std::remove(path.c_str());
}
