#include "atc2/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "atc2/error.hpp"

namespace atc2 {

std::vector<VadSegment> vad(const std::vector<double>& samples,
                            double sample_rate, int frame_ms,
                            double threshold_db) {
  if (samples.empty())
    throw AtcError(ErrorCode::EmptyAudio, "no samples");
  if (frame_ms < 10 || frame_ms > 100)
    throw AtcError(ErrorCode::InvariantViolation,
                   "frame_ms outside [10, 100]");
  if (sample_rate <= 0)
    throw AtcError(ErrorCode::InvariantViolation, "bad sample rate");

  const std::size_t frame_len = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(sample_rate * frame_ms / 1000.0)));
  const std::size_t n = samples.size();
  const std::size_t num_frames = (n + frame_len - 1) / frame_len;

  std::vector<double> rms(num_frames, 0.0);
  for (std::size_t f = 0; f < num_frames; ++f) {
    const std::size_t begin = f * frame_len;
    const std::size_t end = std::min(n, begin + frame_len);
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += samples[i] * samples[i];
    rms[f] = std::sqrt(acc / static_cast<double>(end - begin));
  }

  const double floor_rms = *std::min_element(rms.begin(), rms.end());
  const double gate = floor_rms * std::pow(10.0, threshold_db / 20.0);
  std::vector<bool> speech(num_frames);
  for (std::size_t f = 0; f < num_frames; ++f)
    speech[f] = rms[f] > 0.0 && (floor_rms == 0.0 || rms[f] > gate);

  const double frame_s = static_cast<double>(frame_len) / sample_rate;
  const double audio_len = static_cast<double>(n) / sample_rate;
  std::vector<VadSegment> segments;
  for (std::size_t f = 0; f < num_frames;) {
    if (!speech[f]) {
      ++f;
      continue;
    }
    std::size_t g = f;
    while (g < num_frames && speech[g]) ++g;
    VadSegment seg{f * frame_s, std::min(audio_len, g * frame_s)};
    if (!segments.empty() && seg.start - segments.back().end < 0.2)
      segments.back().end = seg.end;
    else
      segments.push_back(seg);
    f = g;
  }
  return segments;
}

double speech_length(const std::vector<VadSegment>& segments) {
  double total = 0.0;
  for (const auto& s : segments) total += s.end - s.start;
  return total;
}

double estimate_snr(const std::vector<double>& samples, double sample_rate,
                    const std::vector<VadSegment>& segments) {
  if (samples.empty())
    throw AtcError(ErrorCode::EmptyAudio, "no samples");
  const std::size_t n = samples.size();
  std::vector<bool> in_speech(n, false);
  for (const auto& seg : segments) {
    auto a = static_cast<std::size_t>(
        std::clamp(std::lround(seg.start * sample_rate), 0L,
                   static_cast<long>(n)));
    auto b = static_cast<std::size_t>(
        std::clamp(std::lround(seg.end * sample_rate), 0L,
                   static_cast<long>(n)));
    for (std::size_t i = a; i < b; ++i) in_speech[i] = true;
  }
  double p_speech = 0.0, p_noise = 0.0;
  std::size_t n_speech = 0, n_noise = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_speech[i]) {
      p_speech += samples[i] * samples[i];
      ++n_speech;
    } else {
      p_noise += samples[i] * samples[i];
      ++n_noise;
    }
  }
  if (n_speech == 0 || n_noise == 0) return 0.0;
  p_speech /= static_cast<double>(n_speech);
  p_noise /= static_cast<double>(n_noise);
  if (p_speech <= 0.0 || p_noise <= 0.0) return 0.0;
  return std::clamp(10.0 * std::log10(p_speech / p_noise), 0.0, 40.0);
}

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_u16(std::string& s, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff);
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AtcError(ErrorCode::IoError, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 44 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0)
    throw AtcError(ErrorCode::MalformedRecord, path + ": not a RIFF WAV");

  WavData wav;
  std::uint16_t channels = 0, bits = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(p + pos + 4);
    const bool is_fmt = std::memcmp(p + pos, "fmt ", 4) == 0;
    const bool is_data = std::memcmp(p + pos, "data", 4) == 0;
    const std::size_t body = pos + 8;
    if (body + size > bytes.size())
      throw AtcError(ErrorCode::MalformedRecord, path + ": truncated chunk");
    if (is_fmt && size >= 16) {
      const std::uint16_t format = read_u16(p + body);
      channels = read_u16(p + body + 2);
      wav.sample_rate = read_u32(p + body + 4);
      bits = read_u16(p + body + 14);
      if (format != 1 || channels != 1 || bits != 16)
        throw AtcError(ErrorCode::MalformedRecord,
                       path + ": only 16-bit PCM mono supported");
      have_fmt = true;
    } else if (is_data) {
      if (!have_fmt)
        throw AtcError(ErrorCode::MalformedRecord, path + ": data before fmt");
      wav.samples.reserve(size / 2);
      for (std::size_t i = 0; i + 1 < size; i += 2) {
        auto v = static_cast<std::int16_t>(read_u16(p + body + i));
        wav.samples.push_back(static_cast<double>(v) / 32768.0);
      }
      return wav;
    }
    pos = body + size + (size & 1);
  }
  throw AtcError(ErrorCode::MalformedRecord, path + ": no data chunk");
}

void write_wav(const std::string& path, const WavData& wav) {
  std::string body;
  for (double s : wav.samples) {
    const double clamped = std::clamp(s, -1.0, 1.0);
    auto v = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
    put_u16(body, static_cast<std::uint16_t>(v));
  }
  std::string out;
  out += "RIFF";
  put_u32(out, static_cast<std::uint32_t>(36 + body.size()));
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  const auto rate = static_cast<std::uint32_t>(std::lround(wav.sample_rate));
  put_u32(out, rate);
  put_u32(out, rate * 2);  // byte rate
  put_u16(out, 2);         // block align
  put_u16(out, 16);        // bits
  out += "data";
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  out += body;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw AtcError(ErrorCode::IoError, "cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace atc2
