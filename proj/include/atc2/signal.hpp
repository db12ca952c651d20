#pragma once

#include <string>
#include <vector>

namespace atc2 {

struct VadSegment {
  double start = 0.0;  // seconds
  double end = 0.0;    // seconds, exclusive; start < end
};

// Energy-based voice activity detection over mono samples. Speech frames
// are those whose RMS exceeds the quietest frame by threshold_db (any
// non-silent frame when the quietest is pure silence); runs closer than
// 0.2 s are merged. Scale-invariant: a global gain change does not move
// the segments. frame_ms must lie in [10, 100]. Throws EmptyAudio.
std::vector<VadSegment> vad(const std::vector<double>& samples,
                            double sample_rate, int frame_ms = 25,
                            double threshold_db = 6.0);

double speech_length(const std::vector<VadSegment>& segments);

// Mean power inside the segments vs. outside, as 10*log10 ratio, clamped
// to [0, 40] dB. Degenerate splits (no segments, or segments covering
// every sample) give 0. Throws EmptyAudio.
double estimate_snr(const std::vector<double>& samples, double sample_rate,
                    const std::vector<VadSegment>& segments);

// RIFF WAV, 16-bit PCM mono only; samples scaled to [-1, 1].
struct WavData {
  std::vector<double> samples;
  double sample_rate = 16000.0;
};

WavData read_wav(const std::string& path);
void write_wav(const std::string& path, const WavData& wav);

}  // namespace atc2
