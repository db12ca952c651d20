#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "atc2/eld.hpp"
#include "atc2/model.hpp"

namespace atc2 {

// Everything the generator does is a pure function of this spec; the
// seed fixes sampling, lattice confusions, and file contents.
struct SynthSpec {
  int num_utterances = 200;
  double frac_non_english = 0.1;
  int callsign_pool = 20;
  double noise = 0.3;  // probability a callsign digit grows a confusion arc
  std::uint64_t seed = 42;

  static SynthSpec parse_json(const std::string& text);
  std::string to_json() const;
};

struct SynthCorpus {
  // Pipeline inputs: lattice + signal stats, transcript left empty.
  std::vector<SegmentRecord> records;
  // Ground truth: transcript, entities, turns filled in; same ids.
  std::vector<SegmentRecord> references;
  // Surveillance context: every callsign in the pool.
  ContextList context;
  // id -> the one callsign code actually spoken in that utterance
  // (absent for non-English utterances).
  std::map<std::string, std::string> gt_callsigns;
};

// Samples grammar-conformant controller/pilot exchanges over a fixed
// callsign pool, then builds each record's lattice from the reference
// tokens with digit-confusion alternatives at the given noise level.
// Confusions sometimes coincide with another pool callsign, which a
// whole-pool boost cannot repair but a ground-truth boost can.
SynthCorpus generate_corpus(const SynthSpec& spec);

// Writes records.jsonl, reference.jsonl, context.csv and context_gt.csv
// ("id,code" rows) under dir.
void write_corpus(const SynthCorpus& corpus, const std::string& dir);

// Separable two-language corpus for training/evaluating the English
// detector; `frac_english` of the utterances are English. Deterministic
// per seed.
std::vector<EldModel::LabelledUtterance> make_bilingual_corpus(
    int n, std::uint64_t seed, double frac_english = 0.5);

}  // namespace atc2
