#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "atc2/model.hpp"

namespace atc2 {

// word -> accumulated confidence mass (sum of per-token confidences).
using SoftCounts = std::map<std::string, double>;

SoftCounts soft_counts(const std::vector<TranscriptToken>& words);

// Binary linear text classifier: TF-IDF features over confidence-weighted
// word counts, logistic regression trained with full-batch gradient
// descent. Used for English detection (positive = English) and reused for
// speaker-role detection (positive = ATCO).
class EldModel {
 public:
  struct TrainOptions {
    int epochs = 400;
    double learning_rate = 0.5;
    double l2 = 1e-4;
    std::uint64_t seed = 0;  // recorded; training starts from zeros
  };

  struct LabelledUtterance {
    std::vector<TranscriptToken> words;
    bool positive = false;
  };

  // Fits vocabulary, IDF table (ln(N/(1+df)) + 1) and classifier on the
  // corpus. Throws EmptyCorpus / SingleClassCorpus on degenerate input.
  static EldModel train(const std::vector<LabelledUtterance>& corpus,
                        const TrainOptions& opts);
  static EldModel train(const std::vector<LabelledUtterance>& corpus) {
    return train(corpus, TrainOptions());
  }

  // P(positive) in (0,1). Throws EmptyEvidence when no in-vocabulary
  // token carries confidence mass.
  double score(const std::vector<TranscriptToken>& words) const;
  double score(const SoftCounts& counts) const;
  bool decide(const std::vector<TranscriptToken>& words,
              double threshold = 0.5) const {
    return score(words) >= threshold;
  }

  // L1-normalized TF (over in-vocabulary mass) times IDF; the exact
  // vector the classifier consumes. Zero vector when nothing is in
  // vocabulary.
  std::vector<double> featurize(const SoftCounts& counts) const;

  const std::vector<std::string>& vocabulary() const { return vocab_; }
  const std::vector<double>& idf() const { return idf_; }
  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  const TrainOptions& options() const { return opts_; }

  // Versioned JSON (vocabulary, idf, weights, bias, seed, hyperparameters).
  std::string serialize() const;
  static EldModel deserialize(const std::string& text);
  static EldModel load(const std::string& path);
  void save(const std::string& path) const;

  // Mean cross-entropy (+ L2 on weights) and its gradient at `params`
  // (feature weights with trailing bias). Shared by the trainer and the
  // finite-difference check.
  static double loss_and_gradient(const std::vector<std::vector<double>>& x,
                                  const std::vector<int>& y,
                                  const std::vector<double>& params, double l2,
                                  std::vector<double>* grad);

 private:
  std::vector<std::string> vocab_;
  std::map<std::string, int> vocab_index_;
  std::vector<double> idf_;
  std::vector<double> weights_;
  double bias_ = 0.0;
  TrainOptions opts_;
};

// Max relative error between the analytic gradient and central finite
// differences of the cross-entropy loss at `params`.
double gradient_check(const std::vector<std::vector<double>>& x,
                      const std::vector<int>& y,
                      const std::vector<double>& params, double l2,
                      double eps = 1e-5);

}  // namespace atc2
