#include "atc2/eld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "atc2/error.hpp"

namespace atc2 {

using nlohmann::json;

SoftCounts soft_counts(const std::vector<TranscriptToken>& words) {
  SoftCounts counts;
  for (const auto& t : words)
    counts[t.word] += std::clamp(t.conf, 0.0, 1.0);
  return counts;
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Cross-entropy of one logit against a {0,1} label, stable for large |z|.
double ce_loss(double z, int y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

double EldModel::loss_and_gradient(const std::vector<std::vector<double>>& x,
                                   const std::vector<int>& y,
                                   const std::vector<double>& params, double l2,
                                   std::vector<double>* grad) {
  if (x.empty() || x.size() != y.size())
    throw AtcError(ErrorCode::InvariantViolation, "bad training batch");
  const std::size_t d = params.size() - 1;
  const double n = static_cast<double>(x.size());
  double loss = 0.0;
  if (grad) grad->assign(params.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != d)
      throw AtcError(ErrorCode::LengthMismatch, "feature width mismatch");
    double z = params[d];
    for (std::size_t k = 0; k < d; ++k) z += params[k] * x[i][k];
    loss += ce_loss(z, y[i]);
    if (grad) {
      const double delta = sigmoid(z) - y[i];
      for (std::size_t k = 0; k < d; ++k) (*grad)[k] += delta * x[i][k];
      (*grad)[d] += delta;
    }
  }
  loss /= n;
  if (grad)
    for (double& g : *grad) g /= n;
  for (std::size_t k = 0; k < d; ++k) {
    loss += 0.5 * l2 * params[k] * params[k];
    if (grad) (*grad)[k] += l2 * params[k];
  }
  return loss;
}

EldModel EldModel::train(const std::vector<LabelledUtterance>& corpus,
                         const TrainOptions& opts) {
  std::vector<SoftCounts> docs;
  std::vector<int> labels;
  for (const auto& u : corpus) {
    SoftCounts c = soft_counts(u.words);
    double mass = 0.0;
    for (const auto& [w, m] : c) mass += m;
    if (mass <= 0.0) continue;  // nothing to learn from
    docs.push_back(std::move(c));
    labels.push_back(u.positive ? 1 : 0);
  }
  if (docs.empty())
    throw AtcError(ErrorCode::EmptyCorpus, "no usable training utterances");
  if (std::all_of(labels.begin(), labels.end(), [&](int l) { return l == labels[0]; }))
    throw AtcError(ErrorCode::SingleClassCorpus,
                   "training corpus has a single label");

  EldModel model;
  model.opts_ = opts;
  std::map<std::string, int> df;
  for (const auto& c : docs)
    for (const auto& [w, m] : c)
      if (m > 0.0) ++df[w];
  for (const auto& [w, cnt] : df) {
    (void)cnt;
    model.vocab_.push_back(w);
  }
  for (std::size_t i = 0; i < model.vocab_.size(); ++i)
    model.vocab_index_[model.vocab_[i]] = static_cast<int>(i);
  const double n_docs = static_cast<double>(docs.size());
  model.idf_.resize(model.vocab_.size());
  for (std::size_t i = 0; i < model.vocab_.size(); ++i)
    model.idf_[i] = std::log(n_docs / (1.0 + df[model.vocab_[i]])) + 1.0;

  model.weights_.assign(model.vocab_.size(), 0.0);
  model.bias_ = 0.0;

  std::vector<std::vector<double>> x;
  x.reserve(docs.size());
  for (const auto& c : docs) x.push_back(model.featurize(c));

  std::vector<double> params(model.vocab_.size() + 1, 0.0);
  std::vector<double> grad;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    loss_and_gradient(x, labels, params, opts.l2, &grad);
    for (std::size_t k = 0; k < params.size(); ++k)
      params[k] -= opts.learning_rate * grad[k];
  }
  model.weights_.assign(params.begin(), params.end() - 1);
  model.bias_ = params.back();
  return model;
}

std::vector<double> EldModel::featurize(const SoftCounts& counts) const {
  std::vector<double> x(vocab_.size(), 0.0);
  double mass = 0.0;
  for (const auto& [w, m] : counts) {
    auto it = vocab_index_.find(w);
    if (it != vocab_index_.end() && m > 0.0) {
      x[it->second] = m;
      mass += m;
    }
  }
  if (mass <= 0.0) return x;  // all zeros: no in-vocabulary evidence
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = x[i] / mass * idf_[i];
  return x;
}

double EldModel::score(const SoftCounts& counts) const {
  double mass = 0.0;
  for (const auto& [w, m] : counts)
    if (vocab_index_.count(w)) mass += std::max(0.0, m);
  if (mass <= 0.0)
    throw AtcError(ErrorCode::EmptyEvidence,
                   "no in-vocabulary confidence mass");
  const std::vector<double> x = featurize(counts);
  double z = bias_;
  for (std::size_t k = 0; k < x.size(); ++k) z += weights_[k] * x[k];
  return sigmoid(z);
}

double EldModel::score(const std::vector<TranscriptToken>& words) const {
  return score(soft_counts(words));
}

std::string EldModel::serialize() const {
  json j;
  j["version"] = 1;
  j["vocabulary"] = vocab_;
  j["idf"] = idf_;
  j["weights"] = weights_;
  j["bias"] = bias_;
  j["seed"] = opts_.seed;
  j["epochs"] = opts_.epochs;
  j["learning_rate"] = opts_.learning_rate;
  j["l2"] = opts_.l2;
  return j.dump();
}

EldModel EldModel::deserialize(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw AtcError(ErrorCode::MalformedRecord, e.what());
  }
  if (j.value("version", 0) != 1)
    throw AtcError(ErrorCode::MalformedRecord, "unsupported model version");
  EldModel m;
  try {
    m.vocab_ = j.at("vocabulary").get<std::vector<std::string>>();
    m.idf_ = j.at("idf").get<std::vector<double>>();
    m.weights_ = j.at("weights").get<std::vector<double>>();
    m.bias_ = j.at("bias").get<double>();
    m.opts_.seed = j.value("seed", 0ULL);
    m.opts_.epochs = j.value("epochs", 0);
    m.opts_.learning_rate = j.value("learning_rate", 0.0);
    m.opts_.l2 = j.value("l2", 0.0);
  } catch (const json::exception& e) {
    throw AtcError(ErrorCode::MalformedRecord, e.what());
  }
  if (m.vocab_.size() != m.idf_.size() || m.vocab_.size() != m.weights_.size())
    throw AtcError(ErrorCode::MalformedRecord, "model vector length mismatch");
  for (std::size_t i = 0; i < m.vocab_.size(); ++i)
    m.vocab_index_[m.vocab_[i]] = static_cast<int>(i);
  return m;
}

EldModel EldModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AtcError(ErrorCode::IoError, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

void EldModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw AtcError(ErrorCode::IoError, "cannot write " + path);
  out << serialize() << '\n';
}

double gradient_check(const std::vector<std::vector<double>>& x,
                      const std::vector<int>& y,
                      const std::vector<double>& params, double l2,
                      double eps) {
  std::vector<double> grad;
  EldModel::loss_and_gradient(x, y, params, l2, &grad);
  double worst = 0.0;
  std::vector<double> p = params;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double keep = p[k];
    p[k] = keep + eps;
    const double hi = EldModel::loss_and_gradient(x, y, p, l2, nullptr);
    p[k] = keep - eps;
    const double lo = EldModel::loss_and_gradient(x, y, p, l2, nullptr);
    p[k] = keep;
    const double numeric = (hi - lo) / (2.0 * eps);
    const double rel = std::abs(numeric - grad[k]) /
                       std::max(1e-12, std::abs(numeric) + std::abs(grad[k]));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace atc2
