#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "atc2/eld.hpp"
#include "atc2/error.hpp"
#include "atc2/synth.hpp"
#include "oracles.hpp"

using namespace atc2;
using oracles::code_of;
using oracles::split;

namespace {

std::vector<TranscriptToken> toks(const std::string& text, double conf = 1.0) {
  std::vector<TranscriptToken> out;
  for (const auto& w : split(text)) out.push_back({w, conf});
  return out;
}

}  // namespace

TEST_CASE("soft counts accumulate confidence mass per word") {
  auto counts = soft_counts({{"seven", 0.9}, {"seven", 0.5}, {"two", 1.0}});
  CHECK(counts.size() == 2);
  CHECK(counts["seven"] == doctest::Approx(1.4));
  CHECK(counts["two"] == doctest::Approx(1.0));
  CHECK(soft_counts({}).empty());
}

TEST_CASE("a separable corpus is classified cleanly") {
  const auto corpus = make_bilingual_corpus(200, 3);
  std::vector<EldModel::LabelledUtterance> train_set(corpus.begin(),
                                                     corpus.begin() + 160);
  std::vector<EldModel::LabelledUtterance> held_out(corpus.begin() + 160,
                                                    corpus.end());
  const EldModel model = EldModel::train(train_set);

  int right = 0;
  for (const auto& u : train_set)
    right += (model.decide(u.words) == u.positive);
  CHECK(right == (int)train_set.size());  // train accuracy 100%

  int held_right = 0;
  for (const auto& u : held_out)
    held_right += (model.decide(u.words) == u.positive);
  CHECK((double)held_right / held_out.size() >= 0.95);
}

TEST_CASE("retraining is bit-identical") {
  const auto corpus = make_bilingual_corpus(80, 11);
  const EldModel a = EldModel::train(corpus);
  const EldModel b = EldModel::train(corpus);
  CHECK(a.serialize() == b.serialize());
}

TEST_CASE("degenerate corpora are rejected") {
  CHECK(code_of([] { EldModel::train({}); }) == ErrorCode::EmptyCorpus);

  std::vector<EldModel::LabelledUtterance> ghosts = {
      {toks("a b", 0.0), true}, {toks("c", 0.0), false}};
  CHECK(code_of([&] { EldModel::train(ghosts); }) == ErrorCode::EmptyCorpus);

  std::vector<EldModel::LabelledUtterance> one_class = {
      {toks("descend two"), true}, {toks("climb three"), true}};
  CHECK(code_of([&] { EldModel::train(one_class); }) ==
        ErrorCode::SingleClassCorpus);
}

TEST_CASE("scores separate the two languages") {
  const EldModel model = EldModel::train(make_bilingual_corpus(120, 7));
  CHECK(model.score(toks("descend flight level one two zero")) > 0.5);
  CHECK(model.score(toks("dobry den na shledanou")) < 0.5);
}

TEST_CASE("no in-vocabulary mass raises EmptyEvidence") {
  const EldModel model = EldModel::train(make_bilingual_corpus(120, 7));
  CHECK(code_of([&] { model.score(toks("xylophone qqq")); }) ==
        ErrorCode::EmptyEvidence);
  CHECK(code_of([&] { model.score(toks("descend", 0.0)); }) ==
        ErrorCode::EmptyEvidence);
  CHECK(code_of([&] { model.score(std::vector<TranscriptToken>{}); }) ==
        ErrorCode::EmptyEvidence);
}

TEST_CASE("score depends on proportions, not total mass") {
  const EldModel model = EldModel::train(make_bilingual_corpus(120, 7));
  SoftCounts small = {{"descend", 0.4}, {"climb", 0.2}};
  SoftCounts large = {{"descend", 0.8}, {"climb", 0.4}};
  CHECK(model.score(small) == doctest::Approx(model.score(large)));
}

TEST_CASE("analytic gradient matches finite differences") {
  oracles::TestRng rng(2024);
  const int dim = 10;
  std::vector<std::vector<double>> x(100, std::vector<double>(dim));
  std::vector<int> y(100);
  std::vector<double> params(dim + 1);
  for (auto& row : x)
    for (auto& v : row) v = 2.0 * rng.unit();
  for (auto& label : y) label = rng.coin() ? 1 : 0;
  for (auto& p : params) p = 2.0 * rng.unit() - 1.0;
  CHECK(gradient_check(x, y, params, 1e-4, 1e-5) < 1e-6);
  CHECK(gradient_check(x, y, params, 0.0, 1e-5) < 1e-6);
}

TEST_CASE("gradient at zero weights has a closed form") {
  // With all-zero parameters every prediction is 1/2, so the gradient is
  // the mean of (1/2 - y) x and the loss is ln 2.
  oracles::TestRng rng(5);
  const int dim = 4, n = 25;
  std::vector<std::vector<double>> x(n, std::vector<double>(dim));
  std::vector<int> y(n);
  for (auto& row : x)
    for (auto& v : row) v = rng.unit();
  for (auto& label : y) label = rng.coin() ? 1 : 0;
  std::vector<double> zeros(dim + 1, 0.0), grad;
  const double loss = EldModel::loss_and_gradient(x, y, zeros, 0.0, &grad);
  CHECK(loss == doctest::Approx(std::log(2.0)));
  for (int k = 0; k < dim; ++k) {
    double want = 0.0;
    for (int i = 0; i < n; ++i) want += (0.5 - y[i]) * x[i][k];
    CHECK(grad[k] == doctest::Approx(want / n));
  }
  double want_bias = 0.0;
  for (int i = 0; i < n; ++i) want_bias += 0.5 - y[i];
  CHECK(grad[dim] == doctest::Approx(want_bias / n));
}

TEST_CASE("training loss never increases across epochs") {
  const auto corpus = make_bilingual_corpus(60, 19);
  const EldModel trained = EldModel::train(corpus);  // fixes vocab and idf

  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& u : corpus) {
    x.push_back(trained.featurize(soft_counts(u.words)));
    y.push_back(u.positive ? 1 : 0);
  }
  EldModel::TrainOptions opts;
  std::vector<double> params(trained.vocabulary().size() + 1, 0.0), grad;
  double prev = EldModel::loss_and_gradient(x, y, params, opts.l2, &grad);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    for (std::size_t k = 0; k < params.size(); ++k)
      params[k] -= opts.learning_rate * grad[k];
    const double loss = EldModel::loss_and_gradient(x, y, params, opts.l2, &grad);
    CHECK(loss <= prev + 1e-12);
    prev = loss;
  }
}

TEST_CASE("model json survives a round-trip") {
  const EldModel model = EldModel::train(make_bilingual_corpus(80, 23));
  const EldModel back = EldModel::deserialize(model.serialize());
  CHECK(back.vocabulary() == model.vocabulary());
  CHECK(back.bias() == model.bias());
  for (const auto& probe :
       {toks("descend two zero"), toks("dobry den"), toks("contact praha")})
    CHECK(back.score(probe) == model.score(probe));

  const std::string path = "eld_model_test.json";
  model.save(path);
  const EldModel loaded = EldModel::load(path);
  std::remove(path.c_str());
  CHECK(loaded.serialize() == model.serialize());
}

TEST_CASE("broken model json is rejected") {
  CHECK(code_of([] { EldModel::deserialize("{oops"); }) ==
        ErrorCode::MalformedRecord);
  CHECK(code_of([] { EldModel::deserialize(R"({"version":7})"); }) ==
        ErrorCode::MalformedRecord);
  CHECK(code_of([] {
          EldModel::deserialize(
              R"({"version":1,"vocabulary":["a"],"idf":[1.0,2.0],)"
              R"("weights":[0.1],"bias":0.0})");
        }) == ErrorCode::MalformedRecord);
}
