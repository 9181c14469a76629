#include <doctest.h>

#include <random>

#include "core/eval.hpp"
#include "core/training.hpp"

using namespace dar;
using namespace dar::eval;

namespace {

// Brute-force micro PRF over flattened token pairs.
struct BrutePrf {
  long tp = 0, fp = 0, fn = 0;
};
BrutePrf brute(const std::vector<std::vector<int>>& pred,
               const std::vector<std::vector<int>>& gold) {
  BrutePrf b;
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t t = 0; t < pred[i].size(); ++t) {
      if (pred[i][t] && gold[i][t]) ++b.tp;
      if (pred[i][t] && !gold[i][t]) ++b.fp;
      if (!pred[i][t] && gold[i][t]) ++b.fn;
    }
  return b;
}

}  // namespace

TEST_CASE("token PRF worked example: {1,2,3} vs gold {2,3,4} gives 2/3") {
  std::vector<std::vector<int>> pred = {{0, 1, 1, 1, 0}};
  std::vector<std::vector<int>> gold = {{0, 0, 1, 1, 1}};
  TokenPrf r = token_prf1(pred, gold);
  REQUIRE(r.precision.has_value());
  CHECK(*r.precision == doctest::Approx(2.0 / 3.0));
  CHECK(*r.recall == doctest::Approx(2.0 / 3.0));
  CHECK(*r.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("token PRF nan sentinels on zero denominators") {
  // nothing predicted -> precision undefined; nothing gold -> recall undefined
  TokenPrf no_pred = token_prf1({{0, 0}}, {{1, 0}});
  CHECK_FALSE(no_pred.precision.has_value());
  CHECK(no_pred.recall.has_value());
  CHECK(*no_pred.recall == 0.0);
  CHECK_FALSE(no_pred.f1.has_value());  // P + R path undefined
  CHECK(metric_str(no_pred.precision) == "nan");
  CHECK(metric_str(Metric{0.25}) == "0.25");

  TokenPrf no_gold = token_prf1({{1, 0}}, {{0, 0}});
  CHECK_FALSE(no_gold.recall.has_value());

  // predicted and gold disjoint but both nonempty -> all zero, F1 undefined
  TokenPrf disjoint = token_prf1({{1, 0}}, {{0, 1}});
  CHECK(*disjoint.precision == 0.0);
  CHECK(*disjoint.recall == 0.0);
  CHECK_FALSE(disjoint.f1.has_value());
}

TEST_CASE("token PRF micro-aggregates and matches a brute-force oracle") {
  std::mt19937_64 rng(substream(17, "test.prf"));
  std::vector<std::vector<int>> pred, gold;
  for (int i = 0; i < 40; ++i) {
    int len = 3 + static_cast<int>(rng() % 10);
    std::vector<int> p(len), g(len);
    for (int t = 0; t < len; ++t) {
      p[t] = static_cast<int>(rng() % 2);
      g[t] = static_cast<int>(rng() % 2);
    }
    pred.push_back(p);
    gold.push_back(g);
  }
  TokenPrf r = token_prf1(pred, gold);
  BrutePrf b = brute(pred, gold);
  CHECK(*r.precision == doctest::Approx(double(b.tp) / (b.tp + b.fp)));
  CHECK(*r.recall == doctest::Approx(double(b.tp) / (b.tp + b.fn)));
  double p = *r.precision, rr = *r.recall;
  CHECK(*r.f1 == doctest::Approx(2 * p * rr / (p + rr)));
}

TEST_CASE("token PRF rejects ragged input") {
  CHECK_THROWS_AS(token_prf1({{1, 0}}, {{1, 0, 1}}), Error);
  CHECK_THROWS_AS(token_prf1({{1}}, {{1}, {0}}), Error);
}

TEST_CASE("argmax ties break toward the lowest class index") {
  CHECK(argmax_class({0.2, 0.5, 0.3}) == 1);
  CHECK(argmax_class({0.4, 0.4, 0.2}) == 0);
  CHECK(argmax_class({0.25, 0.25, 0.25, 0.25}) == 0);
}

TEST_CASE("sparsity counts selected tokens over real tokens") {
  CHECK(sparsity({{1, 0, 0, 0}, {1, 1, 0, 0}}) == doctest::Approx(3.0 / 8.0));
  CHECK(sparsity({{1, 0, 0, 0}}, {{1, 1, 0, 0}}) == doctest::Approx(0.5));
}

TEST_CASE("end-to-end eval on a tiny game is deterministic and consistent") {
  corpus::SynthSpec spec;
  spec.vocab_size = 32;
  spec.sequence_length = 16;
  spec.rationale_span_length = 3;
  spec.n_train = 20;
  spec.n_dev = 10;
  spec.n_annotation = 10;
  spec.seed = 2;
  corpus::CorpusTriple data = corpus::synth_planted(spec);
  corpus::EmbeddingTable table = corpus::random_embeddings(8, spec.vocab_size, 2);

  training::TrainConfig cfg;
  cfg.model.embed_dim = 8;
  cfg.model.hidden = 6;
  cfg.seed = 3;
  game::GameParameters g;
  g.generator = training::fresh_generator(cfg);
  g.predictor = training::fresh_predictor(cfg);

  auto masks1 = predicted_masks(g, table, data.annotation, 50);
  auto masks2 = predicted_masks(g, table, data.annotation, 50);
  CHECK(masks1 == masks2);

  RationaleMetrics m = full_metrics(g, table, data.annotation, 50);
  ShiftDiagnostic shift = shift_report(g, table, data.annotation, 50);
  CHECK(m.accuracy >= 0.0);
  CHECK(m.accuracy <= 1.0);
  CHECK(m.sparsity == doctest::Approx(sparsity(masks1)));
  CHECK(m.acc_fulltext ==
        doctest::Approx(accuracy(g, table, data.annotation,
                                 InputMode::fulltext, 50)));
  CHECK(shift.gap ==
        doctest::Approx(shift.acc_rationale - shift.acc_fulltext));
  REQUIRE(shift.per_class.size() == 2);

  // rationale-mode probabilities use the generator; fulltext ignores it
  auto p_full_a = predict_probs(g, table, data.annotation.examples[0],
                                InputMode::fulltext, 50);
  auto p_full_b = predict_probs(g, table, data.annotation.examples[0],
                                InputMode::fulltext, 99);
  CHECK(p_full_a == p_full_b);
}

TEST_CASE("metrics serialization: json shape, csv row, svg chart") {
  RationaleMetrics m;
  m.sparsity = 0.25;
  m.accuracy = 0.9;
  m.prf.precision = 0.8;
  m.prf.recall = 0.6;
  m.prf.f1 = 2 * 0.8 * 0.6 / 1.4;
  m.acc_fulltext = 0.85;
  ShiftDiagnostic s;
  s.acc_rationale = 0.9;
  s.acc_fulltext = 0.85;
  s.gap = 0.05;
  s.per_class.resize(2);
  s.per_class[0] = {0.9, 0.8, 0.85};
  s.per_class[1] = {0.7, 0.95, 0.8};

  std::string j = metrics_json(m, s, 7, "cafebabe");
  for (const char* key : {"\"S\"", "\"Acc\"", "\"P\"", "\"R\"", "\"F1\"",
                          "\"acc_fulltext\"", "\"per_class\"", "\"seed\"",
                          "\"config_hash\""})
    CHECK(j.find(key) != std::string::npos);
  CHECK(j.find("cafebabe") != std::string::npos);

  // nan sentinel appears as the string "nan"
  m.prf.f1.reset();
  std::string jn = metrics_json(m, s, 7, "cafebabe");
  CHECK(jn.find("\"nan\"") != std::string::npos);

  std::string header = metrics_csv_header();
  std::string row = metrics_csv_row("myrun", m, s, 7);
  CHECK(std::count(header.begin(), header.end(), ',') ==
        std::count(row.begin(), row.end(), ','));
  CHECK(row.find("myrun") != std::string::npos);

  std::string svg = accuracy_bar_svg({"a", "b"}, {0.9, 0.5}, {0.85, 0.8});
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("rect") != std::string::npos);
}
