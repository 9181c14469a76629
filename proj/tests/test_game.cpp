#include <doctest.h>

#include <cmath>

#include "core/game.hpp"

using namespace dar;
using namespace dar::game;
using ag::Mat;
using ag::Var;

namespace {

ModelConfig tiny_model() {
  ModelConfig m;
  m.embed_dim = 6;
  m.hidden = 5;
  m.num_classes = 2;
  return m;
}

GameParameters tiny_game(std::uint64_t seed, bool with_disc = true) {
  GameParameters g;
  ModelConfig m = tiny_model();
  std::mt19937_64 gr = substream(seed, "test.gen");
  std::mt19937_64 pr = substream(seed, "test.pred");
  std::mt19937_64 dr = substream(seed, "test.disc");
  g.generator = std::make_shared<Generator>(m, gr);
  g.predictor = std::make_shared<Predictor>(m, pr);
  if (with_disc) {
    g.discriminator = std::make_shared<Predictor>(m, dr);
    g.discriminator->freeze();
  }
  return g;
}

corpus::EmbeddingTable tiny_table() {
  return corpus::random_embeddings(6, 12, 3);
}

std::vector<corpus::Example> tiny_examples() {
  std::vector<corpus::Example> ex(4);
  ex[0].tokens = {2, 3, 4, 5};
  ex[0].label = 0;
  ex[1].tokens = {6, 7, 8};
  ex[1].label = 1;
  ex[2].tokens = {9, 10, 2, 3, 4};
  ex[2].label = 1;
  ex[3].tokens = {5, 6};
  ex[3].label = 0;
  for (int i = 0; i < 4; ++i) ex[i].example_id = "t" + std::to_string(i);
  return ex;
}

std::vector<BatchItem> make_batch(const std::vector<corpus::Example>& ex,
                                  std::uint64_t noise_base) {
  std::vector<BatchItem> b;
  for (std::size_t i = 0; i < ex.size(); ++i)
    b.push_back({&ex[i], noise_base + i});
  return b;
}

}  // namespace

TEST_CASE("cross_entropy values: uniform gives ln 2, 0.9 gives -ln 0.9") {
  Mat p(2, 1);
  p << 0.5, 0.5;
  CHECK(ag::scalar(cross_entropy(ag::constant(p), 0)) ==
        doctest::Approx(std::log(2.0)));
  p << 0.1, 0.9;
  CHECK(ag::scalar(cross_entropy(ag::constant(p), 1)) ==
        doctest::Approx(-std::log(0.9)));
  CHECK(cross_entropy_value({0.1, 0.9}, 1) == doctest::Approx(-std::log(0.9)));
  // clamped at the floor
  CHECK(cross_entropy_value({1.0, 0.0}, 1) ==
        doctest::Approx(-std::log(kLogProbFloor)));
}

TEST_CASE("embed maps ids to table columns; pad column is zero") {
  corpus::EmbeddingTable t = tiny_table();
  auto xs = embed(t, {corpus::kPadId, 2, 5});
  REQUIRE(xs.size() == 3);
  CHECK(xs[0]->value == Mat::Zero(6, 1));
  CHECK(xs[1]->value == t.vectors.col(2));
  CHECK(xs[2]->value == t.vectors.col(5));
  CHECK_FALSE(xs[1]->requires_grad);
  CHECK_THROWS_AS(embed(t, {99}), Error);
}

TEST_CASE("predictor forward is a distribution; frozen predictor stops grads") {
  GameParameters g = tiny_game(1);
  corpus::EmbeddingTable t = tiny_table();
  auto xs = embed(t, {2, 3, 4});
  std::vector<int> pad = {1, 1, 1};
  Var probs = g.predictor->forward(xs, pad);
  double total = probs->value.sum();
  CHECK(total == doctest::Approx(1.0));
  for (int i = 0; i < probs->value.rows(); ++i) CHECK(probs->value(i, 0) > 0.0);

  std::uint64_t before = g.discriminator->params.checksum();
  Var dp = g.discriminator->forward(xs, pad);
  Var loss = cross_entropy(dp, 1);
  ag::backward(loss);
  for (const auto& v : g.discriminator->params.list())
    CHECK_FALSE(v->requires_grad);
  CHECK(g.discriminator->params.checksum() == before);
}

TEST_CASE("alignment_term requires a frozen discriminator") {
  GameParameters g = tiny_game(2);
  corpus::EmbeddingTable t = tiny_table();
  auto xs = embed(t, {2, 3});
  std::vector<int> pad = {1, 1};
  CHECK_NOTHROW(alignment_term(*g.discriminator, xs, pad, 0));
  Predictor unfrozen(tiny_model(), *[] {
    static std::mt19937_64 r = substream(4, "test.unfrozen");
    return &r;
  }());
  CHECK_THROWS_AS(alignment_term(unfrozen, xs, pad, 0), Error);
}

TEST_CASE("forward_generator: hard path yields 0/1 masks, soft path none") {
  GameParameters g = tiny_game(3);
  corpus::EmbeddingTable t = tiny_table();
  auto xs = embed(t, {2, 3, 4, 5});
  GeneratorOutput hard = forward_generator(*g.generator, xs, 11);
  REQUIRE(hard.hard.mask.m.size() == 4);
  CHECK(hard.pad_mask == std::vector<int>{1, 1, 1, 1});
  for (std::size_t i = 0; i < 4; ++i) {
    double v = ag::scalar(hard.mask_values[i]);
    CHECK((v == 0.0 || v == 1.0));
  }
  GeneratorOutput soft = forward_generator(*g.generator, xs, 11, MaskPath::soft);
  CHECK(soft.hard.mask.m.empty());
  for (std::size_t i = 0; i < 3; ++i) {
    double v = ag::scalar(soft.mask_values[i]);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  // same noise seed -> identical soft probabilities on both paths
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(ag::scalar(hard.soft[i]) == ag::scalar(soft.soft[i]));
}

TEST_CASE("dar_objective with align and omega weights zero equals rnp_objective") {
  GameParameters g = tiny_game(5);
  corpus::EmbeddingTable t = tiny_table();
  auto ex = tiny_examples();
  auto batch = make_batch(ex, 100);
  masking::RegularizerConfig reg{0.2, 1.0, 0.02};
  ObjectiveWeights w;
  w.align = 0.0;
  w.omega = 0.0;
  BatchLoss dar = dar_objective(g, t, batch, reg, w);
  BatchLoss rnp = rnp_objective(g, t, batch);
  CHECK(std::abs(dar.breakdown.task_ce - rnp.breakdown.task_ce) < 1e-12);
  CHECK(std::abs(dar.breakdown.total - rnp.breakdown.total) < 1e-12);
  CHECK(dar.breakdown.align_ce == 0.0);
  CHECK(dar.breakdown.omega == 0.0);
}

TEST_CASE("dar_objective breakdown composes with the weights") {
  GameParameters g = tiny_game(6);
  corpus::EmbeddingTable t = tiny_table();
  auto ex = tiny_examples();
  auto batch = make_batch(ex, 200);
  masking::RegularizerConfig reg{0.2, 1.0, 0.5};
  ObjectiveWeights w;
  w.task = 1.0;
  w.align = 0.7;
  w.omega = 0.3;
  BatchLoss loss = dar_objective(g, t, batch, reg, w);
  CHECK(loss.breakdown.total ==
        doctest::Approx(loss.breakdown.task_ce + 0.7 * loss.breakdown.align_ce +
                        0.3 * loss.breakdown.omega));
  CHECK(ag::scalar(loss.total) == doctest::Approx(loss.breakdown.total));
  CHECK(loss.breakdown.align_ce > 0.0);
}

TEST_CASE("positive align weight without a discriminator is an error") {
  GameParameters g = tiny_game(7, /*with_disc=*/false);
  corpus::EmbeddingTable t = tiny_table();
  auto ex = tiny_examples();
  auto batch = make_batch(ex, 300);
  masking::RegularizerConfig reg;
  CHECK_THROWS_AS(dar_objective(g, t, batch, reg, ObjectiveWeights{}), Error);
}

TEST_CASE("alignment gradients reach the generator but not the predictor") {
  GameParameters g = tiny_game(8);
  corpus::EmbeddingTable t = tiny_table();
  auto ex = tiny_examples();
  auto batch = make_batch(ex, 400);
  masking::RegularizerConfig reg{0.2, 1.0, 0.02};
  ObjectiveWeights align_only;
  align_only.task = 0.0;
  align_only.align = 1.0;
  align_only.omega = 0.0;
  BatchLoss loss = dar_objective(g, t, batch, reg, align_only);
  ag::zero_grad(g.generator->params.list());
  ag::zero_grad(g.predictor->params.list());
  ag::backward(loss.total);
  double gen_norm = 0.0, pred_norm = 0.0;
  for (const auto& v : g.generator->params.list())
    if (v->grad.size()) gen_norm += v->grad.norm();
  for (const auto& v : g.predictor->params.list())
    if (v->grad.size()) pred_norm += v->grad.norm();
  CHECK(gen_norm > 0.0);
  CHECK(pred_norm == 0.0);
}

TEST_CASE("batch objective averages per-example terms") {
  GameParameters g = tiny_game(9);
  corpus::EmbeddingTable t = tiny_table();
  auto ex = tiny_examples();
  auto batch = make_batch(ex, 500);
  BatchLoss whole = rnp_objective(g, t, batch);
  double acc = 0.0;
  for (const auto& item : batch)
    acc += rnp_objective(g, t, {item}).breakdown.task_ce;
  CHECK(whole.breakdown.task_ce == doctest::Approx(acc / batch.size()));
}

TEST_CASE("objectives are deterministic in the noise seeds") {
  corpus::EmbeddingTable t = tiny_table();
  auto ex = tiny_examples();
  masking::RegularizerConfig reg{0.2, 1.0, 0.02};
  GameParameters g1 = tiny_game(10);
  GameParameters g2 = tiny_game(10);
  BatchLoss a = dar_objective(g1, t, make_batch(ex, 600), reg, ObjectiveWeights{});
  BatchLoss b = dar_objective(g2, t, make_batch(ex, 600), reg, ObjectiveWeights{});
  CHECK(a.breakdown.total == b.breakdown.total);
  BatchLoss c = dar_objective(g1, t, make_batch(ex, 601), reg, ObjectiveWeights{});
  CHECK(a.breakdown.total != c.breakdown.total);
}

TEST_CASE("pretrain_objective: dropout deterministic, zero dropout differs") {
  GameParameters g = tiny_game(11);
  corpus::EmbeddingTable t = tiny_table();
  auto ex = tiny_examples();
  auto batch = make_batch(ex, 700);
  BatchLoss plain = pretrain_objective(*g.predictor, t, batch, 0.0);
  BatchLoss plain2 = pretrain_objective(*g.predictor, t, batch, 0.0);
  CHECK(plain.breakdown.total == plain2.breakdown.total);
  BatchLoss dropped = pretrain_objective(*g.predictor, t, batch, 0.5);
  BatchLoss dropped2 = pretrain_objective(*g.predictor, t, batch, 0.5);
  CHECK(dropped.breakdown.total == dropped2.breakdown.total);
  CHECK(dropped.breakdown.total != plain.breakdown.total);
}
