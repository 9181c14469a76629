#include <doctest.h>

#include <cmath>

#include "core/masking.hpp"

using namespace dar;
using namespace dar::masking;
using ag::Mat;
using ag::Var;

namespace {

MaskLogits make_logits(const std::vector<double>& select_scores,
                       double temperature = 1.0) {
  MaskLogits out;
  out.temperature = temperature;
  for (double s : select_scores) {
    Mat m(2, 1);
    m << s, 0.0;  // row 0 select, row 1 drop
    out.scores.push_back(ag::leaf(m));
  }
  return out;
}

std::vector<double> values(const std::vector<Var>& vs) {
  std::vector<double> out;
  for (const auto& v : vs) out.push_back(ag::scalar(v));
  return out;
}

}  // namespace

TEST_CASE("omega worked example: sparsity-only penalty") {
  // l = 10, mask selects 2 of 10, alpha = 0.2 -> sparsity term 0; one
  // contiguous block at the start -> 1 transition. lambda1=1, lambda2=1.
  BinaryMask m;
  m.m = {1, 1, 0, 0, 0, 0, 0, 0, 0, 0};
  m.pad_mask = std::vector<int>(10, 1);
  RegularizerConfig cfg{0.2, 1.0, 1.0};
  CHECK(omega_penalty(m, cfg) == doctest::Approx(1.0));
}

TEST_CASE("omega worked example: alternating mask maximizes continuity cost") {
  BinaryMask m;
  m.m = {1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
  m.pad_mask = std::vector<int>(10, 1);
  RegularizerConfig cfg{0.5, 1.0, 1.0};
  // | 5/10 - 0.5 | = 0 sparsity; 9 transitions -> 9.0
  CHECK(omega_penalty(m, cfg) == doctest::Approx(9.0));
}

TEST_CASE("omega scales with lambda weights and ignores pad positions") {
  BinaryMask m;
  m.m = {1, 1, 1, 0, 0, 0};
  m.pad_mask = {1, 1, 1, 1, 0, 0};  // real length 4
  RegularizerConfig cfg{0.25, 2.0, 3.0};
  // ||M||_1 / l = 3/4, sparsity |0.75 - 0.25| = 0.5 -> 1.0; 1 transition -> 3.0
  CHECK(omega_penalty(m, cfg) == doctest::Approx(2.0 * 0.5 + 3.0 * 1.0));
}

TEST_CASE("omega rejects an all-pad mask") {
  BinaryMask m;
  m.m = {0, 0};
  m.pad_mask = {0, 0};
  CHECK_THROWS_AS(omega_penalty(m, RegularizerConfig{}), Error);
}

TEST_CASE("soft mask without noise is the tempered softmax of the scores") {
  MaskLogits lg = make_logits({0.0, 2.0}, 1.0);
  auto soft = soft_mask_no_noise(lg);
  CHECK(ag::scalar(soft[0]) == doctest::Approx(0.5));
  CHECK(ag::scalar(soft[1]) ==
        doctest::Approx(std::exp(2.0) / (std::exp(2.0) + 1.0)));

  // Lower temperature sharpens toward 1.
  MaskLogits sharp = make_logits({0.0, 2.0}, 0.1);
  auto soft_sharp = soft_mask_no_noise(sharp);
  CHECK(ag::scalar(soft_sharp[1]) > ag::scalar(soft[1]));
}

TEST_CASE("gumbel mask is deterministic in the noise seed") {
  MaskLogits lg = make_logits({0.3, -0.2, 1.1});
  auto a = values(gumbel_soft_mask(lg, 123));
  auto b = values(gumbel_soft_mask(lg, 123));
  auto c = values(gumbel_soft_mask(lg, 124));
  CHECK(a == b);
  CHECK(a != c);
  for (double v : a) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("gumbel mask is invariant to a constant logit shift") {
  MaskLogits lg = make_logits({0.3, -0.2});
  auto base = values(gumbel_soft_mask(lg, 5));
  MaskLogits shifted;
  shifted.temperature = lg.temperature;
  for (const auto& s : lg.scores) {
    Mat m = s->value;
    m.array() += 7.5;  // same shift on select and drop rows
    shifted.scores.push_back(ag::leaf(m));
  }
  auto moved = values(gumbel_soft_mask(shifted, 5));
  for (std::size_t i = 0; i < base.size(); ++i)
    CHECK(moved[i] == doctest::Approx(base[i]));
}

TEST_CASE("non-positive temperature is rejected") {
  MaskLogits lg = make_logits({0.0}, 0.0);
  CHECK_THROWS_AS(gumbel_soft_mask(lg, 1), Error);
  lg.temperature = -1.0;
  CHECK_THROWS_AS(soft_mask_no_noise(lg), Error);
}

TEST_CASE("binarize: threshold 0.5, ties select, pads forced to 0") {
  std::vector<Var> soft = {
      ag::leaf(Mat::Constant(1, 1, 0.49)), ag::leaf(Mat::Constant(1, 1, 0.5)),
      ag::leaf(Mat::Constant(1, 1, 0.51)), ag::leaf(Mat::Constant(1, 1, 0.99))};
  std::vector<int> pad = {1, 1, 1, 0};
  HardMask hard = binarize_mask(soft, pad);
  CHECK(hard.mask.m == std::vector<int>{0, 1, 1, 0});
  CHECK(hard.mask.pad_mask == pad);
  CHECK(hard.mask.real_length() == 3);
  for (std::size_t i = 0; i < soft.size(); ++i)
    CHECK(ag::scalar(hard.values[i]) == static_cast<double>(hard.mask.m[i]));
}

TEST_CASE("binarized values keep the straight-through gradient path") {
  Var s = ag::leaf(Mat::Constant(1, 1, 0.8));
  HardMask hard = binarize_mask({s}, {1});
  Var out = ag::scale(hard.values[0], 2.0);
  ag::backward(out);
  CHECK(s->grad(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("apply_mask multiplies tokens by their mask value") {
  Mat x0 = Mat::Constant(3, 1, 2.0);
  Mat x1 = Mat::Constant(3, 1, -1.0);
  std::vector<Var> x = {ag::constant(x0), ag::constant(x1)};
  std::vector<Var> mv = {ag::constant(Mat::Constant(1, 1, 1.0)),
                         ag::constant(Mat::Constant(1, 1, 0.0))};
  auto z = apply_mask(x, mv);
  CHECK(z[0]->value == x0);
  CHECK(z[1]->value == Mat::Zero(3, 1));
}

TEST_CASE("soft omega agrees with hard omega on a 0/1 soft mask") {
  std::vector<double> bits = {1, 0, 0, 1, 1, 0};
  std::vector<Var> soft;
  BinaryMask hard;
  for (double b : bits) {
    soft.push_back(ag::leaf(Mat::Constant(1, 1, b)));
    hard.m.push_back(static_cast<int>(b));
    hard.pad_mask.push_back(1);
  }
  RegularizerConfig cfg{0.2, 1.3, 0.7};
  Var v = omega_penalty_soft(soft, hard.pad_mask, cfg);
  CHECK(ag::scalar(v) == doctest::Approx(omega_penalty(hard, cfg)));
}

TEST_CASE("soft omega gradient matches finite differences") {
  std::vector<double> init = {0.7, 0.2, 0.9, 0.4};
  std::vector<Var> soft;
  for (double v : init) soft.push_back(ag::leaf(Mat::Constant(1, 1, v)));
  std::vector<int> pad(4, 1);
  RegularizerConfig cfg{0.3, 1.5, 0.8};

  Var out = omega_penalty_soft(soft, pad, cfg);
  ag::backward(out);
  const double h = 1e-6;
  for (std::size_t i = 0; i < soft.size(); ++i) {
    double orig = soft[i]->value(0, 0);
    soft[i]->value(0, 0) = orig + h;
    double up = ag::scalar(omega_penalty_soft(soft, pad, cfg));
    soft[i]->value(0, 0) = orig - h;
    double dn = ag::scalar(omega_penalty_soft(soft, pad, cfg));
    soft[i]->value(0, 0) = orig;
    CHECK(soft[i]->grad(0, 0) == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
  }
}
