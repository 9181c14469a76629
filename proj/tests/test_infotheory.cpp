#include <doctest.h>

#include <cmath>

#include "core/infotheory.hpp"

using namespace dar;
using namespace dar::infotheory;

namespace {

// XOR construction: Y = Z xor X_-Z, all four (z, xz) pairs equally likely.
DiscreteJoint xor_joint() {
  DiscreteJoint j;
  j.ny = j.nz = j.nxz = 2;
  j.p.assign(8, 0.0);
  for (int z = 0; z < 2; ++z)
    for (int xz = 0; xz < 2; ++xz) j.at(z ^ xz, z, xz) = 0.25;
  return j;
}

// Y determined by Z alone; X_-Z is independent coin flips.
DiscreteJoint z_determines_y() {
  DiscreteJoint j;
  j.ny = j.nz = j.nxz = 2;
  j.p.assign(8, 0.0);
  for (int z = 0; z < 2; ++z)
    for (int xz = 0; xz < 2; ++xz) j.at(z, z, xz) = 0.25;
  return j;
}

}  // namespace

TEST_CASE("entropy basics") {
  CHECK(entropy({1.0, 0.0}) == doctest::Approx(0.0));
  CHECK(entropy({0.5, 0.5}) == doctest::Approx(std::log(2.0)));
  CHECK(entropy({0.25, 0.25, 0.25, 0.25}) == doctest::Approx(std::log(4.0)));
  CHECK_THROWS_AS(entropy({0.5, 0.4}), Error);       // not normalized
  CHECK_THROWS_AS(entropy({1.5, -0.5}), Error);      // negative mass
}

TEST_CASE("kl divergence: worked value, zero on self, continuity rejection") {
  // KL({.5,.5} || {.25,.75}) = .5 ln 2 + .5 ln(2/3)
  double expect = 0.14384103622589045;
  CHECK(kl_divergence({0.5, 0.5}, {0.25, 0.75}) == doctest::Approx(expect));
  CHECK(kl_divergence({0.3, 0.7}, {0.3, 0.7}) == doctest::Approx(0.0));
  CHECK(kl_divergence({0.0, 1.0}, {0.5, 0.5}) == doctest::Approx(std::log(2.0)));
  // p puts mass where q has none -> infinite divergence rejected
  CHECK_THROWS_AS(kl_divergence({0.5, 0.5}, {1.0, 0.0}), Error);
  CHECK_THROWS_AS(kl_divergence({0.5, 0.5}, {0.6, 0.3}), Error);
}

TEST_CASE("cross entropy = entropy + kl") {
  std::vector<double> p = {0.2, 0.5, 0.3}, q = {0.4, 0.4, 0.2};
  CHECK(cross_entropy(p, q) ==
        doctest::Approx(entropy(p) + kl_divergence(p, q)));
  CHECK(cross_entropy(p, p) == doctest::Approx(entropy(p)));
}

TEST_CASE("xor joint: H(Y|Z) - H(Y|X) equals ln 2 exactly") {
  DiscreteJoint j = xor_joint();
  j.validate();
  CHECK(conditional_entropy_y(j, Given::z) == doctest::Approx(std::log(2.0)));
  CHECK(conditional_entropy_y(j, Given::x) == doctest::Approx(0.0));
  CHECK(conditional_entropy_y(j, Given::z) - conditional_entropy_y(j, Given::x) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(mutual_information_y_x(j) == doctest::Approx(std::log(2.0)));
  CHECK(mutual_information_y_z(j) == doctest::Approx(0.0));
  CHECK(conditional_mi_y_xz_given_z(j) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("lemma1 data-processing bound holds, margin ln 2 on xor") {
  CheckResult r = check_lemma1(xor_joint());
  CHECK(r.pass);
  CHECK(r.margin == doctest::Approx(std::log(2.0)));
  CheckResult tight = check_lemma1(z_determines_y());
  CHECK(tight.pass);
  CHECK(tight.margin == doctest::Approx(0.0));
}

TEST_CASE("lemma2 worked example") {
  // prior over A uniform; truth rows {0.9,0.1} / {0.1,0.9}; model rows uniform.
  ConditionalModel truth{2, 2, {0.9, 0.1, 0.1, 0.9}};
  ConditionalModel model{2, 2, {0.5, 0.5, 0.5, 0.5}};
  Lemma2Result r = check_lemma2({0.5, 0.5}, truth, model);
  CHECK(r.pass);
  // conditional KL = KL({.9,.1}||{.5,.5}) by symmetry
  CHECK(r.conditional_kl == doctest::Approx(0.3680642071684972));
  // marginal of truth is uniform -> marginal KL = 0
  CHECK(r.marginal_kl == doctest::Approx(0.0));
  CHECK(r.margin() == doctest::Approx(0.3680642071684972));
}

TEST_CASE("lemma2 equality when the model matches the truth") {
  ConditionalModel truth{2, 2, {0.8, 0.2, 0.3, 0.7}};
  Lemma2Result r = check_lemma2({0.4, 0.6}, truth, truth);
  CHECK(r.pass);
  CHECK(r.conditional_kl == doctest::Approx(0.0));
  CHECK(r.marginal_kl == doctest::Approx(0.0));
}

TEST_CASE("lemma3: slack is the conditional KL, zero iff model is exact") {
  DiscreteJoint j = xor_joint();
  // Exact model: yhat = z xor xz deterministically. Row index a = x = (z, xz).
  ConditionalModel exact{4, 2, {1, 0, 0, 1, 0, 1, 1, 0}};
  Lemma3Result r = check_lemma3(j, exact);
  CHECK(r.pass);
  CHECK(r.slack == doctest::Approx(0.0));
  CHECK(r.equality);

  ConditionalModel blurred{4, 2, {0.9, 0.1, 0.1, 0.9, 0.1, 0.9, 0.9, 0.1}};
  Lemma3Result b = check_lemma3(j, blurred);
  CHECK(b.pass);
  CHECK(b.slack > 0.0);
  CHECK_FALSE(b.equality);
}

TEST_CASE("theorem1: passes when Y ⫫ X_-Z | Z, else premises unsatisfiable") {
  Theorem1Result good = check_theorem1(z_determines_y());
  CHECK(good.status == Theorem1Status::pass);
  CHECK(good.max_deviation <= 1e-12);

  std::mt19937_64 rng(substream(31, "test.thm1"));
  DiscreteJoint sampled = random_joint_y_indep_xz_given_z(2, 3, 2, rng);
  CHECK(check_theorem1(sampled).status == Theorem1Status::pass);

  Theorem1Result bad = check_theorem1(xor_joint());
  CHECK(bad.status == Theorem1Status::premises_unsatisfiable);
}

TEST_CASE("random joints validate and respect the requested independence") {
  std::mt19937_64 rng(substream(8, "test.joints"));
  for (int i = 0; i < 50; ++i) {
    DiscreteJoint j = random_joint(3, 2, 4, rng);
    j.validate();
    DiscreteJoint ind = random_joint_y_indep_xz_given_z(3, 2, 4, rng);
    ind.validate();
    // conditional MI I(Y; X_-Z | Z) must vanish under the construction
    CHECK(conditional_mi_y_xz_given_z(ind) == doctest::Approx(0.0).epsilon(1e-9));
  }
  auto d = random_dist(5, rng);
  double total = 0;
  for (double x : d) {
    CHECK(x > 0);
    total += x;
  }
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("falsification suites: no violations over 2000 trials each") {
  auto all = run_all_suites(2000, 99);
  REQUIRE(all.size() == 5);
  for (const auto& s : all) {
    INFO(s.suite);
    CHECK(s.trials == 2000);
    CHECK(s.failures == 0);
    CHECK(s.max_violation < 1e-9);
  }
}

TEST_CASE("suites are deterministic in the seed") {
  auto a = run_lemma1_suite(100, 7);
  auto b = run_lemma1_suite(100, 7);
  CHECK(a.max_violation == b.max_violation);
  CHECK(a.failures == b.failures);
}
