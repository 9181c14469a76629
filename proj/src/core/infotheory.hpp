#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"

// Exact enumeration over finite discrete distributions. Everything here is
// independent of the neural pipeline; it exists to falsify the implementation
// of the entropy/divergence bounds the training objectives rely on.
namespace dar::infotheory {

inline constexpr int kMaxSupport = 16;

// Joint distribution over (Y, Z, X_-Z); X is the pair (Z, X_-Z).
struct DiscreteJoint {
  int ny = 0, nz = 0, nxz = 0;
  std::vector<double> p;  // row-major [y][z][xz], sums to 1

  double& at(int y, int z, int xz);
  double at(int y, int z, int xz) const;
  void validate() const;
};

// Conditional table P(Yhat | A): rows indexed by a, each row a distribution.
struct ConditionalModel {
  int na = 0, ny = 0;
  std::vector<double> rows;  // row-major [a][y]
  double at(int a, int y) const { return rows[static_cast<std::size_t>(a) * ny + y]; }
  void validate() const;
};

double entropy(const std::vector<double>& dist);               // nats
double kl_divergence(const std::vector<double>& p,
                     const std::vector<double>& q);            // rejects inf
double cross_entropy(const std::vector<double>& p,
                     const std::vector<double>& q);

// H(Y|Z), H(Y|X) etc. over the joint; conditioning variables named below.
enum class Given { z, x, none };
double conditional_entropy_y(const DiscreteJoint& joint, Given given);

double mutual_information_y_x(const DiscreteJoint& joint);
double mutual_information_y_z(const DiscreteJoint& joint);
// I(Y; X_-Z | Z)
double conditional_mi_y_xz_given_z(const DiscreteJoint& joint);

struct CheckResult {
  bool pass = false;
  double margin = 0.0;  // amount by which the inequality holds (>= 0 to pass)
};

// H(Y|X) <= H(Y|Z); margin = H(Y|Z) - H(Y|X).
CheckResult check_lemma1(const DiscreteJoint& joint);

// D_KL(P_{Y|A} || P_{Yhat|A}) >= D_KL(P_Y || P_Yhat), with the marginal of
// Yhat built as sum_a P_A(a) P_{Yhat|A}(y|a).
struct Lemma2Result {
  bool pass = false;
  double conditional_kl = 0.0;
  double marginal_kl = 0.0;
  double margin() const { return conditional_kl - marginal_kl; }
};
Lemma2Result check_lemma2(const std::vector<double>& prior_a,
                          const ConditionalModel& truth,
                          const ConditionalModel& model);

// H_c(Y, Yhat^t | X) >= H(Y|X); slack is the conditional KL and is zero iff
// the model equals the true conditional.
struct Lemma3Result {
  bool pass = false;
  double slack = 0.0;
  bool equality = false;
};
Lemma3Result check_lemma3(const DiscreteJoint& joint, const ConditionalModel& model);

// Constructs the optimal discriminator/predictor assignments for a
// deterministic selection map g: X -> Z and checks the three-way equality
// P(Yhat|Z) = P(Y|X) = P(Yhat|X).
enum class Theorem1Status { pass, fail, premises_unsatisfiable };
struct Theorem1Result {
  Theorem1Status status = Theorem1Status::fail;
  double max_deviation = 0.0;
};
Theorem1Result check_theorem1(const DiscreteJoint& joint);

// Randomized falsification suites.
struct SuiteSummary {
  std::string suite;
  long trials = 0;
  long failures = 0;
  double max_violation = 0.0;
};

SuiteSummary run_lemma1_suite(long trials, std::uint64_t seed);
SuiteSummary run_lemma2_suite(long trials, std::uint64_t seed);
SuiteSummary run_lemma3_suite(long trials, std::uint64_t seed);
SuiteSummary run_theorem1_suite(long trials, std::uint64_t seed);
SuiteSummary run_chain_rule_suite(long trials, std::uint64_t seed);

std::vector<SuiteSummary> run_all_suites(long trials, std::uint64_t seed);

// Random helpers shared with the test suites.
DiscreteJoint random_joint(int ny, int nz, int nxz, std::mt19937_64& rng);
// Joint with Y independent of X_-Z given Z, so the fixed-point premises hold.
DiscreteJoint random_joint_y_indep_xz_given_z(int ny, int nz, int nxz,
                                              std::mt19937_64& rng);
std::vector<double> random_dist(int n, std::mt19937_64& rng);

}  // namespace dar::infotheory
