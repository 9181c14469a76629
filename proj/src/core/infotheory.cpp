#include "infotheory.hpp"

#include <algorithm>
#include <cmath>

namespace dar::infotheory {

namespace {

constexpr double kTol = 1e-9;

double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

void validate_dist(const std::vector<double>& d, double tol = 1e-9) {
  require(!d.empty() && static_cast<int>(d.size()) <= kMaxSupport * kMaxSupport * kMaxSupport,
          "distribution support out of range");
  double sum = 0.0;
  for (double p : d) {
    require(p >= 0.0 && std::isfinite(p), "distribution entry invalid");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= tol, "distribution does not sum to 1");
}

}  // namespace

double& DiscreteJoint::at(int y, int z, int xz) {
  return p[(static_cast<std::size_t>(y) * nz + z) * nxz + xz];
}
double DiscreteJoint::at(int y, int z, int xz) const {
  return p[(static_cast<std::size_t>(y) * nz + z) * nxz + xz];
}

void DiscreteJoint::validate() const {
  require(ny >= 1 && ny <= kMaxSupport && nz >= 1 && nz <= kMaxSupport &&
              nxz >= 1 && nxz <= kMaxSupport,
          "joint support sizes must be in 1..16");
  require(static_cast<int>(p.size()) == ny * nz * nxz, "joint tensor size mismatch");
  double sum = 0.0;
  for (double v : p) {
    require(v >= 0.0 && std::isfinite(v), "joint entry invalid");
    sum += v;
  }
  require(std::abs(sum - 1.0) <= 1e-12 * p.size() + 1e-12, "joint does not sum to 1");
}

void ConditionalModel::validate() const {
  require(na >= 1 && ny >= 1, "conditional table empty");
  require(static_cast<int>(rows.size()) == na * ny, "conditional table size mismatch");
  for (int a = 0; a < na; ++a) {
    double sum = 0.0;
    for (int y = 0; y < ny; ++y) {
      double v = at(a, y);
      require(v >= 0.0 && std::isfinite(v), "conditional entry invalid");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-9, "conditional row does not sum to 1");
  }
}

double entropy(const std::vector<double>& dist) {
  validate_dist(dist);
  double h = 0.0;
  for (double p : dist) h -= xlogx(p);
  return h;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  validate_dist(p);
  validate_dist(q);
  require(p.size() == q.size(), "kl: support mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    require(q[i] > 0.0, "kl: absolute continuity violated (Q=0 where P>0)");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

double cross_entropy(const std::vector<double>& p, const std::vector<double>& q) {
  return entropy(p) + kl_divergence(p, q);
}

namespace {

std::vector<double> marginal_y(const DiscreteJoint& j) {
  std::vector<double> out(static_cast<std::size_t>(j.ny), 0.0);
  for (int y = 0; y < j.ny; ++y)
    for (int z = 0; z < j.nz; ++z)
      for (int xz = 0; xz < j.nxz; ++xz) out[static_cast<std::size_t>(y)] += j.at(y, z, xz);
  return out;
}

// H(Y | condition) by direct enumeration: sum over the conditioning cells of
// -P(y, cell) ln P(y | cell).
double cond_entropy(const DiscreteJoint& j, Given given) {
  if (given == Given::none) return entropy(marginal_y(j));
  double h = 0.0;
  if (given == Given::z) {
    for (int z = 0; z < j.nz; ++z) {
      double pz = 0.0;
      for (int y = 0; y < j.ny; ++y)
        for (int xz = 0; xz < j.nxz; ++xz) pz += j.at(y, z, xz);
      if (pz <= 0.0) continue;
      for (int y = 0; y < j.ny; ++y) {
        double pyz = 0.0;
        for (int xz = 0; xz < j.nxz; ++xz) pyz += j.at(y, z, xz);
        if (pyz > 0.0) h -= pyz * std::log(pyz / pz);
      }
    }
  } else {  // Given::x, i.e. the pair (z, xz)
    for (int z = 0; z < j.nz; ++z)
      for (int xz = 0; xz < j.nxz; ++xz) {
        double px = 0.0;
        for (int y = 0; y < j.ny; ++y) px += j.at(y, z, xz);
        if (px <= 0.0) continue;
        for (int y = 0; y < j.ny; ++y) {
          double pyx = j.at(y, z, xz);
          if (pyx > 0.0) h -= pyx * std::log(pyx / px);
        }
      }
  }
  return h;
}

}  // namespace

double conditional_entropy_y(const DiscreteJoint& joint, Given given) {
  joint.validate();
  return cond_entropy(joint, given);
}

double mutual_information_y_x(const DiscreteJoint& joint) {
  return entropy(marginal_y(joint)) - cond_entropy(joint, Given::x);
}

double mutual_information_y_z(const DiscreteJoint& joint) {
  // I(Y;Z) = H(Y) + H(Z) - H(Y,Z), a route independent of H(Y|Z)
  std::vector<double> pz(static_cast<std::size_t>(joint.nz), 0.0);
  std::vector<double> pyz(static_cast<std::size_t>(joint.ny * joint.nz), 0.0);
  for (int y = 0; y < joint.ny; ++y)
    for (int z = 0; z < joint.nz; ++z)
      for (int xz = 0; xz < joint.nxz; ++xz) {
        double v = joint.at(y, z, xz);
        pz[static_cast<std::size_t>(z)] += v;
        pyz[static_cast<std::size_t>(y) * joint.nz + z] += v;
      }
  return entropy(marginal_y(joint)) + entropy(pz) - entropy(pyz);
}

double conditional_mi_y_xz_given_z(const DiscreteJoint& joint) {
  // I(Y; X_-Z | Z) = H(X_-Z | Z) - H(X_-Z | Z, Y), a third route
  double h1 = 0.0, h2 = 0.0;
  for (int z = 0; z < joint.nz; ++z) {
    double pz = 0.0;
    std::vector<double> pxz_z(static_cast<std::size_t>(joint.nxz), 0.0);
    for (int y = 0; y < joint.ny; ++y)
      for (int xz = 0; xz < joint.nxz; ++xz) {
        pz += joint.at(y, z, xz);
        pxz_z[static_cast<std::size_t>(xz)] += joint.at(y, z, xz);
      }
    if (pz > 0.0)
      for (double v : pxz_z)
        if (v > 0.0) h1 -= v * std::log(v / pz);
    for (int y = 0; y < joint.ny; ++y) {
      double pzy = 0.0;
      for (int xz = 0; xz < joint.nxz; ++xz) pzy += joint.at(y, z, xz);
      if (pzy <= 0.0) continue;
      for (int xz = 0; xz < joint.nxz; ++xz) {
        double v = joint.at(y, z, xz);
        if (v > 0.0) h2 -= v * std::log(v / pzy);
      }
    }
  }
  return h1 - h2;
}

CheckResult check_lemma1(const DiscreteJoint& joint) {
  joint.validate();
  double margin = cond_entropy(joint, Given::z) - cond_entropy(joint, Given::x);
  return {margin >= -kTol, margin};
}

Lemma2Result check_lemma2(const std::vector<double>& prior_a,
                          const ConditionalModel& truth,
                          const ConditionalModel& model) {
  validate_dist(prior_a);
  truth.validate();
  model.validate();
  require(truth.na == static_cast<int>(prior_a.size()) && model.na == truth.na &&
              model.ny == truth.ny,
          "lemma2: shape mismatch");
  Lemma2Result out;
  std::vector<double> py(static_cast<std::size_t>(truth.ny), 0.0);
  std::vector<double> pyhat(static_cast<std::size_t>(truth.ny), 0.0);
  for (int a = 0; a < truth.na; ++a) {
    double pa = prior_a[static_cast<std::size_t>(a)];
    for (int y = 0; y < truth.ny; ++y) {
      if (truth.at(a, y) > 0.0 && pa > 0.0) {
        require(model.at(a, y) > 0.0,
                "lemma2: absolute continuity violated in conditional rows");
        out.conditional_kl += pa * truth.at(a, y) * std::log(truth.at(a, y) / model.at(a, y));
      }
      py[static_cast<std::size_t>(y)] += pa * truth.at(a, y);
      pyhat[static_cast<std::size_t>(y)] += pa * model.at(a, y);
    }
  }
  out.marginal_kl = kl_divergence(py, pyhat);
  out.pass = out.margin() >= -kTol;
  return out;
}

Lemma3Result check_lemma3(const DiscreteJoint& joint, const ConditionalModel& model) {
  joint.validate();
  model.validate();
  require(model.na == joint.nz * joint.nxz && model.ny == joint.ny,
          "lemma3: model must condition on X = (Z, X_-Z)");
  Lemma3Result out;
  out.equality = true;
  double hc = 0.0;
  for (int z = 0; z < joint.nz; ++z)
    for (int xz = 0; xz < joint.nxz; ++xz) {
      int a = z * joint.nxz + xz;
      double px = 0.0;
      for (int y = 0; y < joint.ny; ++y) px += joint.at(y, z, xz);
      if (px <= 0.0) continue;
      for (int y = 0; y < joint.ny; ++y) {
        double pyx = joint.at(y, z, xz) / px;
        if (pyx > 0.0) {
          require(model.at(a, y) > 0.0, "lemma3: absolute continuity violated");
          hc -= px * pyx * std::log(model.at(a, y));
        }
        if (std::abs(pyx - model.at(a, y)) > 1e-12) out.equality = false;
      }
    }
  double hyx = cond_entropy(joint, Given::x);
  out.slack = hc - hyx;
  out.pass = out.slack >= -kTol;
  return out;
}

Theorem1Result check_theorem1(const DiscreteJoint& joint) {
  joint.validate();
  Theorem1Result out;
  // g is the subset-selection map x = (z, x_-z) -> z. The constructed optima
  // are: discriminator rows P(Yhat^t|X=x) = P(Y|x), then
  // P(Yhat^t|Z=g(x)) = P(Y|x) and P(Yhat|Z=g(x)) = P(Y|x). Those
  // assignments are only consistent if P(Y|x) agrees across all x sharing z.
  for (int z = 0; z < joint.nz; ++z) {
    bool have_ref = false;
    std::vector<double> ref(static_cast<std::size_t>(joint.ny), 0.0);
    double pz = 0.0;
    std::vector<double> pyz(static_cast<std::size_t>(joint.ny), 0.0);
    for (int xz = 0; xz < joint.nxz; ++xz) {
      double px = 0.0;
      for (int y = 0; y < joint.ny; ++y) px += joint.at(y, z, xz);
      pz += px;
      for (int y = 0; y < joint.ny; ++y) pyz[static_cast<std::size_t>(y)] += joint.at(y, z, xz);
      if (px <= 0.0) continue;
      std::vector<double> cond(static_cast<std::size_t>(joint.ny));
      for (int y = 0; y < joint.ny; ++y) cond[static_cast<std::size_t>(y)] = joint.at(y, z, xz) / px;
      if (!have_ref) {
        ref = cond;
        have_ref = true;
      } else {
        for (int y = 0; y < joint.ny; ++y) {
          if (std::abs(cond[static_cast<std::size_t>(y)] - ref[static_cast<std::size_t>(y)]) > kTol) {
            out.status = Theorem1Status::premises_unsatisfiable;
            return out;
          }
        }
      }
    }
    // Three-way equality: the forced P(Yhat|Z=z) (= ref) must match the
    // marginal conditional P(Y|Z=z), which equals P(Yhat|X=x) averaged.
    if (pz > 0.0 && have_ref) {
      for (int y = 0; y < joint.ny; ++y) {
        double dev = std::abs(pyz[static_cast<std::size_t>(y)] / pz - ref[static_cast<std::size_t>(y)]);
        out.max_deviation = std::max(out.max_deviation, dev);
      }
    }
  }
  out.status = out.max_deviation <= kTol ? Theorem1Status::pass : Theorem1Status::fail;
  return out;
}

std::vector<double> random_dist(int n, std::mt19937_64& rng) {
  std::exponential_distribution<double> exp_dist(1.0);
  std::vector<double> d(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (auto& v : d) {
    v = exp_dist(rng) + 1e-6;  // strictly positive, avoids KL continuity traps
    sum += v;
  }
  for (auto& v : d) v /= sum;
  return d;
}

DiscreteJoint random_joint(int ny, int nz, int nxz, std::mt19937_64& rng) {
  DiscreteJoint j;
  j.ny = ny;
  j.nz = nz;
  j.nxz = nxz;
  j.p = random_dist(ny * nz * nxz, rng);
  return j;
}

DiscreteJoint random_joint_y_indep_xz_given_z(int ny, int nz, int nxz,
                                              std::mt19937_64& rng) {
  DiscreteJoint j;
  j.ny = ny;
  j.nz = nz;
  j.nxz = nxz;
  j.p.assign(static_cast<std::size_t>(ny * nz * nxz), 0.0);
  auto pz = random_dist(nz, rng);
  for (int z = 0; z < nz; ++z) {
    auto py_z = random_dist(ny, rng);
    auto pxz_z = random_dist(nxz, rng);
    for (int y = 0; y < ny; ++y)
      for (int xz = 0; xz < nxz; ++xz)
        j.at(y, z, xz) = pz[static_cast<std::size_t>(z)] * py_z[static_cast<std::size_t>(y)] *
                         pxz_z[static_cast<std::size_t>(xz)];
  }
  return j;
}

namespace {

int rand_size(std::mt19937_64& rng) { return 2 + static_cast<int>(rng() % 3); }

}  // namespace

SuiteSummary run_lemma1_suite(long trials, std::uint64_t seed) {
  SuiteSummary s{"lemma1", trials, 0, 0.0};
  auto rng = substream(seed, "suite.lemma1");
  for (long i = 0; i < trials; ++i) {
    auto j = random_joint(rand_size(rng), rand_size(rng), rand_size(rng), rng);
    auto r = check_lemma1(j);
    if (!r.pass) ++s.failures;
    s.max_violation = std::max(s.max_violation, std::max(0.0, -r.margin));
  }
  return s;
}

SuiteSummary run_lemma2_suite(long trials, std::uint64_t seed) {
  SuiteSummary s{"lemma2", trials, 0, 0.0};
  auto rng = substream(seed, "suite.lemma2");
  for (long i = 0; i < trials; ++i) {
    int na = rand_size(rng), ny = rand_size(rng);
    auto prior = random_dist(na, rng);
    ConditionalModel truth{na, ny, {}}, model{na, ny, {}};
    for (int a = 0; a < na; ++a) {
      auto t = random_dist(ny, rng);
      auto m = random_dist(ny, rng);
      truth.rows.insert(truth.rows.end(), t.begin(), t.end());
      model.rows.insert(model.rows.end(), m.begin(), m.end());
    }
    auto r = check_lemma2(prior, truth, model);
    if (!r.pass) ++s.failures;
    s.max_violation = std::max(s.max_violation, std::max(0.0, -r.margin()));
  }
  return s;
}

SuiteSummary run_lemma3_suite(long trials, std::uint64_t seed) {
  SuiteSummary s{"lemma3", trials, 0, 0.0};
  auto rng = substream(seed, "suite.lemma3");
  for (long i = 0; i < trials; ++i) {
    int ny = rand_size(rng), nz = rand_size(rng), nxz = rand_size(rng);
    auto j = random_joint(ny, nz, nxz, rng);
    ConditionalModel model{nz * nxz, ny, {}};
    for (int a = 0; a < nz * nxz; ++a) {
      auto m = random_dist(ny, rng);
      model.rows.insert(model.rows.end(), m.begin(), m.end());
    }
    auto r = check_lemma3(j, model);
    if (!r.pass) ++s.failures;
    s.max_violation = std::max(s.max_violation, std::max(0.0, -r.slack));
  }
  return s;
}

SuiteSummary run_theorem1_suite(long trials, std::uint64_t seed) {
  SuiteSummary s{"theorem1", trials, 0, 0.0};
  auto rng = substream(seed, "suite.theorem1");
  for (long i = 0; i < trials; ++i) {
    auto j = random_joint_y_indep_xz_given_z(rand_size(rng), rand_size(rng),
                                             rand_size(rng), rng);
    auto r = check_theorem1(j);
    if (r.status != Theorem1Status::pass) ++s.failures;
    s.max_violation = std::max(s.max_violation, r.max_deviation);
  }
  return s;
}

SuiteSummary run_chain_rule_suite(long trials, std::uint64_t seed) {
  SuiteSummary s{"chain_rule", trials, 0, 0.0};
  auto rng = substream(seed, "suite.chain_rule");
  for (long i = 0; i < trials; ++i) {
    auto j = random_joint(rand_size(rng), rand_size(rng), rand_size(rng), rng);
    double lhs = mutual_information_y_x(j);
    double rhs = mutual_information_y_z(j) + conditional_mi_y_xz_given_z(j);
    double dev = std::abs(lhs - rhs);
    if (dev > kTol) ++s.failures;
    s.max_violation = std::max(s.max_violation, dev);
  }
  return s;
}

std::vector<SuiteSummary> run_all_suites(long trials, std::uint64_t seed) {
  require(trials >= 1, "verify: trials must be >= 1");
  return {run_lemma1_suite(trials, seed), run_lemma2_suite(trials, seed),
          run_lemma3_suite(trials, seed), run_theorem1_suite(trials, seed),
          run_chain_rule_suite(trials, seed)};
}

}  // namespace dar::infotheory
