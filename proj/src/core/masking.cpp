#include "masking.hpp"

#include <cmath>

namespace dar::masking {

int BinaryMask::real_length() const {
  int l = 0;
  for (int p : pad_mask) l += p;
  return l;
}

std::vector<Var> gumbel_soft_mask(const MaskLogits& logits,
                                  std::uint64_t noise_seed) {
  require(logits.temperature > 0.0, "gumbel_soft_mask: temperature must be > 0");
  auto rng = substream(noise_seed, "gumbel");
  std::uniform_real_distribution<double> unif(1e-12, 1.0);
  std::vector<Var> out;
  out.reserve(logits.scores.size());
  for (const auto& score : logits.scores) {
    require(score->value.rows() == 2 && score->value.cols() == 1,
            "gumbel_soft_mask: 2x1 scores expected");
    ag::Mat noise(2, 1);
    noise(0, 0) = -std::log(-std::log(unif(rng)));
    noise(1, 0) = -std::log(-std::log(unif(rng)));
    Var noisy = ag::add(score, ag::constant(noise));
    Var p = ag::softmax_col(ag::scale(noisy, 1.0 / logits.temperature));
    out.push_back(ag::pick(p, 0, 0));
  }
  return out;
}

std::vector<Var> soft_mask_no_noise(const MaskLogits& logits) {
  require(logits.temperature > 0.0, "soft_mask: temperature must be > 0");
  std::vector<Var> out;
  out.reserve(logits.scores.size());
  for (const auto& score : logits.scores) {
    Var p = ag::softmax_col(ag::scale(score, 1.0 / logits.temperature));
    out.push_back(ag::pick(p, 0, 0));
  }
  return out;
}

HardMask binarize_mask(const std::vector<Var>& soft,
                       const std::vector<int>& pad_mask) {
  require(soft.size() == pad_mask.size(), "binarize_mask: length mismatch");
  HardMask out;
  out.mask.pad_mask = pad_mask;
  out.mask.m.reserve(soft.size());
  out.values.reserve(soft.size());
  for (std::size_t t = 0; t < soft.size(); ++t) {
    double s = ag::scalar(soft[t]);
    require(s >= 0.0 && s <= 1.0, "binarize_mask: soft value outside [0,1]");
    int hard = (pad_mask[t] != 0 && s >= 0.5) ? 1 : 0;  // tie at 0.5 selects
    out.mask.m.push_back(hard);
    if (pad_mask[t] != 0) {
      out.values.push_back(
          ag::straight_through(soft[t], ag::Mat::Constant(1, 1, double(hard))));
    } else {
      out.values.push_back(ag::scalar_const(0.0));
    }
  }
  return out;
}

std::vector<Var> apply_mask(const std::vector<Var>& x,
                            const std::vector<Var>& mask_values) {
  require(x.size() == mask_values.size(), "apply_mask: length mismatch");
  std::vector<Var> z;
  z.reserve(x.size());
  for (std::size_t t = 0; t < x.size(); ++t)
    z.push_back(ag::scalar_mul_vec(mask_values[t], x[t]));
  return z;
}

double omega_penalty(const BinaryMask& mask, const RegularizerConfig& cfg) {
  int l = mask.real_length();
  require(l > 0, "omega_penalty: empty mask");
  double ones = 0.0;
  double transitions = 0.0;
  int prev = -1;
  for (std::size_t t = 0; t < mask.m.size(); ++t) {
    if (mask.pad_mask[t] == 0) continue;
    ones += mask.m[t];
    if (prev >= 0) transitions += std::abs(mask.m[t] - prev);
    prev = mask.m[t];
  }
  return cfg.lambda1 * std::abs(ones / l - cfg.alpha) + cfg.lambda2 * transitions;
}

Var omega_penalty_soft(const std::vector<Var>& soft,
                       const std::vector<int>& pad_mask,
                       const RegularizerConfig& cfg) {
  require(soft.size() == pad_mask.size(), "omega_penalty_soft: length mismatch");
  int l = 0;
  for (int p : pad_mask) l += p;
  require(l > 0, "omega_penalty_soft: empty mask");
  std::vector<Var> selected;
  for (std::size_t t = 0; t < soft.size(); ++t)
    if (pad_mask[t] != 0) selected.push_back(soft[t]);

  Var mass = ag::add_all(selected);
  Var sparsity = ag::abs_(ag::add_const(ag::scale(mass, 1.0 / l), -cfg.alpha));
  std::vector<Var> terms;
  terms.push_back(ag::scale(sparsity, cfg.lambda1));
  for (std::size_t t = 1; t < selected.size(); ++t)
    terms.push_back(
        ag::scale(ag::abs_(ag::sub(selected[t], selected[t - 1])), cfg.lambda2));
  return ag::add_all(terms);
}

}  // namespace dar::masking
