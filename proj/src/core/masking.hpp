#pragma once

#include <cstdint>
#include <vector>

#include "autograd.hpp"

namespace dar::masking {

using ag::Var;

struct MaskLogits {
  // Per-token 2-way unnormalized scores as 2x1 autograd columns,
  // row 0 = select, row 1 = drop.
  std::vector<Var> scores;
  double temperature = 1.0;
};

struct BinaryMask {
  std::vector<int> m;         // 0/1 per token, pads forced to 0
  std::vector<int> pad_mask;  // 1 = real token, 0 = padding
  int real_length() const;
};

struct RegularizerConfig {
  double alpha = 0.2;
  double lambda1 = 10.0;
  double lambda2 = 10.0;
};

// Tempered softmax over (score + Gumbel noise), g = -log(-log u); returns
// the per-token soft selection probability in (0,1). Deterministic given
// noise_seed. Throws if temperature <= 0.
std::vector<Var> gumbel_soft_mask(const MaskLogits& logits,
                                  std::uint64_t noise_seed);

// Noise-free path for evaluation and gradient checks: tempered softmax of
// the raw scores.
std::vector<Var> soft_mask_no_noise(const MaskLogits& logits);

// Threshold at 0.5, ties select; pads forced to 0. The returned autograd
// values carry the straight-through contract (forward hard, backward
// identity through the soft path).
struct HardMask {
  BinaryMask mask;
  std::vector<Var> values;  // 1x1 per token, value in {0,1}
};
HardMask binarize_mask(const std::vector<Var>& soft,
                       const std::vector<int>& pad_mask);

// Rationale per-token product z_t = m_t * x_t.
std::vector<Var> apply_mask(const std::vector<Var>& x,
                            const std::vector<Var>& mask_values);

// Plain-value omega on a hard mask: lambda1 * | ||M||_1 / l - alpha | +
// lambda2 * sum_{t=2..l} |m_t - m_{t-1}|, with l the non-pad length.
double omega_penalty(const BinaryMask& mask, const RegularizerConfig& cfg);

// Differentiable surrogate on the soft mask (same formula over soft values).
Var omega_penalty_soft(const std::vector<Var>& soft,
                       const std::vector<int>& pad_mask,
                       const RegularizerConfig& cfg);

}  // namespace dar::masking
