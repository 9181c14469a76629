#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "masking.hpp"
#include "nn.hpp"

namespace dar::game {

using ag::Mat;
using ag::Var;

inline constexpr double kLogProbFloor = 1e-8;

struct ModelConfig {
  int embed_dim = 32;
  int hidden = 32;
  int num_classes = 2;
  double temperature = 1.0;
};

// Generator player: BiGRU encoder + per-token 2-way head producing mask
// logits (row 0 = select, row 1 = drop).
struct Generator {
  ModelConfig cfg;
  nn::ParamSet params;
  nn::BiGru encoder;
  nn::Linear head;

  Generator(const ModelConfig& cfg, std::mt19937_64& rng);
  masking::MaskLogits logits(const std::vector<Var>& x) const;
};

// Predictor / discriminator player: BiGRU encoder, max-pool over non-pad
// positions, c-way linear head, softmax. A frozen predictor acts as the
// discriminator; its parameters stop requiring gradients.
struct Predictor {
  ModelConfig cfg;
  nn::ParamSet params;
  nn::BiGru encoder;
  nn::Linear head;
  bool frozen = false;

  Predictor(const ModelConfig& cfg, std::mt19937_64& rng);
  void freeze();
  Var forward(const std::vector<Var>& sequence,
              const std::vector<int>& pad_mask) const;
};

struct GameParameters {
  std::shared_ptr<Generator> generator;
  std::shared_ptr<Predictor> predictor;
  std::shared_ptr<Predictor> discriminator;  // frozen after pretraining
};

// Embeds token ids as constant columns of the embedding table.
std::vector<Var> embed(const corpus::EmbeddingTable& table,
                       const std::vector<int>& tokens);

enum class MaskPath {
  hard_st,  // threshold + straight-through (training default)
  soft      // fully soft mask, used for gradient checks
};

struct GeneratorOutput {
  std::vector<Var> soft;          // soft selection probabilities
  masking::HardMask hard;         // empty when MaskPath::soft
  std::vector<Var> mask_values;   // values actually applied to the input
  std::vector<int> pad_mask;
};

GeneratorOutput forward_generator(const Generator& gen, const std::vector<Var>& x,
                                  std::uint64_t noise_seed,
                                  MaskPath path = MaskPath::hard_st);

// Cross-entropy H_c(Y, Yhat) for a one-hot label, natural log, probability
// clamped at kLogProbFloor. Per-example term; batch averaging happens in
// the batch objectives below.
Var cross_entropy(const Var& probs, int label);
double cross_entropy_value(const std::vector<double>& probs, int label);

// Alignment term: discriminator output on the rationale. Throws unless the
// discriminator is frozen.
Var alignment_term(const Predictor& discriminator, const std::vector<Var>& z,
                   const std::vector<int>& pad_mask, int label);

struct LossBreakdown {
  double task_ce = 0.0;
  double align_ce = 0.0;
  double omega = 0.0;
  double total = 0.0;
};

struct ObjectiveWeights {
  double task = 1.0;
  double align = 1.0;
  double omega = 1.0;
};

struct BatchItem {
  const corpus::Example* example;
  std::uint64_t noise_seed;
};

// Builds the full batch objective graph. `weights.align > 0` requires a
// frozen discriminator. Returns the averaged breakdown plus the scalar
// total node for backward().
struct BatchLoss {
  LossBreakdown breakdown;
  Var total;
};
BatchLoss dar_objective(const GameParameters& game,
                        const corpus::EmbeddingTable& table,
                        const std::vector<BatchItem>& batch,
                        const masking::RegularizerConfig& reg,
                        const ObjectiveWeights& weights,
                        MaskPath path = MaskPath::hard_st);

// Task-only batch loss (task cross-entropy, no alignment, no omega).
BatchLoss rnp_objective(const GameParameters& game,
                        const corpus::EmbeddingTable& table,
                        const std::vector<BatchItem>& batch,
                        MaskPath path = MaskPath::hard_st);

// Discriminator pretraining loss on the full input.
BatchLoss pretrain_objective(const Predictor& predictor,
                             const corpus::EmbeddingTable& table,
                             const std::vector<BatchItem>& batch,
                             double token_dropout = 0.0);

}  // namespace dar::game
