#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eval.hpp"
#include "game.hpp"

namespace dar::training {

enum class Mode { rnp, dar };
enum class SkewKind { none, skew_predictor, skew_generator };

struct SkewConfig {
  SkewKind kind = SkewKind::none;
  int k = 0;               // skew_predictor: pretraining epochs
  double threshold = 0.7;  // skew_generator: proxy-accuracy stopping threshold
};

struct StageConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 20;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 25;
  int patience = 5;
  std::uint64_t seed = 1;
  Mode mode = Mode::dar;
  masking::RegularizerConfig regularizer;
  SkewConfig skew;
  game::ModelConfig model;
  StageConfig pretrain;                 // discriminator pretraining
  double pretrain_dropout = 0.0;        // token dropout during pretraining
  StageConfig skew_pretrain{1e-3, 500, 50};  // skew stage hyperparameters
  game::ObjectiveWeights weights;
  // period token id for first-sentence extraction; -1 means "use ceil(l/4)"
  int period_token_id = -1;

  void validate() const;
};

// Parses the JSON config document. Every field has a default; unknown keys
// are errors.
TrainConfig parse_config(const std::string& json_text);
std::string config_json(const TrainConfig& cfg);  // canonical form, hashable

struct EpochRecord {
  game::LossBreakdown loss;
  double dev_accuracy = 0.0;
  double dev_sparsity = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int chosen_epoch = -1;
  double best_dev_accuracy = 0.0;
  bool warning_untrained = false;
  double pre_acc = 0.0;  // skew_generator: achieved proxy accuracy
  std::uint64_t seed = 0;
};

// Master-seed plumbing: every downstream stream (init, Gumbel noise,
// shuffling) derives from this seed by name.
void set_global_determinism(std::uint64_t seed);
std::uint64_t global_seed();

std::shared_ptr<game::Generator> fresh_generator(const TrainConfig& cfg);
std::shared_ptr<game::Predictor> fresh_predictor(const TrainConfig& cfg);
std::shared_ptr<game::Predictor> fresh_discriminator(const TrainConfig& cfg);

struct PretrainResult {
  std::shared_ptr<game::Predictor> discriminator;  // frozen
  TrainReport report;
};
PretrainResult pretrain_discriminator(const corpus::CorpusTriple& data,
                                      const corpus::EmbeddingTable& table,
                                      const TrainConfig& cfg);

// First-sentence prefix: tokens up to and including the first period token,
// or ceil(l/4) when no period id is configured (synthetic corpora).
int first_sentence_length(const std::vector<int>& tokens, int period_token_id);

std::shared_ptr<game::Predictor> skew_predictor_init(
    const corpus::CorpusTriple& data, const corpus::EmbeddingTable& table,
    int k, const TrainConfig& cfg);

struct GeneratorSkewResult {
  std::shared_ptr<game::Generator> generator;
  double pre_acc = 0.0;
};
GeneratorSkewResult skew_generator_init(const corpus::CorpusTriple& data,
                                        const corpus::EmbeddingTable& table,
                                        double threshold, const TrainConfig& cfg);

struct TrainResult {
  game::GameParameters game;
  TrainReport report;
};

// Joint gradient descent on the selected objective. Mode dar requires a
// frozen discriminator. Optional skew initializations replace the fresh
// player parameters; the training path itself is identical across skews.
TrainResult train_joint(const corpus::CorpusTriple& data,
                        const corpus::EmbeddingTable& table,
                        const TrainConfig& cfg,
                        std::shared_ptr<game::Predictor> discriminator,
                        std::shared_ptr<game::Generator> init_generator = nullptr,
                        std::shared_ptr<game::Predictor> init_predictor = nullptr);

std::string report_json(const TrainReport& report);

}  // namespace dar::training
