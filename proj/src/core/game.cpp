#include "game.hpp"

namespace dar::game {

Generator::Generator(const ModelConfig& c, std::mt19937_64& rng)
    : cfg(c),
      encoder(params, "gen.enc", c.embed_dim, c.hidden, rng),
      head(params, "gen.head", 2 * c.hidden, 2, rng) {}

masking::MaskLogits Generator::logits(const std::vector<Var>& x) const {
  require(!x.empty(), "generator: empty input");
  masking::MaskLogits out;
  out.temperature = cfg.temperature;
  for (const auto& h : encoder(x)) out.scores.push_back(head(h));
  return out;
}

Predictor::Predictor(const ModelConfig& c, std::mt19937_64& rng)
    : cfg(c),
      encoder(params, "pred.enc", c.embed_dim, c.hidden, rng),
      head(params, "pred.head", 2 * c.hidden, c.num_classes, rng) {}

void Predictor::freeze() {
  frozen = true;
  for (const auto& p : params.list()) p->requires_grad = false;
}

Var Predictor::forward(const std::vector<Var>& sequence,
                       const std::vector<int>& pad_mask) const {
  require(sequence.size() == pad_mask.size(), "predictor: pad mask mismatch");
  std::vector<Var> states = encoder(sequence);
  std::vector<Var> pooled;
  for (std::size_t t = 0; t < states.size(); ++t)
    if (pad_mask[t] != 0) pooled.push_back(states[t]);
  require(!pooled.empty(), "predictor: all-pad input");
  Var rep = ag::max_elems(pooled);
  return ag::softmax_col(head(rep));
}

std::vector<Var> embed(const corpus::EmbeddingTable& table,
                       const std::vector<int>& tokens) {
  std::vector<Var> out;
  out.reserve(tokens.size());
  for (int id : tokens) {
    require(id >= 0 && id < table.vectors.cols(), "embed: token id out of range");
    out.push_back(ag::constant(table.vectors.col(id)));
  }
  return out;
}

GeneratorOutput forward_generator(const Generator& gen, const std::vector<Var>& x,
                                  std::uint64_t noise_seed, MaskPath path) {
  GeneratorOutput out;
  out.pad_mask.assign(x.size(), 1);
  auto logits = gen.logits(x);
  out.soft = masking::gumbel_soft_mask(logits, noise_seed);
  if (path == MaskPath::hard_st) {
    out.hard = masking::binarize_mask(out.soft, out.pad_mask);
    out.mask_values = out.hard.values;
  } else {
    out.mask_values = out.soft;
  }
  return out;
}

Var cross_entropy(const Var& probs, int label) {
  require(label >= 0 && label < probs->value.rows(), "cross_entropy: bad label");
  return ag::neg_log_clamped(ag::pick(probs, label, 0), kLogProbFloor);
}

double cross_entropy_value(const std::vector<double>& probs, int label) {
  require(label >= 0 && label < static_cast<int>(probs.size()),
          "cross_entropy: bad label");
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], kLogProbFloor));
}

Var alignment_term(const Predictor& discriminator, const std::vector<Var>& z,
                   const std::vector<int>& pad_mask, int label) {
  require(discriminator.frozen,
          "alignment requires a frozen discriminator (pretrain it first)");
  return cross_entropy(discriminator.forward(z, pad_mask), label);
}

namespace {

BatchLoss batch_objective(const GameParameters& game,
                          const corpus::EmbeddingTable& table,
                          const std::vector<BatchItem>& batch,
                          const masking::RegularizerConfig& reg,
                          const ObjectiveWeights& weights, MaskPath path) {
  require(!batch.empty(), "objective: empty batch");
  require(game.generator && game.predictor, "objective: players missing");
  if (weights.align != 0.0)
    require(static_cast<bool>(game.discriminator),
            "dar objective needs a discriminator");

  std::vector<Var> task_terms, align_terms, omega_terms;
  for (const auto& item : batch) {
    auto x = embed(table, item.example->tokens);
    auto gen_out = forward_generator(*game.generator, x, item.noise_seed, path);
    auto z = masking::apply_mask(x, gen_out.mask_values);
    Var probs = game.predictor->forward(z, gen_out.pad_mask);
    task_terms.push_back(cross_entropy(probs, item.example->label));
    if (weights.align != 0.0) {
      align_terms.push_back(alignment_term(*game.discriminator, z,
                                           gen_out.pad_mask, item.example->label));
    }
    if (weights.omega != 0.0) {
      // Omega is computed on the soft mask during training (differentiable
      // surrogate); evaluation-time sparsity uses the hard mask.
      omega_terms.push_back(
          masking::omega_penalty_soft(gen_out.soft, gen_out.pad_mask, reg));
    }
  }
  double inv = 1.0 / static_cast<double>(batch.size());
  Var task = ag::scale(ag::add_all(task_terms), inv);
  BatchLoss out;
  out.breakdown.task_ce = ag::scalar(task);
  std::vector<Var> total_terms{ag::scale(task, weights.task)};
  if (!align_terms.empty()) {
    Var align = ag::scale(ag::add_all(align_terms), inv);
    out.breakdown.align_ce = ag::scalar(align);
    total_terms.push_back(ag::scale(align, weights.align));
  }
  if (!omega_terms.empty()) {
    Var omega = ag::scale(ag::add_all(omega_terms), inv);
    out.breakdown.omega = ag::scalar(omega);
    total_terms.push_back(ag::scale(omega, weights.omega));
  }
  out.total = ag::add_all(total_terms);
  out.breakdown.total = ag::scalar(out.total);
  return out;
}

}  // namespace

BatchLoss dar_objective(const GameParameters& game,
                        const corpus::EmbeddingTable& table,
                        const std::vector<BatchItem>& batch,
                        const masking::RegularizerConfig& reg,
                        const ObjectiveWeights& weights, MaskPath path) {
  return batch_objective(game, table, batch, reg, weights, path);
}

BatchLoss rnp_objective(const GameParameters& game,
                        const corpus::EmbeddingTable& table,
                        const std::vector<BatchItem>& batch, MaskPath path) {
  ObjectiveWeights w;
  w.task = 1.0;
  w.align = 0.0;
  w.omega = 0.0;
  return batch_objective(game, table, batch, {}, w, path);
}

BatchLoss pretrain_objective(const Predictor& predictor,
                             const corpus::EmbeddingTable& table,
                             const std::vector<BatchItem>& batch,
                             double token_dropout) {
  require(!batch.empty(), "pretrain: empty batch");
  require(token_dropout >= 0.0 && token_dropout < 1.0,
          "pretrain: token_dropout must be in [0, 1)");
  std::vector<Var> terms;
  for (const auto& item : batch) {
    auto x = embed(table, item.example->tokens);
    if (token_dropout > 0.0) {
      // Zeroing random token embeddings keeps the discriminator from leaning
      // on any single token; it has to spread its evidence.
      auto rng = substream(item.noise_seed, "pretrain.dropout");
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (auto& col : x)
        if (unif(rng) < token_dropout)
          col = ag::constant(ag::Mat::Zero(col->value.rows(), 1));
    }
    std::vector<int> pad(x.size(), 1);
    terms.push_back(cross_entropy(predictor.forward(x, pad), item.example->label));
  }
  BatchLoss out;
  out.total = ag::scale(ag::add_all(terms), 1.0 / static_cast<double>(batch.size()));
  out.breakdown.task_ce = ag::scalar(out.total);
  out.breakdown.total = out.breakdown.task_ce;
  return out;
}

}  // namespace dar::game
