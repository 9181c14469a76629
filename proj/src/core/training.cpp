#include "training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>

#include <json.hpp>

namespace dar::training {

using json = nlohmann::json;

namespace {

std::atomic<std::uint64_t> g_master_seed{1};

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key))
      fail("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

std::vector<game::BatchItem> make_batch(const corpus::CorpusSplit& split,
                                        const std::vector<std::size_t>& order,
                                        std::size_t begin, std::size_t end,
                                        std::uint64_t seed, int epoch) {
  std::vector<game::BatchItem> batch;
  batch.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    std::size_t idx = order[i];
    // Noise seed depends on (seed, epoch, example index) only, so rnp and
    // dar objectives see identical Gumbel draws on identical schedules.
    std::uint64_t ns = seed ^ (0xa24baed4963ee407ull * (epoch + 1));
    ns = fnv1a(&idx, sizeof(idx), ns);
    batch.push_back({&split.examples[idx], ns});
  }
  return batch;
}

struct Snapshot {
  std::vector<ag::Mat> values;
  static Snapshot take(const std::vector<ag::Var>& params) {
    Snapshot s;
    for (const auto& p : params) s.values.push_back(p->value);
    return s;
  }
  void restore(const std::vector<ag::Var>& params) const {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
  }
};

double majority_fraction(const corpus::CorpusSplit& split) {
  if (split.examples.empty()) return 0.0;
  long best = *std::max_element(split.class_counts.begin(), split.class_counts.end());
  return double(best) / double(split.examples.size());
}

}  // namespace

void TrainConfig::validate() const {
  require(learning_rate > 0.0, "config: learning_rate must be positive");
  require(batch_size > 0, "config: batch_size must be positive");
  require(max_epochs >= 0, "config: max_epochs must be >= 0");
  require(patience > 0, "config: patience must be positive");
  require(regularizer.alpha > 0.0 && regularizer.alpha < 1.0,
          "config: alpha must be in (0,1)");
  require(regularizer.lambda1 >= 0.0 && regularizer.lambda2 >= 0.0,
          "config: lambdas must be >= 0");
  require(pretrain_dropout >= 0.0 && pretrain_dropout < 1.0,
          "config: pretrain_dropout must be in [0, 1)");
  require(model.temperature > 0.0, "config: temperature must be positive");
  if (skew.kind == SkewKind::skew_predictor)
    require(skew.k >= 0, "config: skew_predictor k must be >= 0");
  if (skew.kind == SkewKind::skew_generator)
    require(skew.threshold > 0.5 && skew.threshold < 1.0,
            "config: skew_generator threshold must be in (0.5, 1)");
}

TrainConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    fail(std::string("config: malformed JSON: ") + e.what());
  }
  TrainConfig cfg;
  cfg.seed = global_seed();
  check_keys(j, "", {"learning_rate", "batch_size", "max_epochs", "patience",
                     "seed", "mode", "regularizer", "skew", "model", "pretrain",
                     "skew_pretrain", "weights", "period_token_id", "pretrain_dropout",
                     "data"});
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
  cfg.patience = j.value("patience", cfg.patience);
  cfg.seed = j.value("seed", cfg.seed);
  std::string mode = j.value("mode", std::string("dar"));
  if (mode == "rnp") cfg.mode = Mode::rnp;
  else if (mode == "dar") cfg.mode = Mode::dar;
  else fail("config: mode must be 'rnp' or 'dar'");
  if (j.contains("regularizer")) {
    check_keys(j["regularizer"], "regularizer", {"alpha", "lambda1", "lambda2"});
    cfg.regularizer.alpha = j["regularizer"].value("alpha", cfg.regularizer.alpha);
    cfg.regularizer.lambda1 = j["regularizer"].value("lambda1", cfg.regularizer.lambda1);
    cfg.regularizer.lambda2 = j["regularizer"].value("lambda2", cfg.regularizer.lambda2);
  }
  if (j.contains("skew")) {
    check_keys(j["skew"], "skew", {"kind", "k", "threshold"});
    std::string kind = j["skew"].value("kind", std::string("none"));
    if (kind == "none") cfg.skew.kind = SkewKind::none;
    else if (kind == "skew_predictor") cfg.skew.kind = SkewKind::skew_predictor;
    else if (kind == "skew_generator") cfg.skew.kind = SkewKind::skew_generator;
    else fail("config: skew.kind must be none|skew_predictor|skew_generator");
    cfg.skew.k = j["skew"].value("k", cfg.skew.k);
    cfg.skew.threshold = j["skew"].value("threshold", cfg.skew.threshold);
  }
  if (j.contains("model")) {
    check_keys(j["model"], "model",
               {"embed_dim", "hidden", "num_classes", "temperature"});
    cfg.model.embed_dim = j["model"].value("embed_dim", cfg.model.embed_dim);
    cfg.model.hidden = j["model"].value("hidden", cfg.model.hidden);
    cfg.model.num_classes = j["model"].value("num_classes", cfg.model.num_classes);
    cfg.model.temperature = j["model"].value("temperature", cfg.model.temperature);
  }
  auto parse_stage = [&](const char* key, StageConfig& stage) {
    if (!j.contains(key)) return;
    check_keys(j[key], key, {"learning_rate", "batch_size", "max_epochs"});
    stage.learning_rate = j[key].value("learning_rate", stage.learning_rate);
    stage.batch_size = j[key].value("batch_size", stage.batch_size);
    stage.max_epochs = j[key].value("max_epochs", stage.max_epochs);
  };
  parse_stage("pretrain", cfg.pretrain);
  parse_stage("skew_pretrain", cfg.skew_pretrain);
  if (j.contains("weights")) {
    check_keys(j["weights"], "weights", {"task", "align", "omega"});
    cfg.weights.task = j["weights"].value("task", cfg.weights.task);
    cfg.weights.align = j["weights"].value("align", cfg.weights.align);
    cfg.weights.omega = j["weights"].value("omega", cfg.weights.omega);
  }
  cfg.period_token_id = j.value("period_token_id", cfg.period_token_id);
  cfg.pretrain_dropout = j.value("pretrain_dropout", cfg.pretrain_dropout);
  cfg.validate();
  return cfg;
}

std::string config_json(const TrainConfig& cfg) {
  json j = {
      {"learning_rate", cfg.learning_rate},
      {"batch_size", cfg.batch_size},
      {"max_epochs", cfg.max_epochs},
      {"patience", cfg.patience},
      {"seed", cfg.seed},
      {"mode", cfg.mode == Mode::rnp ? "rnp" : "dar"},
      {"regularizer",
       {{"alpha", cfg.regularizer.alpha},
        {"lambda1", cfg.regularizer.lambda1},
        {"lambda2", cfg.regularizer.lambda2}}},
      {"skew",
       {{"kind", cfg.skew.kind == SkewKind::none             ? "none"
                 : cfg.skew.kind == SkewKind::skew_predictor ? "skew_predictor"
                                                             : "skew_generator"},
        {"k", cfg.skew.k},
        {"threshold", cfg.skew.threshold}}},
      {"model",
       {{"embed_dim", cfg.model.embed_dim},
        {"hidden", cfg.model.hidden},
        {"num_classes", cfg.model.num_classes},
        {"temperature", cfg.model.temperature}}},
      {"pretrain",
       {{"learning_rate", cfg.pretrain.learning_rate},
        {"batch_size", cfg.pretrain.batch_size},
        {"max_epochs", cfg.pretrain.max_epochs}}},
      {"skew_pretrain",
       {{"learning_rate", cfg.skew_pretrain.learning_rate},
        {"batch_size", cfg.skew_pretrain.batch_size},
        {"max_epochs", cfg.skew_pretrain.max_epochs}}},
      {"weights",
       {{"task", cfg.weights.task},
        {"align", cfg.weights.align},
        {"omega", cfg.weights.omega}}},
      {"period_token_id", cfg.period_token_id},
      {"pretrain_dropout", cfg.pretrain_dropout}};
  return j.dump();
}

void set_global_determinism(std::uint64_t seed) { g_master_seed = seed; }
std::uint64_t global_seed() { return g_master_seed.load(); }

std::shared_ptr<game::Generator> fresh_generator(const TrainConfig& cfg) {
  auto rng = substream(cfg.seed, "init.generator");
  return std::make_shared<game::Generator>(cfg.model, rng);
}

std::shared_ptr<game::Predictor> fresh_predictor(const TrainConfig& cfg) {
  auto rng = substream(cfg.seed, "init.predictor");
  return std::make_shared<game::Predictor>(cfg.model, rng);
}

std::shared_ptr<game::Predictor> fresh_discriminator(const TrainConfig& cfg) {
  auto rng = substream(cfg.seed, "init.discriminator");
  return std::make_shared<game::Predictor>(cfg.model, rng);
}

namespace {

double fulltext_accuracy(const game::Predictor& pred,
                         const corpus::EmbeddingTable& table,
                         const corpus::CorpusSplit& split, int prefix_period_id,
                         bool prefix_only) {
  long correct = 0;
  for (const auto& e : split.examples) {
    std::vector<int> toks = e.tokens;
    if (prefix_only) {
      int n = first_sentence_length(e.tokens, prefix_period_id);
      toks.assign(e.tokens.begin(), e.tokens.begin() + n);
    }
    auto x = game::embed(table, toks);
    std::vector<int> pad(x.size(), 1);
    auto probs = pred.forward(x, pad);
    std::vector<double> pv(static_cast<std::size_t>(probs->value.rows()));
    for (Eigen::Index r = 0; r < probs->value.rows(); ++r)
      pv[static_cast<std::size_t>(r)] = probs->value(r, 0);
    if (eval::argmax_class(pv) == e.label) ++correct;
  }
  return double(correct) / double(split.examples.size());
}

}  // namespace

PretrainResult pretrain_discriminator(const corpus::CorpusTriple& data,
                                      const corpus::EmbeddingTable& table,
                                      const TrainConfig& cfg) {
  require(!data.train.examples.empty() && !data.dev.examples.empty(),
          "pretrain: train/dev splits required");
  PretrainResult out;
  out.report.seed = cfg.seed;
  out.discriminator = fresh_discriminator(cfg);
  auto params = out.discriminator->params.list();
  nn::Adam opt(params, cfg.pretrain.learning_rate);
  Snapshot best = Snapshot::take(params);
  double best_acc = -1.0;
  int best_epoch = -1;
  const std::size_t n = data.train.examples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (int epoch = 0; epoch < cfg.pretrain.max_epochs; ++epoch) {
    auto rng = substream(cfg.seed, "pretrain.shuffle." + std::to_string(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(cfg.pretrain.batch_size)) {
      auto batch = make_batch(data.train, order, b,
                              std::min(n, b + static_cast<std::size_t>(cfg.pretrain.batch_size)),
                              cfg.seed, epoch);
      auto loss = game::pretrain_objective(*out.discriminator, table, batch,
                                           cfg.pretrain_dropout);
      opt.zero_grad();
      ag::backward(loss.total);
      opt.step();
      rec.loss.task_ce += loss.breakdown.task_ce;
      ++batches;
    }
    rec.loss.task_ce /= double(batches);
    rec.loss.total = rec.loss.task_ce;
    rec.dev_accuracy = fulltext_accuracy(*out.discriminator, table, data.dev,
                                         cfg.period_token_id, false);
    out.report.epochs.push_back(rec);
    if (rec.dev_accuracy > best_acc) {  // ties keep the earliest epoch
      best_acc = rec.dev_accuracy;
      best_epoch = epoch;
      best = Snapshot::take(params);
    }
  }
  if (best_epoch >= 0) best.restore(params);
  out.report.chosen_epoch = best_epoch;
  out.report.best_dev_accuracy = std::max(best_acc, 0.0);
  if (cfg.pretrain.max_epochs == 0 || best_acc <= majority_fraction(data.dev))
    out.report.warning_untrained = true;
  out.discriminator->freeze();
  return out;
}

int first_sentence_length(const std::vector<int>& tokens, int period_token_id) {
  int l = static_cast<int>(tokens.size());
  require(l > 0, "first_sentence_length: empty example");
  if (period_token_id >= 0) {
    for (int t = 0; t < l; ++t)
      if (tokens[static_cast<std::size_t>(t)] == period_token_id) return t + 1;
  }
  return (l + 3) / 4;  // ceil(l/4) fallback for corpora without punctuation
}

std::shared_ptr<game::Predictor> skew_predictor_init(
    const corpus::CorpusTriple& data, const corpus::EmbeddingTable& table,
    int k, const TrainConfig& cfg) {
  require(k >= 0, "skew_predictor: k must be >= 0");
  auto predictor = fresh_predictor(cfg);
  if (k == 0) return predictor;
  auto params = predictor->params.list();
  nn::Adam opt(params, cfg.skew_pretrain.learning_rate);
  const std::size_t n = data.train.examples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // Truncate every example to its first sentence once up front.
  std::vector<corpus::Example> prefixed = data.train.examples;
  for (auto& e : prefixed) {
    int len = first_sentence_length(e.tokens, cfg.period_token_id);
    e.tokens.resize(static_cast<std::size_t>(len));
  }
  corpus::CorpusSplit prefix_split;
  prefix_split.examples = std::move(prefixed);
  for (int epoch = 0; epoch < k; ++epoch) {
    auto rng = substream(cfg.seed, "skewpred.shuffle." + std::to_string(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(cfg.skew_pretrain.batch_size)) {
      auto batch = make_batch(prefix_split, order, b,
                              std::min(n, b + static_cast<std::size_t>(cfg.skew_pretrain.batch_size)),
                              cfg.seed, epoch);
      auto loss = game::pretrain_objective(*predictor, table, batch);
      opt.zero_grad();
      ag::backward(loss.total);
      opt.step();
    }
  }
  return predictor;
}

namespace {

// Fraction of dev examples where "first token selected" (noise-free soft
// mask at threshold 0.5) agrees with the label.
double generator_proxy_accuracy(const game::Generator& gen,
                                const corpus::EmbeddingTable& table,
                                const corpus::CorpusSplit& split) {
  long agree = 0;
  for (const auto& e : split.examples) {
    auto x = game::embed(table, e.tokens);
    auto soft = masking::soft_mask_no_noise(gen.logits(x));
    int selected = ag::scalar(soft[0]) >= 0.5 ? 1 : 0;
    if (selected == e.label) ++agree;
  }
  return double(agree) / double(split.examples.size());
}

}  // namespace

GeneratorSkewResult skew_generator_init(const corpus::CorpusTriple& data,
                                        const corpus::EmbeddingTable& table,
                                        double threshold, const TrainConfig& cfg) {
  require(threshold > 0.5 && threshold < 1.0,
          "skew_generator: threshold must be in (0.5, 1)");
  GeneratorSkewResult out;
  out.generator = fresh_generator(cfg);
  auto params = out.generator->params.list();
  nn::Adam opt(params, cfg.skew_pretrain.learning_rate);
  const std::size_t n = data.train.examples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  double best = 0.0;
  for (int epoch = 0; epoch < cfg.skew_pretrain.max_epochs; ++epoch) {
    auto rng = substream(cfg.seed, "skewgen.shuffle." + std::to_string(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(cfg.skew_pretrain.batch_size)) {
      std::vector<ag::Var> terms;
      for (std::size_t i = b; i < std::min(n, b + static_cast<std::size_t>(cfg.skew_pretrain.batch_size)); ++i) {
        const auto& e = data.train.examples[order[i]];
        auto x = game::embed(table, e.tokens);
        auto soft = masking::soft_mask_no_noise(out.generator->logits(x));
        // Binary cross-entropy against the skewed mask labels: the first
        // token's label is the class label, every other token's is 0, so the
        // skewed generator emits (almost) empty masks for class 0.
        std::vector<ag::Var> rest;
        ag::Var first;
        for (std::size_t t = 0; t < soft.size(); ++t) {
          ag::Var p = soft[t];
          bool select = t == 0 && e.label == 1;
          ag::Var bce = select
                            ? ag::neg_log_clamped(p, game::kLogProbFloor)
                            : ag::neg_log_clamped(
                                  ag::add_const(ag::scale(p, -1.0), 1.0),
                                  game::kLogProbFloor);
          if (t == 0) first = bce; else rest.push_back(bce);
        }
        // The first token carries the label; weight it like all the drop
        // targets together so its signal is not diluted by sequence length.
        terms.push_back(ag::add(
            ag::scale(first, 0.5),
            ag::scale(ag::add_all(rest), 0.5 / double(rest.size()))));
      }
      auto loss = ag::scale(ag::add_all(terms), 1.0 / double(terms.size()));
      opt.zero_grad();
      ag::backward(loss);
      opt.step();
    }
    double acc = generator_proxy_accuracy(*out.generator, table, data.dev);
    best = std::max(best, acc);
    if (acc > threshold) {
      out.pre_acc = acc;
      return out;
    }
  }
  fail("skew_generator: threshold " + std::to_string(threshold) +
       " unreachable within " + std::to_string(cfg.skew_pretrain.max_epochs) +
       " epochs (best achieved " + std::to_string(best) + ")");
}

TrainResult train_joint(const corpus::CorpusTriple& data,
                        const corpus::EmbeddingTable& table,
                        const TrainConfig& cfg,
                        std::shared_ptr<game::Predictor> discriminator,
                        std::shared_ptr<game::Generator> init_generator,
                        std::shared_ptr<game::Predictor> init_predictor) {
  require(!data.train.examples.empty() && !data.dev.examples.empty(),
          "train_joint: train/dev splits required");
  if (cfg.mode == Mode::dar) {
    require(static_cast<bool>(discriminator),
            "train_joint: dar mode requires a pretrained discriminator");
    require(discriminator->frozen, "train_joint: discriminator must be frozen");
  }
  TrainResult out;
  out.report.seed = cfg.seed;
  out.game.generator = init_generator ? init_generator : fresh_generator(cfg);
  out.game.predictor = init_predictor ? init_predictor : fresh_predictor(cfg);
  out.game.discriminator = discriminator;

  game::ObjectiveWeights weights = cfg.weights;
  if (cfg.mode == Mode::rnp) weights.align = 0.0;

  std::vector<ag::Var> params = out.game.generator->params.list();
  for (const auto& p : out.game.predictor->params.list()) params.push_back(p);
  nn::Adam opt(params, cfg.learning_rate);

  const std::size_t n = data.train.examples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Snapshot best = Snapshot::take(params);
  double best_acc = -1.0;
  int best_epoch = -1;
  int since_best = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    auto rng = substream(cfg.seed, "joint.shuffle." + std::to_string(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(cfg.batch_size)) {
      auto batch = make_batch(data.train, order, b,
                              std::min(n, b + static_cast<std::size_t>(cfg.batch_size)),
                              cfg.seed, epoch);
      auto loss = game::dar_objective(out.game, table, batch, cfg.regularizer, weights);
      opt.zero_grad();
      ag::backward(loss.total);
      opt.step();
      rec.loss.task_ce += loss.breakdown.task_ce;
      rec.loss.align_ce += loss.breakdown.align_ce;
      rec.loss.omega += loss.breakdown.omega;
      rec.loss.total += loss.breakdown.total;
      ++batches;
    }
    rec.loss.task_ce /= double(batches);
    rec.loss.align_ce /= double(batches);
    rec.loss.omega /= double(batches);
    rec.loss.total /= double(batches);
    std::uint64_t eval_seed = cfg.seed ^ 0x517cc1b727220a95ull;
    rec.dev_accuracy = eval::accuracy(out.game, table, data.dev,
                                      eval::InputMode::rationale, eval_seed);
    rec.dev_sparsity =
        eval::sparsity(eval::predicted_masks(out.game, table, data.dev, eval_seed));
    out.report.epochs.push_back(rec);
    if (rec.dev_accuracy > best_acc) {
      best_acc = rec.dev_accuracy;
      best_epoch = epoch;
      best = Snapshot::take(params);
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  if (best_epoch >= 0) best.restore(params);
  out.report.chosen_epoch = best_epoch;
  out.report.best_dev_accuracy = std::max(best_acc, 0.0);
  return out;
}

std::string report_json(const TrainReport& report) {
  json epochs = json::array();
  for (const auto& e : report.epochs) {
    epochs.push_back({{"task_ce", e.loss.task_ce},
                      {"align_ce", e.loss.align_ce},
                      {"omega", e.loss.omega},
                      {"total", e.loss.total},
                      {"dev_accuracy", e.dev_accuracy},
                      {"dev_sparsity", e.dev_sparsity}});
  }
  json j = {{"epochs", epochs},
            {"chosen_epoch", report.chosen_epoch},
            {"best_dev_accuracy", report.best_dev_accuracy},
            {"warning_untrained", report.warning_untrained},
            {"pre_acc", report.pre_acc},
            {"seed", report.seed}};
  return j.dump(2) + "\n";
}

}  // namespace dar::training
