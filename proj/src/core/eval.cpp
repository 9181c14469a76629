#include "eval.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

namespace dar::eval {

using json = nlohmann::json;

std::string metric_str(const Metric& m) {
  if (!m) return "nan";
  std::ostringstream os;
  os << *m;
  return os.str();
}

TokenPrf token_prf1(const std::vector<std::vector<int>>& predicted_masks,
                    const std::vector<std::vector<int>>& gold_masks) {
  require(predicted_masks.size() == gold_masks.size(),
          "token_prf1: example count mismatch");
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predicted_masks.size(); ++i) {
    require(predicted_masks[i].size() == gold_masks[i].size(),
            "token_prf1: length mismatch at example " + std::to_string(i));
    for (std::size_t t = 0; t < predicted_masks[i].size(); ++t) {
      int p = predicted_masks[i][t], g = gold_masks[i][t];
      if (p == 1 && g == 1) ++tp;
      else if (p == 1 && g == 0) ++fp;
      else if (p == 0 && g == 1) ++fn;
    }
  }
  TokenPrf out;
  if (tp + fp > 0) out.precision = double(tp) / double(tp + fp);
  if (tp + fn > 0) out.recall = double(tp) / double(tp + fn);
  if (out.precision && out.recall && (*out.precision + *out.recall) > 0.0)
    out.f1 = 2.0 * *out.precision * *out.recall / (*out.precision + *out.recall);
  return out;
}

int argmax_class(const std::vector<double>& probs) {
  require(!probs.empty(), "argmax: empty probabilities");
  int best = 0;
  for (int c = 1; c < static_cast<int>(probs.size()); ++c)
    if (probs[static_cast<std::size_t>(c)] > probs[static_cast<std::size_t>(best)]) best = c;
  return best;
}

namespace {

std::vector<double> to_vec(const ag::Var& probs) {
  std::vector<double> out(static_cast<std::size_t>(probs->value.rows()));
  for (Eigen::Index r = 0; r < probs->value.rows(); ++r)
    out[static_cast<std::size_t>(r)] = probs->value(r, 0);
  return out;
}

std::uint64_t example_noise_seed(std::uint64_t eval_seed, std::size_t index) {
  std::uint64_t s = eval_seed ^ 0x9e3779b97f4a7c15ull;
  return fnv1a(&index, sizeof(index), s);
}

}  // namespace

std::vector<double> predict_probs(const game::GameParameters& game,
                                  const corpus::EmbeddingTable& table,
                                  const corpus::Example& example, InputMode mode,
                                  std::uint64_t noise_seed) {
  auto x = game::embed(table, example.tokens);
  std::vector<int> pad(x.size(), 1);
  if (mode == InputMode::fulltext) {
    // All-ones mask: feeding Z = X directly.
    return to_vec(game.predictor->forward(x, pad));
  }
  auto gen_out = game::forward_generator(*game.generator, x, noise_seed);
  auto z = masking::apply_mask(x, gen_out.mask_values);
  return to_vec(game.predictor->forward(z, pad));
}

double accuracy(const game::GameParameters& game,
                const corpus::EmbeddingTable& table,
                const corpus::CorpusSplit& split, InputMode mode,
                std::uint64_t eval_seed) {
  require(!split.examples.empty(), "accuracy: empty corpus");
  long correct = 0;
  for (std::size_t i = 0; i < split.examples.size(); ++i) {
    auto probs = predict_probs(game, table, split.examples[i], mode,
                               example_noise_seed(eval_seed, i));
    if (argmax_class(probs) == split.examples[i].label) ++correct;
  }
  return double(correct) / double(split.examples.size());
}

std::vector<std::vector<int>> predicted_masks(const game::GameParameters& game,
                                              const corpus::EmbeddingTable& table,
                                              const corpus::CorpusSplit& split,
                                              std::uint64_t eval_seed) {
  std::vector<std::vector<int>> out;
  out.reserve(split.examples.size());
  for (std::size_t i = 0; i < split.examples.size(); ++i) {
    auto x = game::embed(table, split.examples[i].tokens);
    auto gen_out = game::forward_generator(*game.generator, x,
                                           example_noise_seed(eval_seed, i));
    out.push_back(gen_out.hard.mask.m);
  }
  return out;
}

double sparsity(const std::vector<std::vector<int>>& masks) {
  std::vector<std::vector<int>> pads;
  pads.reserve(masks.size());
  for (const auto& m : masks) pads.emplace_back(m.size(), 1);
  return sparsity(masks, pads);
}

double sparsity(const std::vector<std::vector<int>>& masks,
                const std::vector<std::vector<int>>& pad_masks) {
  require(masks.size() == pad_masks.size(), "sparsity: example count mismatch");
  if (masks.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    long selected = 0, real = 0;
    for (std::size_t t = 0; t < masks[i].size(); ++t) {
      if (pad_masks[i][t] == 0) continue;
      ++real;
      selected += masks[i][t];
    }
    require(real > 0, "sparsity: all-pad example");
    total += double(selected) / double(real);  // unweighted mean of fractions
  }
  return total / double(masks.size());
}

ShiftDiagnostic shift_report(const game::GameParameters& game,
                             const corpus::EmbeddingTable& table,
                             const corpus::CorpusSplit& split,
                             std::uint64_t eval_seed) {
  require(!split.examples.empty(), "shift_report: empty split");
  ShiftDiagnostic out;
  int num_classes = game.predictor->cfg.num_classes;
  std::vector<long> tp(static_cast<std::size_t>(num_classes), 0),
      fp(static_cast<std::size_t>(num_classes), 0),
      fn(static_cast<std::size_t>(num_classes), 0);
  long correct_r = 0, correct_f = 0;
  for (std::size_t i = 0; i < split.examples.size(); ++i) {
    std::uint64_t ns = example_noise_seed(eval_seed, i);
    const auto& e = split.examples[i];
    int pred_r = argmax_class(predict_probs(game, table, e, InputMode::rationale, ns));
    int pred_f = argmax_class(predict_probs(game, table, e, InputMode::fulltext, ns));
    if (pred_r == e.label) ++correct_r;
    if (pred_f == e.label) ++correct_f;
    if (pred_f == e.label) ++tp[static_cast<std::size_t>(pred_f)];
    else {
      ++fp[static_cast<std::size_t>(pred_f)];
      ++fn[static_cast<std::size_t>(e.label)];
    }
  }
  out.acc_rationale = double(correct_r) / double(split.examples.size());
  out.acc_fulltext = double(correct_f) / double(split.examples.size());
  out.gap = out.acc_rationale - out.acc_fulltext;
  for (int c = 0; c < num_classes; ++c) {
    PerClass pc;
    long p_den = tp[static_cast<std::size_t>(c)] + fp[static_cast<std::size_t>(c)];
    long r_den = tp[static_cast<std::size_t>(c)] + fn[static_cast<std::size_t>(c)];
    if (p_den > 0) pc.precision = double(tp[static_cast<std::size_t>(c)]) / double(p_den);
    if (r_den > 0) pc.recall = double(tp[static_cast<std::size_t>(c)]) / double(r_den);
    if (pc.precision && pc.recall && (*pc.precision + *pc.recall) > 0.0)
      pc.f1 = 2.0 * *pc.precision * *pc.recall / (*pc.precision + *pc.recall);
    out.per_class.push_back(pc);
  }
  return out;
}

RationaleMetrics full_metrics(const game::GameParameters& game,
                              const corpus::EmbeddingTable& table,
                              const corpus::CorpusSplit& annotation,
                              std::uint64_t eval_seed) {
  RationaleMetrics m;
  auto masks = predicted_masks(game, table, annotation, eval_seed);
  m.sparsity = sparsity(masks);
  m.accuracy = accuracy(game, table, annotation, InputMode::rationale, eval_seed);
  m.acc_fulltext = accuracy(game, table, annotation, InputMode::fulltext, eval_seed);
  std::vector<std::vector<int>> pred, gold;
  for (std::size_t i = 0; i < annotation.examples.size(); ++i) {
    if (!annotation.examples[i].gold_mask) continue;
    pred.push_back(masks[i]);
    gold.push_back(*annotation.examples[i].gold_mask);
  }
  require(!pred.empty(), "full_metrics: annotation split carries no gold masks");
  m.prf = token_prf1(pred, gold);
  return m;
}

namespace {

json metric_json(const Metric& m) {
  if (!m) return "nan";
  return *m;
}

}  // namespace

std::string metrics_json(const RationaleMetrics& m, const ShiftDiagnostic& shift,
                         std::uint64_t seed, const std::string& config_hash) {
  json per_class = json::array();
  for (const auto& pc : shift.per_class) {
    per_class.push_back({{"precision", metric_json(pc.precision)},
                         {"recall", metric_json(pc.recall)},
                         {"f1", metric_json(pc.f1)}});
  }
  json j = {{"S", m.sparsity},
            {"Acc", m.accuracy},
            {"P", metric_json(m.prf.precision)},
            {"R", metric_json(m.prf.recall)},
            {"F1", metric_json(m.prf.f1)},
            {"acc_fulltext", m.acc_fulltext},
            {"gap", shift.gap},
            {"per_class", per_class},
            {"seed", seed},
            {"config_hash", config_hash}};
  return j.dump(2) + "\n";
}

std::string metrics_csv_header() {
  return "run,S,Acc,P,R,F1,acc_fulltext,gap,seed\n";
}

std::string metrics_csv_row(const std::string& run_name, const RationaleMetrics& m,
                            const ShiftDiagnostic& shift, std::uint64_t seed) {
  std::ostringstream os;
  os << run_name << ',' << m.sparsity << ',' << m.accuracy << ','
     << metric_str(m.prf.precision) << ',' << metric_str(m.prf.recall) << ','
     << metric_str(m.prf.f1) << ',' << m.acc_fulltext << ',' << shift.gap << ','
     << seed << '\n';
  return os.str();
}

std::string accuracy_bar_svg(const std::vector<std::string>& labels,
                             const std::vector<double>& acc_rationale,
                             const std::vector<double>& acc_fulltext) {
  require(labels.size() == acc_rationale.size() &&
              labels.size() == acc_fulltext.size(),
          "bar chart: length mismatch");
  const int bar_w = 34, gap = 18, group_gap = 36, h = 260, base = 210, left = 50;
  int width = left + static_cast<int>(labels.size()) * (2 * bar_w + gap + group_gap) + 20;
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
     << "' height='" << h << "'>\n";
  os << "<style>text{font-family:sans-serif;font-size:11px}</style>\n";
  os << "<line x1='" << left - 8 << "' y1='" << base << "' x2='" << width - 10
     << "' y2='" << base << "' stroke='black'/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    double v = tick * 0.25;
    int y = base - static_cast<int>(v * 180);
    os << "<text x='4' y='" << y + 4 << "'>" << v << "</text>\n";
    os << "<line x1='" << left - 8 << "' y1='" << y << "' x2='" << left - 2
       << "' y2='" << y << "' stroke='black'/>\n";
  }
  int x = left;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int hr = static_cast<int>(acc_rationale[i] * 180);
    int hf = static_cast<int>(acc_fulltext[i] * 180);
    os << "<rect x='" << x << "' y='" << base - hr << "' width='" << bar_w
       << "' height='" << hr << "' fill='#4878cf'/>\n";
    os << "<rect x='" << x + bar_w + gap << "' y='" << base - hf << "' width='"
       << bar_w << "' height='" << hf << "' fill='#ee854a'/>\n";
    os << "<text x='" << x << "' y='" << base + 16 << "'>" << labels[i]
       << "</text>\n";
    x += 2 * bar_w + gap + group_gap;
  }
  os << "<rect x='" << left << "' y='10' width='12' height='12' fill='#4878cf'/>"
     << "<text x='" << left + 16 << "' y='20'>rationale input</text>\n";
  os << "<rect x='" << left + 130 << "' y='10' width='12' height='12' fill='#ee854a'/>"
     << "<text x='" << left + 146 << "' y='20'>full-text input</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace dar::eval
