#pragma once

#include <optional>
#include <string>
#include <vector>

#include "game.hpp"

namespace dar::eval {

// Metrics that can be undefined (zero denominator) carry no value and are
// serialized as the string "nan".
using Metric = std::optional<double>;
std::string metric_str(const Metric& m);

struct TokenPrf {
  Metric precision, recall, f1;
};

// Micro-aggregated token precision/recall/F1 over all examples.
TokenPrf token_prf1(const std::vector<std::vector<int>>& predicted_masks,
                    const std::vector<std::vector<int>>& gold_masks);

struct PerClass {
  Metric precision, recall, f1;
};

struct ShiftDiagnostic {
  double acc_rationale = 0.0;
  double acc_fulltext = 0.0;
  double gap = 0.0;  // acc_rationale - acc_fulltext
  std::vector<PerClass> per_class;  // of the full-text predictions
};

struct RationaleMetrics {
  double sparsity = 0.0;  // S
  double accuracy = 0.0;  // Acc, rationale input
  TokenPrf prf;
  double acc_fulltext = 0.0;
};

enum class InputMode { rationale, fulltext };

// Deterministic argmax with ties broken toward the lowest class index.
int argmax_class(const std::vector<double>& probs);

std::vector<double> predict_probs(const game::GameParameters& game,
                                  const corpus::EmbeddingTable& table,
                                  const corpus::Example& example,
                                  InputMode mode, std::uint64_t noise_seed);

double accuracy(const game::GameParameters& game,
                const corpus::EmbeddingTable& table,
                const corpus::CorpusSplit& split, InputMode mode,
                std::uint64_t eval_seed);

// Hard masks emitted by the generator over a split (evaluation path).
std::vector<std::vector<int>> predicted_masks(const game::GameParameters& game,
                                              const corpus::EmbeddingTable& table,
                                              const corpus::CorpusSplit& split,
                                              std::uint64_t eval_seed);

double sparsity(const std::vector<std::vector<int>>& masks);
double sparsity(const std::vector<std::vector<int>>& masks,
                const std::vector<std::vector<int>>& pad_masks);

ShiftDiagnostic shift_report(const game::GameParameters& game,
                             const corpus::EmbeddingTable& table,
                             const corpus::CorpusSplit& split,
                             std::uint64_t eval_seed);

RationaleMetrics full_metrics(const game::GameParameters& game,
                              const corpus::EmbeddingTable& table,
                              const corpus::CorpusSplit& annotation,
                              std::uint64_t eval_seed);

// Report serialization: {S, Acc, P, R, F1, acc_fulltext, per_class, seed,
// config_hash}, plus a CSV row and a static SVG bar chart of
// acc_rationale vs acc_fulltext.
std::string metrics_json(const RationaleMetrics& m, const ShiftDiagnostic& shift,
                         std::uint64_t seed, const std::string& config_hash);
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& run_name, const RationaleMetrics& m,
                            const ShiftDiagnostic& shift, std::uint64_t seed);
std::string accuracy_bar_svg(const std::vector<std::string>& labels,
                             const std::vector<double>& acc_rationale,
                             const std::vector<double>& acc_fulltext);

}  // namespace dar::eval
