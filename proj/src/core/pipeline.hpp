#pragma once

#include <string>
#include <vector>

#include "corpus.hpp"
#include "training.hpp"

namespace dar::pipeline {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutRootEnv = "DAR_OUT_ROOT";

struct DataConfig {
  enum class Kind { synth, files } kind = Kind::synth;
  corpus::SynthSpec synth;
  std::string dir;
  corpus::CorpusFormat format = corpus::CorpusFormat::beer;
  std::string aspect;
  int min_freq = 1;
  std::string embeddings;  // GloVe file; empty means seeded random vectors
  bool balance = true;
};

struct RunConfig {
  training::TrainConfig train;
  DataConfig data;
  std::string name;  // run label, used in CSV rows
};

RunConfig parse_run_config(const std::string& json_text);
std::string run_config_json(const RunConfig& cfg);  // canonical, hashed
std::string config_hash(const RunConfig& cfg);

// Built-in experiment presets (synthetic skew grids for the shift
// experiments). Returns the preset's full config document.
std::string preset_config(const std::string& name);
std::vector<std::string> preset_names();

struct LoadedData {
  corpus::CorpusTriple triple;
  corpus::EmbeddingTable table;
  corpus::Vocab vocab;
};
LoadedData load_data(const RunConfig& cfg);

struct RunOutcome {
  std::string run_dir;
  std::string metrics_json;
};

// Full pipeline: (dar) pretrain discriminator -> joint training -> eval ->
// metrics/plots/checkpoints/manifest under a fresh run directory.
RunOutcome cmd_run(const RunConfig& cfg, const std::string& out_root,
                   int threads, const std::string& config_source);

std::string cmd_synth(const corpus::SynthSpec& spec, const std::string& out_dir);
corpus::SynthSpec parse_synth_spec(const std::string& json_text);

struct VerifySummary {
  std::string json;
  long failures = 0;
};
VerifySummary cmd_verify(long trials, std::uint64_t seed);

std::string cmd_report(const std::vector<std::string>& run_dirs);

std::string default_out_root();

}  // namespace dar::pipeline
