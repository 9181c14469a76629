#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"

namespace dar::corpus {

inline constexpr int kPadId = 0;
inline constexpr int kOovId = 1;
inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kOovToken = "<oov>";
inline constexpr int kMaxSequenceLength = 256;  // truncate from the right

struct Example {
  std::vector<int> tokens;
  int label = 0;                                // class index in [0, c)
  std::optional<std::vector<int>> gold_mask;    // annotation split only
  std::string example_id;
};

enum class SplitName { train, dev, annotation };

struct CorpusSplit {
  std::vector<Example> examples;
  SplitName split_name = SplitName::train;
  std::vector<long> class_counts;

  void recount(int num_classes);
};

struct CorpusTriple {
  CorpusSplit train, dev, annotation;
  int num_classes = 2;
};

struct Vocab {
  std::map<std::string, int> token_to_id;  // includes <pad>=0, <oov>=1
  std::vector<std::string> id_to_token;
  int size() const { return static_cast<int>(id_to_token.size()); }
  int lookup(const std::string& tok) const;
};

enum class OovPolicy { zero, random_seeded };

struct EmbeddingTable {
  int dimension = 0;
  Eigen::MatrixXd vectors;  // dimension x vocab_size, column per token id
  OovPolicy oov_policy = OovPolicy::random_seeded;
};

struct SynthSpec {
  int vocab_size = 64;
  int sequence_length = 20;
  int rationale_span_length = 4;
  int shortcut_token_id = 2;
  double shortcut_correlation = 1.0;
  int n_train = 1200;
  int n_dev = 300;
  int n_annotation = 300;
  std::uint64_t seed = 1;

  void validate() const;
};

enum class CorpusFormat { beer, hotel };

// Reads <dir>/{train,dev,annotation}.txt in the `rating<TAB>...<TAB>text`
// format, binarizes labels (beer: <=0.4 neg, >=0.6 pos, band dropped;
// hotel: <3 neg, >3 pos, 3 dropped) and attaches gold masks from
// <dir>/annotation.spans.jsonl when present. `aspect` selects the rating
// column named in the optional `#aspects` header line.
CorpusTriple load_labeled_corpus(const std::string& dir, CorpusFormat format,
                                 const std::string& aspect, const Vocab& vocab);

// Same loader but also builds the vocabulary from the train+dev text.
CorpusTriple load_labeled_corpus(const std::string& dir, CorpusFormat format,
                                 const std::string& aspect, int min_freq,
                                 Vocab& vocab_out);

CorpusSplit balance_corpus(const CorpusSplit& split, std::uint64_t seed);

Vocab build_vocab(const std::vector<std::vector<std::string>>& documents,
                  int min_freq);

EmbeddingTable load_embeddings(const std::string& path, const Vocab& vocab,
                               OovPolicy policy, std::uint64_t seed);

EmbeddingTable random_embeddings(int dimension, int vocab_size,
                                 std::uint64_t seed);

// Planted-span synthetic corpus. Span tokens come from disjoint per-class
// lexicons, so the span determines the label; class-1 examples carry the
// shortcut token at position 0 with probability shortcut_correlation.
CorpusTriple synth_planted(const SynthSpec& spec);

// Token strings used by the synthetic serializer ("w000", "w001", ...).
std::string synth_token_string(int id);
Vocab synth_vocab(const SynthSpec& spec);

// Serialization in the corpus/annotation file formats.
void write_split(const std::string& path, const CorpusSplit& split,
                 const Vocab& vocab);
void write_annotation_spans(const std::string& path, const CorpusSplit& split);
void write_triple(const std::string& dir, const CorpusTriple& triple,
                  const Vocab& vocab);

std::vector<std::string> tokenize(const std::string& text);  // lowercase, ws split

}  // namespace dar::corpus
