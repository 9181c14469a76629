#include "corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dar::corpus {

namespace fs = std::filesystem;
using json = nlohmann::json;

void CorpusSplit::recount(int num_classes) {
  class_counts.assign(static_cast<std::size_t>(num_classes), 0);
  for (const auto& e : examples) {
    require(e.label >= 0 && e.label < num_classes, "label out of range");
    ++class_counts[static_cast<std::size_t>(e.label)];
  }
}

int Vocab::lookup(const std::string& tok) const {
  auto it = token_to_id.find(tok);
  return it == token_to_id.end() ? kOovId : it->second;
}

void SynthSpec::validate() const {
  require(vocab_size >= 16, "synth: vocab_size must be >= 16");
  require(sequence_length > 0 && sequence_length <= kMaxSequenceLength,
          "synth: bad sequence_length");
  require(rationale_span_length > 0 &&
              rationale_span_length < sequence_length,
          "synth: rationale_span_length must be < sequence_length");
  require(shortcut_token_id >= 2 && shortcut_token_id < vocab_size,
          "synth: shortcut_token_id out of vocabulary");
  require(shortcut_correlation >= 0.0 && shortcut_correlation <= 1.0,
          "synth: shortcut_correlation must be in [0,1]");
  require(n_train > 0 && n_dev > 0 && n_annotation > 0, "synth: empty split");
  int prefix = (sequence_length + 3) / 4;
  require(prefix + rationale_span_length <= sequence_length - 3,
          "synth: sequence too short for prefix + span");
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

struct RawLine {
  long lineno;
  double rating;
  std::vector<std::string> tokens;
};

// Returns tokenized lines with the rating of the requested aspect column.
std::vector<RawLine> read_corpus_file(const std::string& path,
                                      const std::string& aspect) {
  std::ifstream f(path);
  require(f.good(), "cannot open corpus file: " + path);
  std::string line;
  long lineno = 0;
  std::vector<std::string> aspects = {"default"};
  bool have_header = false;
  std::vector<RawLine> out;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("#aspects\t", 0) == 0) {
      aspects = split_tabs(line);
      aspects.erase(aspects.begin());  // drop the "#aspects" tag
      have_header = true;
      continue;
    }
    if (!have_header && lineno == 1) {
      // single-column file; the only selectable aspect is "default"
    }
    auto fields = split_tabs(line);
    if (fields.size() != aspects.size() + 1) {
      fail(path + ":" + std::to_string(lineno) + ": expected " +
           std::to_string(aspects.size()) + " rating column(s) + text");
    }
    std::string want = aspect.empty() ? "default" : aspect;
    auto it = std::find(aspects.begin(), aspects.end(), want);
    if (it == aspects.end()) {
      std::string avail;
      for (const auto& a : aspects) avail += (avail.empty() ? "" : ", ") + a;
      fail("unknown aspect '" + want + "' (available: " + avail + ")");
    }
    std::size_t col = static_cast<std::size_t>(it - aspects.begin());
    double rating;
    try {
      std::size_t used = 0;
      rating = std::stod(fields[col], &used);
      require(used == fields[col].size(), "trailing junk");
    } catch (const std::exception&) {
      fail(path + ":" + std::to_string(lineno) + ": malformed rating '" +
           fields[col] + "'");
    }
    RawLine rl;
    rl.lineno = lineno;
    rl.rating = rating;
    rl.tokens = tokenize(fields.back());
    if (rl.tokens.empty()) {
      fail(path + ":" + std::to_string(lineno) + ": empty text");
    }
    out.push_back(std::move(rl));
  }
  return out;
}

// beer: ratings in [0,1], <=0.4 negative, >=0.6 positive, band dropped.
// hotel: integer stars 0..5, <3 negative, >3 positive, exactly 3 dropped.
std::optional<int> binarize(double rating, CorpusFormat format,
                            const std::string& where) {
  if (format == CorpusFormat::beer) {
    require(rating >= 0.0 && rating <= 1.0,
            where + ": beer rating outside [0,1]");
    if (rating <= 0.4) return 0;
    if (rating >= 0.6) return 1;
    return std::nullopt;
  }
  double r = std::round(rating);
  require(r == rating && r >= 0 && r <= 5,
          where + ": hotel rating must be an integer in 0..5");
  if (rating < 3.0) return 0;
  if (rating > 3.0) return 1;
  return std::nullopt;
}

CorpusSplit load_split(const std::string& path, CorpusFormat format,
                       const std::string& aspect, const Vocab& vocab,
                       SplitName name) {
  CorpusSplit split;
  split.split_name = name;
  for (const auto& rl : read_corpus_file(path, aspect)) {
    auto label = binarize(rl.rating, format, path + ":" + std::to_string(rl.lineno));
    if (!label) continue;
    Example e;
    e.label = *label;
    e.example_id = (name == SplitName::train      ? "train-L"
                    : name == SplitName::dev      ? "dev-L"
                                                  : "annotation-L") +
                   std::to_string(rl.lineno);
    for (const auto& tok : rl.tokens) {
      if (static_cast<int>(e.tokens.size()) >= kMaxSequenceLength) break;
      e.tokens.push_back(vocab.lookup(tok));
    }
    split.examples.push_back(std::move(e));
  }
  split.recount(2);
  return split;
}

void attach_gold_masks(const std::string& path, CorpusSplit& split) {
  if (!fs::exists(path)) return;
  std::ifstream f(path);
  require(f.good(), "cannot open annotation file: " + path);
  std::map<std::string, std::vector<std::pair<int, int>>> spans;
  std::string line;
  long lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception&) {
      fail(path + ":" + std::to_string(lineno) + ": malformed JSON");
    }
    require(j.contains("id") && j.contains("rationale"),
            path + ":" + std::to_string(lineno) + ": need id and rationale");
    std::vector<std::pair<int, int>> sp;
    for (const auto& pair : j["rationale"]) {
      require(pair.is_array() && pair.size() == 2,
              path + ":" + std::to_string(lineno) + ": spans are [start,end)");
      sp.emplace_back(pair[0].get<int>(), pair[1].get<int>());
    }
    spans[j["id"].get<std::string>()] = std::move(sp);
  }
  for (auto& e : split.examples) {
    auto it = spans.find(e.example_id);
    if (it == spans.end()) continue;
    std::vector<int> mask(e.tokens.size(), 0);
    for (auto [start, end] : it->second) {
      require(start >= 0 && start < end, "bad span for " + e.example_id);
      for (int t = start; t < end && t < static_cast<int>(mask.size()); ++t)
        mask[static_cast<std::size_t>(t)] = 1;
    }
    e.gold_mask = std::move(mask);
  }
}

// Gathers lexicon boundaries for the planted corpus. Token id layout:
// [0]=pad [1]=oov, shortcut_token_id, the rest split into neutral /
// class-1 span / class-0 span lexicons.
struct SynthLexicons {
  std::vector<int> neutral, pos, neg;
};

SynthLexicons synth_lexicons(const SynthSpec& spec) {
  SynthLexicons lex;
  std::vector<int> usable;
  for (int id = 2; id < spec.vocab_size; ++id)
    if (id != spec.shortcut_token_id) usable.push_back(id);
  std::size_t n = usable.size();
  std::size_t n_neutral = n / 2;
  std::size_t n_pos = (n - n_neutral) / 2;
  lex.neutral.assign(usable.begin(), usable.begin() + static_cast<long>(n_neutral));
  lex.pos.assign(usable.begin() + static_cast<long>(n_neutral),
                 usable.begin() + static_cast<long>(n_neutral + n_pos));
  lex.neg.assign(usable.begin() + static_cast<long>(n_neutral + n_pos), usable.end());
  require(!lex.neutral.empty() && !lex.pos.empty() && !lex.neg.empty(),
          "synth: vocabulary too small for lexicons");
  return lex;
}

CorpusSplit synth_split(const SynthSpec& spec, SplitName name, int n,
                        std::mt19937_64& rng) {
  const SynthLexicons lex = synth_lexicons(spec);
  const int prefix = (spec.sequence_length + 3) / 4;
  require(prefix >= 2, "synth: sequence_length too short for a shortcut prefix");
  CorpusSplit split;
  split.split_name = name;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    Example e;
    e.label = i % 2;  // alternate for exact balance
    int len = spec.sequence_length - static_cast<int>(rng() % 4);
    int span_lo = prefix;
    int span_hi = len - spec.rationale_span_length;  // inclusive
    require(span_hi >= span_lo, "synth: no room for span");
    int span_start = span_lo + static_cast<int>(rng() % static_cast<std::uint64_t>(span_hi - span_lo + 1));
    e.tokens.resize(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t)
      e.tokens[static_cast<std::size_t>(t)] =
          lex.neutral[rng() % lex.neutral.size()];
    const auto& span_lex = e.label == 1 ? lex.pos : lex.neg;
    for (int t = span_start; t < span_start + spec.rationale_span_length; ++t)
      e.tokens[static_cast<std::size_t>(t)] = span_lex[rng() % span_lex.size()];
    // Shortcut lives somewhere in the prefix window but never at position 0,
    // which stays pure noise so a mask on it carries no token information.
    if (e.label == 1 && unif(rng) < spec.shortcut_correlation) {
      int pos = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(prefix - 1));
      e.tokens[static_cast<std::size_t>(pos)] = spec.shortcut_token_id;
    }
    if (name == SplitName::annotation) {
      std::vector<int> mask(static_cast<std::size_t>(len), 0);
      for (int t = span_start; t < span_start + spec.rationale_span_length; ++t)
        mask[static_cast<std::size_t>(t)] = 1;
      e.gold_mask = std::move(mask);
    }
    const char* tag = name == SplitName::train      ? "train-L"
                      : name == SplitName::dev      ? "dev-L"
                                                    : "annotation-L";
    e.example_id = tag + std::to_string(i + 1);
    split.examples.push_back(std::move(e));
  }
  split.recount(2);
  return split;
}

}  // namespace

CorpusTriple load_labeled_corpus(const std::string& dir, CorpusFormat format,
                                 const std::string& aspect, const Vocab& vocab) {
  CorpusTriple triple;
  triple.train = load_split(dir + "/train.txt", format, aspect, vocab, SplitName::train);
  triple.dev = load_split(dir + "/dev.txt", format, aspect, vocab, SplitName::dev);
  triple.annotation =
      load_split(dir + "/annotation.txt", format, aspect, vocab, SplitName::annotation);
  attach_gold_masks(dir + "/annotation.spans.jsonl", triple.annotation);
  return triple;
}

CorpusTriple load_labeled_corpus(const std::string& dir, CorpusFormat format,
                                 const std::string& aspect, int min_freq,
                                 Vocab& vocab_out) {
  std::vector<std::vector<std::string>> docs;
  for (const char* split : {"/train.txt", "/dev.txt"}) {
    for (const auto& rl : read_corpus_file(dir + split, aspect))
      docs.push_back(rl.tokens);
  }
  vocab_out = build_vocab(docs, min_freq);
  return load_labeled_corpus(dir, format, aspect, vocab_out);
}

CorpusSplit balance_corpus(const CorpusSplit& split, std::uint64_t seed) {
  int num_classes = static_cast<int>(split.class_counts.size());
  require(num_classes >= 2, "balance: need class counts");
  long min_count = *std::min_element(split.class_counts.begin(), split.class_counts.end());
  for (int cls = 0; cls < num_classes; ++cls) {
    require(split.class_counts[static_cast<std::size_t>(cls)] > 0,
            "balance: class " + std::to_string(cls) + " has no examples");
  }
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < split.examples.size(); ++i)
    by_class[static_cast<std::size_t>(split.examples[i].label)].push_back(i);

  auto rng = substream(seed, "balance");
  std::vector<std::size_t> keep;
  for (auto& indices : by_class) {
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(static_cast<std::size_t>(min_count));
    keep.insert(keep.end(), indices.begin(), indices.end());
  }
  std::sort(keep.begin(), keep.end());  // preserve original order

  CorpusSplit out;
  out.split_name = split.split_name;
  for (auto i : keep) out.examples.push_back(split.examples[i]);
  out.recount(num_classes);
  return out;
}

Vocab build_vocab(const std::vector<std::vector<std::string>>& documents,
                  int min_freq) {
  std::map<std::string, long> freq;
  std::vector<std::string> order;  // first-occurrence order
  for (const auto& doc : documents) {
    for (const auto& tok : doc) {
      if (freq[tok]++ == 0) order.push_back(tok);
    }
  }
  Vocab v;
  v.token_to_id[kPadToken] = kPadId;
  v.token_to_id[kOovToken] = kOovId;
  v.id_to_token = {kPadToken, kOovToken};
  for (const auto& tok : order) {
    if (freq[tok] < min_freq) continue;
    v.token_to_id[tok] = v.size();
    v.id_to_token.push_back(tok);
  }
  return v;
}

EmbeddingTable load_embeddings(const std::string& path, const Vocab& vocab,
                               OovPolicy policy, std::uint64_t seed) {
  std::ifstream f(path);
  require(f.good(), "cannot open embedding file: " + path);
  std::string line;
  long row = 0;
  int dim = -1;
  std::map<std::string, std::vector<double>> file_vecs;
  while (std::getline(f, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::string tok;
    iss >> tok;
    std::vector<double> vals;
    double x;
    while (iss >> x) vals.push_back(x);
    if (dim < 0) {
      require(!vals.empty(), path + ": first row has no values");
      dim = static_cast<int>(vals.size());
    }
    if (static_cast<int>(vals.size()) != dim) {
      fail(path + ": row " + std::to_string(row) + " has " +
           std::to_string(vals.size()) + " values, expected " + std::to_string(dim));
    }
    file_vecs[tok] = std::move(vals);
  }
  require(dim > 0, path + ": empty embedding file");

  EmbeddingTable table;
  table.dimension = dim;
  table.oov_policy = policy;
  table.vectors = Eigen::MatrixXd::Zero(dim, vocab.size());
  auto rng = substream(seed, "embeddings.oov");
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  for (int id = 0; id < vocab.size(); ++id) {
    const std::string& tok = vocab.id_to_token[static_cast<std::size_t>(id)];
    auto it = file_vecs.find(tok);
    if (it != file_vecs.end()) {
      for (int d = 0; d < dim; ++d) table.vectors(d, id) = it->second[static_cast<std::size_t>(d)];
    } else if (id != kPadId && policy == OovPolicy::random_seeded) {
      for (int d = 0; d < dim; ++d) table.vectors(d, id) = dist(rng);
    }
    // pad stays zero; zero policy leaves the column at zero
  }
  return table;
}

EmbeddingTable random_embeddings(int dimension, int vocab_size,
                                 std::uint64_t seed) {
  EmbeddingTable table;
  table.dimension = dimension;
  table.oov_policy = OovPolicy::random_seeded;
  table.vectors = Eigen::MatrixXd::Zero(dimension, vocab_size);
  auto rng = substream(seed, "embeddings.random");
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (int id = 1; id < vocab_size; ++id)  // pad column stays zero
    for (int d = 0; d < dimension; ++d) table.vectors(d, id) = dist(rng);
  return table;
}

CorpusTriple synth_planted(const SynthSpec& spec) {
  spec.validate();
  CorpusTriple triple;
  auto rng_train = substream(spec.seed, "synth.train");
  auto rng_dev = substream(spec.seed, "synth.dev");
  auto rng_ann = substream(spec.seed, "synth.annotation");
  triple.train = synth_split(spec, SplitName::train, spec.n_train, rng_train);
  triple.dev = synth_split(spec, SplitName::dev, spec.n_dev, rng_dev);
  triple.annotation = synth_split(spec, SplitName::annotation, spec.n_annotation, rng_ann);
  return triple;
}

std::string synth_token_string(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "w%03d", id);
  return buf;
}

Vocab synth_vocab(const SynthSpec& spec) {
  Vocab v;
  v.token_to_id[kPadToken] = kPadId;
  v.token_to_id[kOovToken] = kOovId;
  v.id_to_token = {kPadToken, kOovToken};
  for (int id = 2; id < spec.vocab_size; ++id) {
    v.token_to_id[synth_token_string(id)] = id;
    v.id_to_token.push_back(synth_token_string(id));
  }
  return v;
}

void write_split(const std::string& path, const CorpusSplit& split,
                 const Vocab& vocab) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), "cannot write corpus file: " + path);
  for (const auto& e : split.examples) {
    f << (e.label == 1 ? "1.00" : "0.00") << '\t';
    for (std::size_t t = 0; t < e.tokens.size(); ++t) {
      if (t) f << ' ';
      f << vocab.id_to_token[static_cast<std::size_t>(e.tokens[t])];
    }
    f << '\n';
  }
  require(f.good(), "write failed: " + path);
}

void write_annotation_spans(const std::string& path, const CorpusSplit& split) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), "cannot write annotation file: " + path);
  long k = 0;
  for (const auto& e : split.examples) {
    ++k;
    if (!e.gold_mask) continue;
    json spans = json::array();
    const auto& m = *e.gold_mask;
    std::size_t t = 0;
    while (t < m.size()) {
      if (m[t] == 0) { ++t; continue; }
      std::size_t start = t;
      while (t < m.size() && m[t] == 1) ++t;
      spans.push_back({start, t});
    }
    json j = {{"id", "annotation-L" + std::to_string(k)}, {"rationale", spans}};
    f << j.dump() << '\n';
  }
  require(f.good(), "write failed: " + path);
}

void write_triple(const std::string& dir, const CorpusTriple& triple,
                  const Vocab& vocab) {
  fs::create_directories(dir);
  write_split(dir + "/train.txt", triple.train, vocab);
  write_split(dir + "/dev.txt", triple.dev, vocab);
  write_split(dir + "/annotation.txt", triple.annotation, vocab);
  write_annotation_spans(dir + "/annotation.spans.jsonl", triple.annotation);
}

}  // namespace dar::corpus
