#include "pipeline.hpp"

#include <chrono>
#include <set>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "eval.hpp"
#include "infotheory.hpp"

namespace dar::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key))
      fail("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

corpus::SynthSpec parse_synth(const json& j) {
  check_keys(j, "data.synth",
             {"vocab_size", "sequence_length", "rationale_span_length",
              "shortcut_token_id", "shortcut_correlation", "n_train", "n_dev",
              "n_annotation", "seed"});
  corpus::SynthSpec s;
  s.vocab_size = j.value("vocab_size", s.vocab_size);
  s.sequence_length = j.value("sequence_length", s.sequence_length);
  s.rationale_span_length = j.value("rationale_span_length", s.rationale_span_length);
  s.shortcut_token_id = j.value("shortcut_token_id", s.shortcut_token_id);
  s.shortcut_correlation = j.value("shortcut_correlation", s.shortcut_correlation);
  s.n_train = j.value("n_train", s.n_train);
  s.n_dev = j.value("n_dev", s.n_dev);
  s.n_annotation = j.value("n_annotation", s.n_annotation);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

std::string write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), "cannot write " + path);
  f << content;
  require(f.good(), "write failed: " + path);
  return path;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::string iso_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

namespace {
json parse_json_or_fail(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const std::exception& e) {
    fail(std::string(what) + ": malformed JSON: " + e.what());
  }
}
}  // namespace

corpus::SynthSpec parse_synth_spec(const std::string& json_text) {
  return parse_synth(parse_json_or_fail(json_text, "synth config"));
}

RunConfig parse_run_config(const std::string& json_text) {
  json j = parse_json_or_fail(json_text, "run config");
  RunConfig cfg;
  if (j.contains("name")) {
    cfg.name = j["name"].get<std::string>();
    j.erase("name");
  }
  if (j.contains("data")) {
    const json& d = j["data"];
    check_keys(d, "data",
               {"kind", "synth", "dir", "format", "aspect", "min_freq",
                "embeddings", "balance"});
    std::string kind = d.value("kind", std::string("synth"));
    if (kind == "synth") {
      cfg.data.kind = DataConfig::Kind::synth;
      if (d.contains("synth")) cfg.data.synth = parse_synth(d["synth"]);
    } else if (kind == "files") {
      cfg.data.kind = DataConfig::Kind::files;
      cfg.data.dir = d.value("dir", std::string());
      require(!cfg.data.dir.empty(), "config: data.dir required for kind=files");
      std::string format = d.value("format", std::string("beer"));
      if (format == "beer") cfg.data.format = corpus::CorpusFormat::beer;
      else if (format == "hotel") cfg.data.format = corpus::CorpusFormat::hotel;
      else fail("config: data.format must be beer|hotel");
      cfg.data.aspect = d.value("aspect", std::string());
      cfg.data.min_freq = d.value("min_freq", 1);
      cfg.data.embeddings = d.value("embeddings", std::string());
      cfg.data.balance = d.value("balance", true);
    } else {
      fail("config: data.kind must be synth|files");
    }
    j.erase("data");
  }
  cfg.train = training::parse_config(j.dump());
  return cfg;
}

std::string run_config_json(const RunConfig& cfg) {
  json j = json::parse(training::config_json(cfg.train));
  json d;
  if (cfg.data.kind == DataConfig::Kind::synth) {
    const auto& s = cfg.data.synth;
    d = {{"kind", "synth"},
         {"synth",
          {{"vocab_size", s.vocab_size},
           {"sequence_length", s.sequence_length},
           {"rationale_span_length", s.rationale_span_length},
           {"shortcut_token_id", s.shortcut_token_id},
           {"shortcut_correlation", s.shortcut_correlation},
           {"n_train", s.n_train},
           {"n_dev", s.n_dev},
           {"n_annotation", s.n_annotation},
           {"seed", s.seed}}}};
  } else {
    d = {{"kind", "files"},
         {"dir", cfg.data.dir},
         {"format", cfg.data.format == corpus::CorpusFormat::beer ? "beer" : "hotel"},
         {"aspect", cfg.data.aspect},
         {"min_freq", cfg.data.min_freq},
         {"embeddings", cfg.data.embeddings},
         {"balance", cfg.data.balance}};
  }
  j["data"] = d;
  j["name"] = cfg.name;
  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& cfg) {
  return hex64(fnv1a(run_config_json(cfg))).substr(0, 8);
}

namespace {

// Shared synthetic-corpus settings for the skew experiment presets. The
// two families use different corpora: the skewed-generator protocol wants a
// perfectly correlated shortcut on a small vocabulary, the skewed-predictor
// protocol a richer span lexicon with a strong but imperfect shortcut.
json preset_base(const std::string& mode, bool generator_skew) {
  json j{
      {"mode", mode},
      {"learning_rate", 1e-3},
      {"batch_size", 20},
      {"max_epochs", generator_skew ? 20 : 15},
      {"patience", generator_skew ? 20 : 15},
      {"regularizer",
       {{"alpha", generator_skew && mode == "rnp" ? 0.05 : 0.2},
        {"lambda1", 1.0},
        {"lambda2", 0.02}}},
      {"model", {{"embed_dim", 32}, {"hidden", 32}}},
      {"pretrain", {{"max_epochs", 12}, {"batch_size", 32}}},
      {"pretrain_dropout", 0.3},
      {"data",
       {{"kind", "synth"},
        {"synth",
         {{"vocab_size", generator_skew ? 64 : 128},
          {"sequence_length", 20},
          {"rationale_span_length", 4},
          {"shortcut_correlation", generator_skew ? 1.0 : 0.9},
          {"n_train", generator_skew ? 600 : 2000},
          {"n_dev", 200},
          {"n_annotation", 200},
          {"seed", 11}}}}}};
  return j;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names = {"rnp-base", "dar-base"};
  for (const char* mode : {"rnp", "dar"}) {
    for (int t : {60, 65, 70, 75}) {
      std::string n = "skew-generator-" + std::to_string(t);
      names.push_back(std::string(mode) == "dar" ? n : "rnp-" + n);
    }
    for (int k : {10, 15, 20}) {
      std::string n = "skew-predictor-" + std::to_string(k);
      names.push_back(std::string(mode) == "dar" ? n : "rnp-" + n);
    }
  }
  return names;
}

std::string preset_config(const std::string& name) {
  std::string mode = "dar";
  std::string rest = name;
  if (rest.rfind("rnp-", 0) == 0) {
    mode = "rnp";
    rest = rest.substr(4);
  } else if (rest.rfind("dar-", 0) == 0) {
    rest = rest.substr(4);
  }
  bool generator_skew = rest.rfind("skew-generator-", 0) == 0;
  json j = preset_base(mode, generator_skew);
  j["name"] = name;
  if (rest == "base") {
    // no skew
  } else if (generator_skew) {
    int t = std::stoi(rest.substr(15));
    j["skew"] = {{"kind", "skew_generator"}, {"threshold", t / 100.0}};
  } else if (rest.rfind("skew-predictor-", 0) == 0) {
    int k = std::stoi(rest.substr(15));
    j["skew"] = {{"kind", "skew_predictor"}, {"k", k}};
  } else {
    std::string avail;
    for (const auto& n : preset_names()) avail += (avail.empty() ? "" : ", ") + n;
    fail("unknown preset '" + name + "' (available: " + avail + ")");
  }
  return j.dump(2) + "\n";
}

LoadedData load_data(const RunConfig& cfg) {
  LoadedData out;
  if (cfg.data.kind == DataConfig::Kind::synth) {
    out.triple = corpus::synth_planted(cfg.data.synth);
    out.vocab = corpus::synth_vocab(cfg.data.synth);
    out.table = corpus::random_embeddings(cfg.train.model.embed_dim,
                                          cfg.data.synth.vocab_size,
                                          cfg.data.synth.seed);
  } else {
    out.triple = corpus::load_labeled_corpus(cfg.data.dir, cfg.data.format,
                                             cfg.data.aspect, cfg.data.min_freq,
                                             out.vocab);
    if (cfg.data.embeddings.empty()) {
      out.table = corpus::random_embeddings(cfg.train.model.embed_dim,
                                            out.vocab.size(), cfg.train.seed);
    } else {
      out.table = corpus::load_embeddings(cfg.data.embeddings, out.vocab,
                                          corpus::OovPolicy::random_seeded,
                                          cfg.train.seed);
      require(out.table.dimension == cfg.train.model.embed_dim,
              "embedding dimension does not match model.embed_dim");
    }
  }
  if (cfg.data.balance)
    out.triple.train = corpus::balance_corpus(out.triple.train, cfg.train.seed);
  return out;
}

std::string default_out_root() {
  const char* env = std::getenv(kOutRootEnv);
  return env && *env ? env : "runs";
}

namespace {

std::string fresh_run_dir(const std::string& out_root, const std::string& stem) {
  fs::create_directories(out_root);
  std::string base = out_root + "/" + stem;
  std::string dir = base;
  for (int k = 2; fs::exists(dir); ++k) dir = base + "-" + std::to_string(k);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

RunOutcome cmd_run(const RunConfig& cfg, const std::string& out_root, int threads,
                   const std::string& config_source) {
  require(threads >= 1, "threads must be >= 1");
  cfg.train.validate();
  training::set_global_determinism(cfg.train.seed);
  std::string hash = config_hash(cfg);
  std::string started = iso_timestamp();
  RunOutcome out;
  out.run_dir = fresh_run_dir(
      out_root, "run-" + hash + "-s" + std::to_string(cfg.train.seed));

  auto data = load_data(cfg);

  std::shared_ptr<game::Predictor> discriminator;
  training::TrainReport pretrain_report;
  if (cfg.train.mode == training::Mode::dar) {
    auto pre = training::pretrain_discriminator(data.triple, data.table, cfg.train);
    discriminator = pre.discriminator;
    pretrain_report = pre.report;
    write_file(out.run_dir + "/pretrain_report.json",
               training::report_json(pretrain_report));
  }

  std::shared_ptr<game::Generator> init_gen;
  std::shared_ptr<game::Predictor> init_pred;
  double pre_acc = 0.0;
  if (cfg.train.skew.kind == training::SkewKind::skew_predictor) {
    init_pred = training::skew_predictor_init(data.triple, data.table,
                                              cfg.train.skew.k, cfg.train);
  } else if (cfg.train.skew.kind == training::SkewKind::skew_generator) {
    auto skew = training::skew_generator_init(data.triple, data.table,
                                              cfg.train.skew.threshold, cfg.train);
    init_gen = skew.generator;
    pre_acc = skew.pre_acc;
  }

  auto result = training::train_joint(data.triple, data.table, cfg.train,
                                      discriminator, init_gen, init_pred);
  result.report.pre_acc = pre_acc;
  write_file(out.run_dir + "/report.json", training::report_json(result.report));

  std::uint64_t eval_seed = cfg.train.seed ^ 0x6a09e667f3bcc909ull;
  auto metrics = eval::full_metrics(result.game, data.table,
                                    data.triple.annotation, eval_seed);
  auto shift = eval::shift_report(result.game, data.table,
                                  data.triple.annotation, eval_seed);
  out.metrics_json = eval::metrics_json(metrics, shift, cfg.train.seed, hash);
  write_file(out.run_dir + "/metrics.json", out.metrics_json);
  write_file(out.run_dir + "/metrics.csv",
             eval::metrics_csv_header() +
                 eval::metrics_csv_row(cfg.name.empty() ? hash : cfg.name, metrics,
                                       shift, cfg.train.seed));
  write_file(out.run_dir + "/acc_bars.svg",
             eval::accuracy_bar_svg({cfg.name.empty() ? "run" : cfg.name},
                                    {shift.acc_rationale}, {shift.acc_fulltext}));
  write_file(out.run_dir + "/config.json", run_config_json(cfg));

  json meta = {{"vocab_size", data.vocab.size()},
               {"num_classes", data.triple.num_classes},
               {"embed_dim", cfg.train.model.embed_dim},
               {"hidden", cfg.train.model.hidden},
               {"config_hash", hash}};
  json disc_meta = meta;
  disc_meta["frozen"] = true;
  nn::save_checkpoint(out.run_dir + "/generator.ckpt",
                      result.game.generator->params, meta.dump());
  nn::save_checkpoint(out.run_dir + "/predictor.ckpt",
                      result.game.predictor->params, meta.dump());
  if (discriminator)
    nn::save_checkpoint(out.run_dir + "/discriminator.ckpt",
                        discriminator->params, disc_meta.dump());

  json manifest = {{"command", "run"},
                   {"config_hash", hash},
                   {"seed", cfg.train.seed},
                   {"config_source", config_source},
                   {"output_dir", out.run_dir},
                   {"toolkit_version", kVersion},
                   {"started", started},
                   {"finished", iso_timestamp()}};
  write_file(out.run_dir + "/manifest.json", manifest.dump(2) + "\n");
  return out;
}

std::string cmd_synth(const corpus::SynthSpec& spec, const std::string& out_dir) {
  auto triple = corpus::synth_planted(spec);
  auto vocab = corpus::synth_vocab(spec);
  corpus::write_triple(out_dir, triple, vocab);
  json manifest = {{"command", "synth"},
                   {"seed", spec.seed},
                   {"output_dir", out_dir},
                   {"toolkit_version", kVersion},
                   {"finished", iso_timestamp()}};
  write_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
  return out_dir;
}

VerifySummary cmd_verify(long trials, std::uint64_t seed) {
  require(trials >= 1, "verify: trials must be >= 1");
  auto suites = infotheory::run_all_suites(trials, seed);
  VerifySummary out;
  json arr = json::array();
  for (const auto& s : suites) {
    out.failures += s.failures;
    arr.push_back({{"suite", s.suite},
                   {"trials", s.trials},
                   {"failures", s.failures},
                   {"max_violation", s.max_violation}});
  }
  json j = {{"seed", seed},
            {"trials_per_suite", trials},
            {"suites", arr},
            {"total_failures", out.failures}};
  out.json = j.dump(2) + "\n";
  return out;
}

std::string cmd_report(const std::vector<std::string>& run_dirs) {
  std::ostringstream os;
  os << eval::metrics_csv_header();
  for (const auto& dir : run_dirs) {
    json m = json::parse(read_file(dir + "/metrics.json"));
    std::string name = fs::path(dir).filename().string();
    if (fs::exists(dir + "/config.json")) {
      json c = json::parse(read_file(dir + "/config.json"));
      if (c.contains("name") && c["name"].is_string() &&
          !c["name"].get<std::string>().empty())
        name = c["name"].get<std::string>();
    }
    auto num = [&](const char* key) {
      std::ostringstream v;
      if (m[key].is_string()) v << m[key].get<std::string>();
      else v << m[key].get<double>();
      return v.str();
    };
    os << name << ',' << num("S") << ',' << num("Acc") << ',' << num("P") << ','
       << num("R") << ',' << num("F1") << ',' << num("acc_fulltext") << ','
       << num("gap") << ',' << m["seed"].get<std::uint64_t>() << '\n';
  }
  return os.str();
}

}  // namespace pipeline
