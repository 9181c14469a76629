// Command-line front end. Talks to the core only through the C API.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dar/dar.h"

namespace {

struct Freer {
  char* p = nullptr;
  ~Freer() { dar_string_free(p); }
};

int die(const char* what) {
  std::cerr << "error: " << what << ": " << dar_last_error() << "\n";
  return 1;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f.good()) {
    std::cerr << "error: cannot read " << path << "\n";
    std::exit(1);
  }
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct CtxGuard {
  dar_ctx* ctx = nullptr;
  ~CtxGuard() { dar_ctx_destroy(ctx); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective rationalization toolkit (RNP and DAR games)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dar_version()));

  std::string config_path, preset, out, report_out;
  std::int64_t seed = -1;
  int threads = 1;
  long trials = 10000;
  std::uint64_t verify_seed = 1;
  std::vector<std::string> run_dirs;

  auto* run = app.add_subcommand("run", "Train and evaluate one configuration");
  run->add_option("--config", config_path, "JSON config file");
  run->add_option("--preset", preset, "Built-in preset name");
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out, "Output root (default: $DAR_OUT_ROOT or runs/)");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--config", config_path, "JSON spec file");
  synth->add_option("--preset", preset, "Take the corpus parameters from this preset");
  synth->add_option("--seed", seed, "Override the corpus seed");
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--threads", threads, "Worker threads");

  auto* verify = app.add_subcommand(
      "verify", "Check the information-theoretic identities by enumeration");
  verify->add_option("--trials", trials, "Trials per suite")
      ->check(CLI::PositiveNumber);
  verify->add_option("--seed", verify_seed, "Random seed");
  verify->add_option("--out", out, "Write the JSON summary here");
  verify->add_option("--threads", threads, "Worker threads");

  auto* report = app.add_subcommand("report", "Collect metrics across runs");
  report->add_option("dirs", run_dirs, "Run directories")->required();
  report->add_option("--out", report_out, "Write the CSV here");

  auto* presets = app.add_subcommand("presets", "List built-in presets");

  CLI11_PARSE(app, argc, argv);

  CtxGuard g;
  const char* root = out.empty() ? nullptr : out.c_str();
  if (dar_ctx_create(run->parsed() ? root : nullptr, threads, &g.ctx) != DAR_OK)
    return die("context");

  if (presets->parsed()) {
    Freer names;
    if (dar_preset_names(&names.p) != DAR_OK) return die("presets");
    std::cout << names.p;
    return 0;
  }

  auto config_text = [&]() -> std::string {
    if (!preset.empty() && !config_path.empty()) {
      std::cerr << "error: give --config or --preset, not both\n";
      std::exit(1);
    }
    if (!preset.empty()) {
      Freer doc;
      if (dar_preset_config(preset.c_str(), &doc.p) != DAR_OK) {
        die("preset");
        std::exit(1);
      }
      return doc.p;
    }
    if (!config_path.empty()) return slurp(config_path);
    return "{}";
  };

  if (run->parsed()) {
    Freer dir, metrics;
    if (dar_run(g.ctx, config_text().c_str(), seed, &dir.p, &metrics.p) != DAR_OK)
      return die("run");
    std::cout << "run dir: " << dir.p << "\n" << metrics.p;
    return 0;
  }

  if (synth->parsed()) {
    std::string spec = "{}";
    if (!preset.empty() || !config_path.empty()) {
      // Pull the data.synth block when the document is a full run config.
      std::string doc = config_text();
      auto pos = doc.find("\"synth\"");
      spec = pos == std::string::npos ? doc : [&] {
        auto open = doc.find('{', pos);
        int depth = 0;
        for (auto i = open; i < doc.size(); ++i) {
          if (doc[i] == '{') ++depth;
          if (doc[i] == '}' && --depth == 0)
            return doc.substr(open, i - open + 1);
        }
        return doc;
      }();
    }
    Freer used;
    if (dar_synth(g.ctx, spec.c_str(), seed, out.c_str(), &used.p) != DAR_OK)
      return die("synth");
    std::cout << "wrote corpus to " << used.p << "\n";
    return 0;
  }

  if (verify->parsed()) {
    Freer summary;
    dar_status st = dar_verify(g.ctx, trials, verify_seed, &summary.p);
    if (summary.p) {
      if (out.empty()) {
        std::cout << summary.p;
      } else {
        std::ofstream f(out, std::ios::binary);
        f << summary.p;
      }
    }
    if (st != DAR_OK) return die("verify");
    return 0;
  }

  if (report->parsed()) {
    std::vector<const char*> ptrs;
    for (const auto& d : run_dirs) ptrs.push_back(d.c_str());
    Freer csv;
    if (dar_report(g.ctx, ptrs.data(), static_cast<int>(ptrs.size()), &csv.p) !=
        DAR_OK)
      return die("report");
    if (report_out.empty()) {
      std::cout << csv.p;
    } else {
      std::ofstream f(report_out, std::ios::binary);
      f << csv.p;
    }
    return 0;
  }

  return 0;
}
