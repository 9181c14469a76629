#include "dar/dar.h"

#include <cstring>
#include <string>

#include "../core/pipeline.hpp"

struct dar_ctx {
  std::string out_root;
  int threads = 1;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* p = new char[s.size() + 1];
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void set_out(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

dar_status failure(dar_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <typename Fn>
dar_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const dar::Error& e) {
    return failure(DAR_ERR_RUNTIME, e.what());
  } catch (const std::exception& e) {
    return failure(DAR_ERR_RUNTIME, e.what());
  }
}

}  // namespace

extern "C" {

const char* dar_version(void) { return dar::pipeline::kVersion; }

const char* dar_last_error(void) { return g_last_error.c_str(); }

void dar_string_free(char* s) { delete[] s; }

dar_status dar_ctx_create(const char* out_root, int threads, dar_ctx** out) {
  if (!out) return failure(DAR_ERR_INVALID_ARGUMENT, "out is NULL");
  if (threads < 1) return failure(DAR_ERR_INVALID_ARGUMENT, "threads must be >= 1");
  auto* ctx = new dar_ctx;
  ctx->out_root = out_root && *out_root ? out_root
                                        : dar::pipeline::default_out_root();
  ctx->threads = threads;
  *out = ctx;
  return DAR_OK;
}

void dar_ctx_destroy(dar_ctx* ctx) { delete ctx; }

dar_status dar_preset_config(const char* name, char** out_json) {
  if (!name) return failure(DAR_ERR_INVALID_ARGUMENT, "name is NULL");
  return guarded([&] {
    std::string doc;
    try {
      doc = dar::pipeline::preset_config(name);
    } catch (const dar::Error& e) {
      return failure(DAR_ERR_CONFIG, e.what());
    }
    set_out(out_json, doc);
    return DAR_OK;
  });
}

dar_status dar_preset_names(char** out_text) {
  return guarded([&] {
    std::string text;
    for (const auto& n : dar::pipeline::preset_names()) text += n + "\n";
    set_out(out_text, text);
    return DAR_OK;
  });
}

dar_status dar_run(dar_ctx* ctx, const char* config_json, int64_t seed_override,
                   char** out_run_dir, char** out_metrics_json) {
  if (!ctx) return failure(DAR_ERR_INVALID_ARGUMENT, "ctx is NULL");
  if (!config_json) return failure(DAR_ERR_INVALID_ARGUMENT, "config_json is NULL");
  return guarded([&] {
    dar::pipeline::RunConfig cfg;
    try {
      cfg = dar::pipeline::parse_run_config(config_json);
    } catch (const std::exception& e) {
      return failure(DAR_ERR_CONFIG, e.what());
    }
    if (seed_override >= 0)
      cfg.train.seed = static_cast<std::uint64_t>(seed_override);
    auto outcome =
        dar::pipeline::cmd_run(cfg, ctx->out_root, ctx->threads, "api");
    set_out(out_run_dir, outcome.run_dir);
    set_out(out_metrics_json, outcome.metrics_json);
    return DAR_OK;
  });
}

dar_status dar_synth(dar_ctx* ctx, const char* spec_json, int64_t seed_override,
                     const char* out_dir, char** out_dir_used) {
  if (!ctx) return failure(DAR_ERR_INVALID_ARGUMENT, "ctx is NULL");
  if (!out_dir || !*out_dir)
    return failure(DAR_ERR_INVALID_ARGUMENT, "out_dir is NULL or empty");
  return guarded([&] {
    dar::corpus::SynthSpec spec;
    try {
      if (spec_json && *spec_json)
        spec = dar::pipeline::parse_synth_spec(spec_json);
    } catch (const std::exception& e) {
      return failure(DAR_ERR_CONFIG, e.what());
    }
    if (seed_override >= 0) spec.seed = static_cast<std::uint64_t>(seed_override);
    std::string used = dar::pipeline::cmd_synth(spec, out_dir);
    set_out(out_dir_used, used);
    return DAR_OK;
  });
}

dar_status dar_verify(dar_ctx* ctx, long trials_per_suite, uint64_t seed,
                      char** out_json) {
  if (!ctx) return failure(DAR_ERR_INVALID_ARGUMENT, "ctx is NULL");
  if (trials_per_suite < 1)
    return failure(DAR_ERR_INVALID_ARGUMENT, "trials_per_suite must be >= 1");
  return guarded([&] {
    auto summary = dar::pipeline::cmd_verify(trials_per_suite, seed);
    set_out(out_json, summary.json);
    if (summary.failures > 0)
      return failure(DAR_ERR_RUNTIME,
                     std::to_string(summary.failures) +
                         " verification trial(s) violated their bound");
    return DAR_OK;
  });
}

dar_status dar_report(dar_ctx* ctx, const char* const* run_dirs, int n,
                      char** out_csv) {
  if (!ctx) return failure(DAR_ERR_INVALID_ARGUMENT, "ctx is NULL");
  if (!run_dirs || n < 1)
    return failure(DAR_ERR_INVALID_ARGUMENT, "run_dirs is empty");
  return guarded([&] {
    std::vector<std::string> dirs;
    for (int i = 0; i < n; ++i) {
      if (!run_dirs[i])
        return failure(DAR_ERR_INVALID_ARGUMENT, "run_dirs entry is NULL");
      dirs.emplace_back(run_dirs[i]);
    }
    std::string csv;
    try {
      csv = dar::pipeline::cmd_report(dirs);
    } catch (const dar::Error& e) {
      return failure(DAR_ERR_IO, e.what());
    }
    set_out(out_csv, csv);
    return DAR_OK;
  });
}

}  // extern "C"
