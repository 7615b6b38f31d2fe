// Copyright (c) 2026 The mpfkansc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mpfkansc/mpfkansc.h"

#include <algorithm>
#include <cstring>
#include <memory>
#include <mutex>
#include <new>
#include <string>

#include "core/error.hpp"
#include "data/volume.hpp"
#include "model/checkpoint.hpp"
#include "model/model.hpp"
#include "run/commands.hpp"
#include "train/config.hpp"

struct mpk_config {
  mpk::train::TrainConfig cfg;
};
struct mpk_volume {
  mpk::data::Volume vol;
};
struct mpk_dataset {
  std::vector<mpk::data::Volume> vols;
};
struct mpk_model {
  mpk::model::ModelParams params;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_log_mutex;
mpk_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

mpk_status fail(mpk_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

mpk_status status_for(const mpk::Error& e) {
  switch (e.kind()) {
    case mpk::ErrorKind::kUsage:
      return MPK_ERR_USAGE;
    case mpk::ErrorKind::kNumeric:
      return MPK_ERR_NUMERIC;
    default:
      return MPK_ERR_DATA;
  }
}

template <class F>
mpk_status guarded(F&& f) {
  try {
    return f();
  } catch (const mpk::Error& e) {
    return fail(status_for(e), e.what());
  } catch (const std::bad_alloc&) {
    return fail(MPK_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MPK_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MPK_ERR_INTERNAL, "unknown exception");
  }
}

mpk::run::LogFn logger() {
  return [](const std::string& line) {
    std::lock_guard lock(g_log_mutex);
    if (g_log_fn) g_log_fn(line.c_str(), g_log_user);
  };
}

std::optional<std::filesystem::path> opt_path(const char* s) {
  if (!s || !*s) return std::nullopt;
  return std::filesystem::path(s);
}

std::filesystem::path need_path(const char* s, const char* what) {
  if (!s || !*s) throw mpk::UsageError(std::string(what) + " is required");
  return s;
}

mpk_status copy_out(const std::string& text, char* buffer, size_t capacity, size_t* needed) {
  if (needed) *needed = text.size();
  if (buffer && capacity > 0) {
    const size_t n = std::min(capacity - 1, text.size());
    std::memcpy(buffer, text.data(), n);
    buffer[n] = '\0';
  }
  return MPK_OK;
}

#define MPK_REQUIRE(ptr) \
  if (!(ptr)) return fail(MPK_ERR_USAGE, std::string(__func__) + ": " #ptr " is NULL")

}  // namespace

extern "C" {

const char* mpk_version(void) { return "0.1.0"; }
const char* mpk_last_error(void) { return g_last_error.c_str(); }

void mpk_set_log_callback(mpk_log_fn fn, void* user) {
  std::lock_guard lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

mpk_status mpk_config_default(mpk_config** out) {
  MPK_REQUIRE(out);
  return guarded([&] {
    *out = new mpk_config{};
    return MPK_OK;
  });
}

mpk_status mpk_config_load(const char* path, mpk_config** out) {
  MPK_REQUIRE(path);
  MPK_REQUIRE(out);
  return guarded([&] {
    *out = new mpk_config{mpk::train::load_train_config(path)};
    return MPK_OK;
  });
}

mpk_status mpk_config_parse(const char* ini_text, mpk_config** out) {
  MPK_REQUIRE(ini_text);
  MPK_REQUIRE(out);
  return guarded([&] {
    *out = new mpk_config{mpk::train::parse_train_config(ini_text, "<string>")};
    return MPK_OK;
  });
}

mpk_status mpk_config_to_string(const mpk_config* cfg, char* buffer, size_t capacity, size_t* needed) {
  MPK_REQUIRE(cfg);
  return guarded([&] { return copy_out(mpk::train::to_ini(cfg->cfg), buffer, capacity, needed); });
}

void mpk_config_free(mpk_config* cfg) { delete cfg; }

mpk_status mpk_volume_create(size_t d, size_t h, size_t w, const double* data, int label, mpk_volume** out) {
  MPK_REQUIRE(data);
  MPK_REQUIRE(out);
  return guarded([&] {
    if (d == 0 || h == 0 || w == 0) throw mpk::UsageError("mpk_volume_create: dims must be positive");
    if (label != 0 && label != 1) throw mpk::DataError("mpk_volume_create: label must be 0 or 1");
    const size_t n = d * h * w;
    auto v = std::make_unique<mpk_volume>();
    v->vol.subject_id = "volume";
    v->vol.label = label;
    v->vol.group = label == 1 ? "AD" : "CN";
    v->vol.voxels = mpk::Tensor(mpk::Shape{1, d, h, w}, std::vector<double>(data, data + n));
    *out = v.release();
    return MPK_OK;
  });
}

mpk_status mpk_volume_load(const char* path, mpk_volume** out) {
  MPK_REQUIRE(path);
  MPK_REQUIRE(out);
  return guarded([&] {
    *out = new mpk_volume{mpk::data::load_volume(path)};
    return MPK_OK;
  });
}

mpk_status mpk_volume_save(const mpk_volume* vol, const char* path) {
  MPK_REQUIRE(vol);
  MPK_REQUIRE(path);
  return guarded([&] {
    mpk::data::save_volume(path, vol->vol);
    return MPK_OK;
  });
}

mpk_status mpk_volume_dims(const mpk_volume* vol, size_t dims[3]) {
  MPK_REQUIRE(vol);
  MPK_REQUIRE(dims);
  const auto d = vol->vol.dims();
  for (int i = 0; i < 3; ++i) dims[i] = d[i];
  return MPK_OK;
}

mpk_status mpk_volume_label(const mpk_volume* vol, int* label) {
  MPK_REQUIRE(vol);
  MPK_REQUIRE(label);
  *label = vol->vol.label;
  return MPK_OK;
}

const double* mpk_volume_data(const mpk_volume* vol) { return vol ? vol->vol.voxels.data().data() : nullptr; }

void mpk_volume_free(mpk_volume* vol) { delete vol; }

mpk_status mpk_dataset_load(const char* manifest_path, mpk_dataset** out) {
  MPK_REQUIRE(manifest_path);
  MPK_REQUIRE(out);
  return guarded([&] {
    *out = new mpk_dataset{mpk::data::load_dataset(manifest_path)};
    return MPK_OK;
  });
}

size_t mpk_dataset_size(const mpk_dataset* ds) { return ds ? ds->vols.size() : 0; }

mpk_status mpk_dataset_get(const mpk_dataset* ds, size_t index, mpk_volume** out) {
  MPK_REQUIRE(ds);
  MPK_REQUIRE(out);
  if (index >= ds->vols.size()) {
    return fail(MPK_ERR_USAGE, "mpk_dataset_get: index " + std::to_string(index) + " out of range (size " +
                                   std::to_string(ds->vols.size()) + ")");
  }
  return guarded([&] {
    const auto& src = ds->vols[index];
    auto v = std::make_unique<mpk_volume>();
    v->vol = src;
    v->vol.voxels = src.voxels.detach();
    *out = v.release();
    return MPK_OK;
  });
}

void mpk_dataset_free(mpk_dataset* ds) { delete ds; }

mpk_status mpk_model_create(const mpk_config* cfg, uint64_t seed, mpk_model** out) {
  MPK_REQUIRE(out);
  return guarded([&] {
    const auto mc = cfg ? cfg->cfg.model : mpk::model::ModelConfig{};
    *out = new mpk_model{mpk::model::model_init(mc, seed)};
    return MPK_OK;
  });
}

mpk_status mpk_model_load(const char* path, const mpk_config* cfg, mpk_model** out) {
  MPK_REQUIRE(path);
  MPK_REQUIRE(out);
  return guarded([&] {
    const auto mc = cfg ? cfg->cfg.model : mpk::model::ModelConfig{};
    *out = new mpk_model{mpk::model::load_checkpoint(path, mc)};
    return MPK_OK;
  });
}

mpk_status mpk_model_save(const mpk_model* model, const char* path) {
  MPK_REQUIRE(model);
  MPK_REQUIRE(path);
  return guarded([&] {
    mpk::model::save_checkpoint(path, model->params);
    return MPK_OK;
  });
}

mpk_status mpk_model_parameter_count(const mpk_model* model, size_t* count) {
  MPK_REQUIRE(model);
  MPK_REQUIRE(count);
  *count = model->params.parameter_count();
  return MPK_OK;
}

mpk_status mpk_model_predict(const mpk_model* model, const mpk_volume* vol, double* probability) {
  MPK_REQUIRE(model);
  MPK_REQUIRE(vol);
  MPK_REQUIRE(probability);
  return guarded([&] {
    mpk::NoGradGuard no_grad;
    *probability = mpk::model::positive_probability(mpk::model::model_forward(vol->vol.voxels, model->params));
    return MPK_OK;
  });
}

void mpk_model_free(mpk_model* model) { delete model; }

mpk_status mpk_cmd_synth(const mpk_synth_args* args) {
  MPK_REQUIRE(args);
  return guarded([&] {
    mpk::run::SynthArgs a;
    a.spec = need_path(args->spec, "spec");
    a.out = need_path(args->out, "out");
    if (args->n_per_class > 0) a.n_per_class = args->n_per_class;
    mpk::run::cmd_synth(a, logger());
    return MPK_OK;
  });
}

mpk_status mpk_cmd_train(const mpk_train_args* args, char* table, size_t capacity, size_t* needed) {
  MPK_REQUIRE(args);
  return guarded([&] {
    mpk::run::TrainArgs a;
    a.data = need_path(args->data, "data");
    a.config = opt_path(args->config);
    a.out = need_path(args->out, "out");
    if (args->transfer_count > 0 && !args->transfer) throw mpk::UsageError("transfer list is NULL");
    for (size_t i = 0; i < args->transfer_count; ++i) a.transfer.push_back(need_path(args->transfer[i], "transfer"));
    if (args->planes) a.overrides.planes = args->planes;
    if (args->attention) a.overrides.attention = args->attention;
    if (args->epochs > 0) a.overrides.epochs = args->epochs;
    if (args->has_seed) a.overrides.seed = args->seed;
    if (args->threads > 0) a.overrides.threads = args->threads;
    return copy_out(mpk::run::cmd_train(a, logger()), table, capacity, needed);
  });
}

mpk_status mpk_cmd_eval(const mpk_eval_args* args, char* table, size_t capacity, size_t* needed) {
  MPK_REQUIRE(args);
  return guarded([&] {
    mpk::run::EvalArgs a;
    a.ckpt = need_path(args->ckpt, "ckpt");
    a.data = need_path(args->data, "data");
    a.config = opt_path(args->config);
    a.out = opt_path(args->out);
    return copy_out(mpk::run::cmd_eval(a, logger()), table, capacity, needed);
  });
}

mpk_status mpk_cmd_gradcam(const mpk_gradcam_args* args) {
  MPK_REQUIRE(args);
  return guarded([&] {
    mpk::run::GradcamArgs a;
    a.ckpt = need_path(args->ckpt, "ckpt");
    a.data = need_path(args->data, "data");
    a.atlas = need_path(args->atlas, "atlas");
    a.config = opt_path(args->config);
    a.out = need_path(args->out, "out");
    if (args->k > 0) a.k = args->k;
    a.target = args->target;
    if (a.target < -1 || a.target > 1) throw mpk::UsageError("target must be -1, 0 or 1");
    a.post_attention = args->post_attention != 0;
    mpk::run::cmd_gradcam(a, logger());
    return MPK_OK;
  });
}

mpk_status mpk_cmd_gradcheck(const mpk_gradcheck_args* args) {
  MPK_REQUIRE(args);
  return guarded([&] {
    mpk::run::GradcheckArgs a;
    if (args->scale) a.scale = args->scale;
    a.seed = args->seed;
    if (args->fault_op) a.fault_op = std::string(args->fault_op);
    if (args->fault_factor != 0.0) a.fault_factor = args->fault_factor;
    a.report = opt_path(args->report);
    if (mpk::run::cmd_gradcheck(a, logger())) return MPK_OK;
    return fail(MPK_ERR_GRADCHECK, "gradient check failed");
  });
}

mpk_status mpk_cmd_rerun(const char* manifest, const char* out) {
  MPK_REQUIRE(manifest);
  return guarded([&] {
    if (mpk::run::cmd_rerun(manifest, opt_path(out), logger())) return MPK_OK;
    return fail(MPK_ERR_GRADCHECK, "gradient check failed");
  });
}

}  // extern "C"
