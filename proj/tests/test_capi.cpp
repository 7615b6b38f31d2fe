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

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mpfkansc/mpfkansc.h"
#include "temp_dir.hpp"

namespace {

const char* kTinyConfig =
    "[train]\nepochs = 1\nfolds = 2\nbatch_size = 2\n"
    "[model]\nplanes = axial\nattention_hidden = 4\nhead_hidden = 4\n"
    "[augment]\nenabled = false\n";

const char* kTinyPhantom =
    "[phantom]\ndims = 32,32,32\nlesion_center = 8,8,8\nlesion_radius = 4\nseed = 3\n";

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("version and error reporting") {
  CHECK(std::strlen(mpk_version()) > 0);
  mpk_config* cfg = nullptr;
  CHECK(mpk_config_parse("[train]\nepochs = zero\n", &cfg) == MPK_ERR_DATA);
  CHECK(cfg == nullptr);
  CHECK(std::string(mpk_last_error()).find("epochs") != std::string::npos);
  CHECK(mpk_config_parse(nullptr, &cfg) == MPK_ERR_USAGE);
  CHECK(mpk_config_default(nullptr) == MPK_ERR_USAGE);
}

TEST_CASE("config text round trip with buffer sizing") {
  mpk_config* cfg = nullptr;
  REQUIRE(mpk_config_parse(kTinyConfig, &cfg) == MPK_OK);
  size_t needed = 0;
  CHECK(mpk_config_to_string(cfg, nullptr, 0, &needed) == MPK_OK);
  CHECK(needed > 0);
  std::vector<char> small(8);
  CHECK(mpk_config_to_string(cfg, small.data(), small.size(), &needed) == MPK_OK);
  CHECK(std::strlen(small.data()) == 7);
  std::vector<char> buf(needed + 1);
  REQUIRE(mpk_config_to_string(cfg, buf.data(), buf.size(), nullptr) == MPK_OK);
  CHECK(std::string(buf.data()).find("planes = axial") != std::string::npos);
  mpk_config* again = nullptr;
  REQUIRE(mpk_config_parse(buf.data(), &again) == MPK_OK);
  std::vector<char> buf2(needed + 1);
  mpk_config_to_string(again, buf2.data(), buf2.size(), nullptr);
  CHECK(std::string(buf.data()) == std::string(buf2.data()));
  mpk_config_free(cfg);
  mpk_config_free(again);
  mpk_config_free(nullptr);
}

TEST_CASE("volume handles") {
  testutil::TempDir dir("capi_vol");
  std::vector<double> data(2 * 3 * 4);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = 0.5 * static_cast<double>(i);
  mpk_volume* v = nullptr;
  REQUIRE(mpk_volume_create(2, 3, 4, data.data(), 1, &v) == MPK_OK);
  const auto path = (dir / "v.vox").string();
  REQUIRE(mpk_volume_save(v, path.c_str()) == MPK_OK);
  mpk_volume* w = nullptr;
  REQUIRE(mpk_volume_load(path.c_str(), &w) == MPK_OK);
  size_t dims[3] = {};
  int label = -1;
  CHECK(mpk_volume_dims(w, dims) == MPK_OK);
  CHECK(mpk_volume_label(w, &label) == MPK_OK);
  CHECK(dims[0] == 2);
  CHECK(dims[1] == 3);
  CHECK(dims[2] == 4);
  CHECK(label == 1);
  CHECK(std::vector<double>(mpk_volume_data(w), mpk_volume_data(w) + 24) == data);
  CHECK(mpk_volume_create(0, 3, 4, data.data(), 0, &v) == MPK_ERR_USAGE);
  CHECK(mpk_volume_load((dir / "missing.vox").string().c_str(), &w) == MPK_ERR_DATA);
  CHECK(mpk_volume_dims(nullptr, dims) == MPK_ERR_USAGE);
  CHECK(mpk_volume_data(nullptr) == nullptr);
  mpk_volume_free(v);
  mpk_volume_free(w);
}

TEST_CASE("model create, predict, save and load") {
  testutil::TempDir dir("capi_model");
  mpk_config* cfg = nullptr;
  REQUIRE(mpk_config_parse(kTinyConfig, &cfg) == MPK_OK);
  mpk_model* m = nullptr;
  REQUIRE(mpk_model_create(cfg, 4, &m) == MPK_OK);
  size_t count = 0;
  CHECK(mpk_model_parameter_count(m, &count) == MPK_OK);
  CHECK(count > 455280);

  std::vector<double> data(32 * 32 * 32, 0.25);
  mpk_volume* v = nullptr;
  REQUIRE(mpk_volume_create(32, 32, 32, data.data(), 0, &v) == MPK_OK);
  double p = -1.0;
  REQUIRE(mpk_model_predict(m, v, &p) == MPK_OK);
  CHECK(p > 0.0);
  CHECK(p < 1.0);

  const auto path = (dir / "m.mpkc").string();
  REQUIRE(mpk_model_save(m, path.c_str()) == MPK_OK);
  mpk_model* loaded = nullptr;
  REQUIRE(mpk_model_load(path.c_str(), cfg, &loaded) == MPK_OK);
  double q = -1.0;
  REQUIRE(mpk_model_predict(loaded, v, &q) == MPK_OK);
  CHECK(q == p);
  // The default config has three planes; the checkpoint has one.
  mpk_model* wrong = nullptr;
  CHECK(mpk_model_load(path.c_str(), nullptr, &wrong) == MPK_ERR_DATA);
  CHECK(wrong == nullptr);

  mpk_volume* bad = nullptr;
  REQUIRE(mpk_volume_create(30, 32, 32, data.data(), 0, &bad) == MPK_OK);
  CHECK(mpk_model_predict(m, bad, &q) == MPK_ERR_DATA);
  mpk_volume_free(bad);
  mpk_volume_free(v);
  mpk_model_free(m);
  mpk_model_free(loaded);
  mpk_config_free(cfg);
}

TEST_CASE("synth, dataset, train and eval through the command API") {
  testutil::TempDir dir("capi_cmd");
  write(dir / "phantom.ini", kTinyPhantom);
  write(dir / "train.ini", kTinyConfig);
  const auto spec = (dir / "phantom.ini").string(), data_dir = (dir / "data").string();
  mpk_synth_args sa{};
  sa.spec = spec.c_str();
  sa.out = data_dir.c_str();
  sa.n_per_class = 2;
  REQUIRE(mpk_cmd_synth(&sa) == MPK_OK);

  const auto manifest = (dir / "data" / "manifest.tsv").string();
  mpk_dataset* ds = nullptr;
  REQUIRE(mpk_dataset_load(manifest.c_str(), &ds) == MPK_OK);
  CHECK(mpk_dataset_size(ds) == 4);
  mpk_volume* v = nullptr;
  REQUIRE(mpk_dataset_get(ds, 3, &v) == MPK_OK);
  int label = -1;
  mpk_volume_label(v, &label);
  CHECK(label == 1);
  CHECK(mpk_dataset_get(ds, 4, &v) == MPK_ERR_USAGE);
  mpk_volume_free(v);
  mpk_dataset_free(ds);

  int lines = 0;
  mpk_set_log_callback([](const char*, void* user) { ++*static_cast<int*>(user); }, &lines);
  const auto cfg = (dir / "train.ini").string(), run = (dir / "run").string();
  mpk_train_args ta{};
  ta.data = manifest.c_str();
  ta.config = cfg.c_str();
  ta.out = run.c_str();
  size_t needed = 0;
  REQUIRE(mpk_cmd_train(&ta, nullptr, 0, &needed) == MPK_OK);
  mpk_set_log_callback(nullptr, nullptr);
  CHECK(lines > 0);
  CHECK(needed > 0);
  CHECK(std::filesystem::exists(dir / "run" / "fold_1" / "model.mpkc"));
  CHECK(std::filesystem::exists(dir / "run" / "metrics.tsv"));

  const auto ckpt = (dir / "run" / "fold_1" / "model.mpkc").string();
  mpk_eval_args ea{};
  ea.ckpt = ckpt.c_str();
  ea.data = manifest.c_str();
  ea.config = cfg.c_str();
  std::vector<char> table(4096);
  REQUIRE(mpk_cmd_eval(&ea, table.data(), table.size(), &needed) == MPK_OK);
  CHECK(std::string(table.data()).find("auc") != std::string::npos);

  ea.config = nullptr;
  CHECK(mpk_cmd_eval(&ea, nullptr, 0, nullptr) == MPK_ERR_DATA);
  CHECK(mpk_cmd_train(nullptr, nullptr, 0, nullptr) == MPK_ERR_USAGE);
}

TEST_CASE("gradcheck command reports injected faults") {
  testutil::TempDir dir("capi_gc");
  const auto report = (dir / "report.tsv").string();
  mpk_gradcheck_args ga{};
  ga.fault_op = "sigmoid";
  ga.fault_factor = 1.5;
  ga.report = report.c_str();
  CHECK(mpk_cmd_gradcheck(&ga) == MPK_ERR_GRADCHECK);
  std::ifstream in(report);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("FAIL") != std::string::npos);
  ga.scale = "huge";
  CHECK(mpk_cmd_gradcheck(&ga) == MPK_ERR_USAGE);
}
