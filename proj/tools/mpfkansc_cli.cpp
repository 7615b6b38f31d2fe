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

// Command-line front end. Links only the C API.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpfkansc/mpfkansc.h"

namespace {

void print_line(const char* line, void*) {
  std::fprintf(stderr, "%s\n", line);
}

int report(mpk_status s) {
  if (s != MPK_OK) std::fprintf(stderr, "error: %s\n", mpk_last_error());
  return static_cast<int>(s);
}

const char* c_or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-plane volumetric classifier with KAN attention"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(mpk_version()));
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  // synth
  std::string synth_spec, synth_out;
  std::size_t synth_n = 10;
  auto* synth = app.add_subcommand("synth", "Generate a labelled phantom dataset");
  synth->add_option("--spec", synth_spec, "Phantom INI file")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--n", synth_n, "Subjects per class")->check(CLI::PositiveNumber);

  // train
  std::string tr_data, tr_config, tr_out, tr_planes, tr_attention;
  std::vector<std::string> tr_transfer;
  int tr_epochs = 0;
  std::uint64_t tr_seed = 0;
  std::size_t tr_threads = 0;
  auto* train = app.add_subcommand("train", "Run k-fold cross-validation");
  train->add_option("--data", tr_data, "Dataset manifest (manifest.tsv)")->required();
  train->add_option("--config", tr_config, "Training INI file");
  train->add_option("--transfer", tr_transfer, "Checkpoint(s) to fine-tune from");
  train->add_option("--out", tr_out, "Output directory")->required();
  train->add_option("--planes", tr_planes, "Comma list of axial, coronal, sagittal");
  train->add_option("--attention", tr_attention, "avg_kan, avg_mlp, maxavg_kan, maxavg_mlp or off");
  train->add_option("--epochs", tr_epochs, "Override the epoch count")->check(CLI::PositiveNumber);
  auto* seed_opt = train->add_option("--seed", tr_seed, "Override the seed");
  train->add_option("--threads", tr_threads, "Folds trained in parallel")->check(CLI::PositiveNumber);

  // eval
  std::string ev_ckpt, ev_data, ev_config, ev_out;
  auto* eval = app.add_subcommand("eval", "Score a dataset with a checkpoint");
  eval->add_option("--ckpt", ev_ckpt, "Model checkpoint")->required();
  eval->add_option("--data", ev_data, "Dataset manifest")->required();
  eval->add_option("--config", ev_config, "Config the checkpoint was trained with");
  eval->add_option("--out", ev_out, "Directory for metrics and predictions");

  // gradcam
  std::string gc_ckpt, gc_data, gc_atlas, gc_config, gc_out;
  std::size_t gc_k = 20;
  int gc_target = -1;
  bool gc_post = false;
  auto* gradcam = app.add_subcommand("gradcam", "Class activation maps and region rankings");
  gradcam->add_option("--ckpt", gc_ckpt, "Model checkpoint")->required();
  gradcam->add_option("--data", gc_data, "Dataset manifest")->required();
  gradcam->add_option("--atlas", gc_atlas, "Integer label volume")->required();
  gradcam->add_option("--config", gc_config, "Config the checkpoint was trained with");
  gradcam->add_option("--out", gc_out, "Output directory")->required();
  gradcam->add_option("--k", gc_k, "Regions to rank")->check(CLI::PositiveNumber);
  gradcam->add_option("--target", gc_target, "Class to explain (default: subject label)")->check(CLI::Range(0, 1));
  gradcam->add_flag("--post-attention", gc_post, "Use attended maps instead of backbone output");

  // gradcheck
  std::string gk_scale = "tiny", gk_fault, gk_report;
  std::uint64_t gk_seed = 0;
  double gk_factor = 1.5;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--scale", gk_scale, "tiny or small")->check(CLI::IsMember({"tiny", "small"}));
  gradcheck->add_option("--seed", gk_seed, "Sampling seed");
  gradcheck->add_option("--inject-fault", gk_fault, "Scale the backward of this op");
  gradcheck->add_option("--fault-factor", gk_factor, "Scale factor for --inject-fault");
  gradcheck->add_option("--report", gk_report, "Write the report to this file");

  // rerun
  std::string rr_manifest, rr_out;
  auto* rerun = app.add_subcommand("rerun", "Replay a run manifest");
  rerun->add_option("--manifest", rr_manifest, "run_manifest.txt")->required()->check(CLI::ExistingFile);
  rerun->add_option("--out", rr_out, "Output directory (default: the recorded one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : MPK_ERR_USAGE;
  }

  mpk_set_log_callback(quiet ? nullptr : print_line, nullptr);

  if (*synth) {
    mpk_synth_args a{};
    a.spec = synth_spec.c_str();
    a.out = synth_out.c_str();
    a.n_per_class = synth_n;
    return report(mpk_cmd_synth(&a));
  }
  if (*train) {
    std::vector<const char*> transfer;
    for (const auto& t : tr_transfer) transfer.push_back(t.c_str());
    mpk_train_args a{};
    a.data = tr_data.c_str();
    a.config = c_or_null(tr_config);
    a.transfer = transfer.data();
    a.transfer_count = transfer.size();
    a.out = tr_out.c_str();
    a.planes = c_or_null(tr_planes);
    a.attention = c_or_null(tr_attention);
    a.epochs = tr_epochs;
    a.has_seed = seed_opt->count() > 0;
    a.seed = tr_seed;
    a.threads = tr_threads;
    std::size_t needed = 0;
    std::string table(4096, '\0');
    mpk_status s = mpk_cmd_train(&a, table.data(), table.size(), &needed);
    if (s == MPK_OK) std::fputs(table.c_str(), stdout);
    return report(s);
  }
  if (*eval) {
    mpk_eval_args a{};
    a.ckpt = ev_ckpt.c_str();
    a.data = ev_data.c_str();
    a.config = c_or_null(ev_config);
    a.out = c_or_null(ev_out);
    std::size_t needed = 0;
    std::string table(4096, '\0');
    mpk_status s = mpk_cmd_eval(&a, table.data(), table.size(), &needed);
    if (s == MPK_OK) std::fputs(table.c_str(), stdout);
    return report(s);
  }
  if (*gradcam) {
    mpk_gradcam_args a{};
    a.ckpt = gc_ckpt.c_str();
    a.data = gc_data.c_str();
    a.atlas = gc_atlas.c_str();
    a.config = c_or_null(gc_config);
    a.out = gc_out.c_str();
    a.k = gc_k;
    a.target = gc_target;
    a.post_attention = gc_post ? 1 : 0;
    return report(mpk_cmd_gradcam(&a));
  }
  if (*gradcheck) {
    mpk_gradcheck_args a{};
    a.scale = gk_scale.c_str();
    a.seed = gk_seed;
    a.fault_op = c_or_null(gk_fault);
    a.fault_factor = gk_factor;
    a.report = c_or_null(gk_report);
    return report(mpk_cmd_gradcheck(&a));
  }
  mpk_status s = mpk_cmd_rerun(rr_manifest.c_str(), c_or_null(rr_out));
  return report(s);
}
