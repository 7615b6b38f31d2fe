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

#include "run/commands.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "core/error.hpp"
#include "core/tensor.hpp"
#include "data/phantom.hpp"
#include "data/volume.hpp"
#include "interpret/gradcam.hpp"
#include "interpret/regions.hpp"
#include "model/checkpoint.hpp"
#include "suites/gradcheck_suites.hpp"
#include "train/trainer.hpp"

namespace mpk::run {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSnapshotMarker = "--- snapshot ---";

struct Manifest {
  std::string command;
  std::multimap<std::string, std::string> args;
  std::string snapshot;

  std::optional<std::string> get(const std::string& key) const {
    auto it = args.find(key);
    if (it == args.end()) return std::nullopt;
    return it->second;
  }
  std::vector<std::string> all(const std::string& key) const {
    std::vector<std::string> out;
    auto [lo, hi] = args.equal_range(key);
    for (auto it = lo; it != hi; ++it) out.push_back(it->second);
    return out;
  }
};

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

std::string abs_str(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

void write_manifest(const fs::path& out, const Manifest& m) {
  std::ostringstream o;
  o << "# run manifest; replay with: rerun --manifest <this file>\n";
  o << "command = " << m.command << "\n";
  o << "timestamp = " << timestamp() << "\n";
  for (const auto& [k, v] : m.args) o << k << " = " << v << "\n";
  o << kSnapshotMarker << "\n" << m.snapshot;
  write_text(out / kManifestName, o.str());
}

Manifest read_manifest_file(const fs::path& path) {
  const std::string text = train::read_text_file(path);
  Manifest m;
  const auto marker = text.find(std::string(kSnapshotMarker) + "\n");
  if (marker == std::string::npos) throw FormatError(path.string() + ": missing snapshot section");
  m.snapshot = text.substr(marker + std::string(kSnapshotMarker).size() + 1);
  std::istringstream in(text.substr(0, marker));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 3);
    if (key == "command") {
      m.command = value;
    } else if (key != "timestamp") {
      m.args.emplace(key, value);
    }
  }
  if (m.command.empty()) throw FormatError(path.string() + ": manifest names no command");
  return m;
}

std::vector<data::Volume> load_cropped(const fs::path& manifest, const train::TrainConfig& cfg) {
  auto vols = data::load_dataset(manifest);
  for (auto& v : vols) v = data::center_crop(v, cfg.crop);
  return vols;
}

std::string predictions_tsv(const std::vector<std::string>& ids, const std::vector<int>& labels,
                            const std::vector<double>& scores) {
  std::string out = "subject_id\tlabel\tscore\tpredicted\n";
  char buf[64];
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", scores[i]);
    out += ids[i] + "\t" + std::to_string(labels[i]) + "\t" + buf + "\t" + (scores[i] > 0.5 ? "1" : "0") + "\n";
  }
  return out;
}

std::string log_tsv(const std::vector<train::EpochLog>& log) {
  std::string out = "epoch\tloss\tlambda_eff\tlr\n";
  char buf[128];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%d\t%.17g\t%.17g\t%.17g\n", e.epoch, e.loss, e.lambda_eff, e.lr);
    out += buf;
  }
  return out;
}

void synth_with_spec(const data::PhantomSpec& spec, const fs::path& out, std::size_t n, const LogFn& log) {
  prepare_dir(out);
  Manifest m;
  m.command = "synth";
  m.args.emplace("out", abs_str(out));
  m.args.emplace("n", std::to_string(n));
  m.snapshot = data::to_ini(spec);
  write_manifest(out, m);

  const auto vols = data::generate_phantoms(spec, n);
  std::vector<data::ManifestEntry> entries;
  for (const auto& v : vols) {
    const fs::path rel = v.subject_id + ".vox";
    data::save_volume(out / rel, v);
    entries.push_back({v.subject_id, rel, v.label, v.group});
  }
  data::write_manifest(out / "manifest.tsv", entries);
  write_text(out / "phantom.ini", data::to_ini(spec));
  interpret::save_atlas(out / "atlas.vox", interpret::octant_atlas(spec.dims));
  if (log) log("wrote " + std::to_string(vols.size()) + " volumes, manifest.tsv and atlas.vox to " + out.string());
}

std::string train_with_config(const fs::path& data_path, const std::vector<fs::path>& transfer,
                              const train::TrainConfig& cfg, const fs::path& out, const LogFn& log) {
  prepare_dir(out);
  Manifest m;
  m.command = "train";
  m.args.emplace("data", abs_str(data_path));
  for (const auto& t : transfer) m.args.emplace("transfer", abs_str(t));
  m.args.emplace("out", abs_str(out));
  m.args.emplace("seed", std::to_string(cfg.seed));
  m.snapshot = train::to_ini(cfg);
  write_manifest(out, m);
  write_text(out / "config.ini", train::to_ini(cfg));

  const auto dataset = load_cropped(data_path, cfg);
  train::CvOptions opt;
  for (const auto& t : transfer) opt.transfer_from.push_back(model::load_checkpoint(t, cfg.model));
  std::mutex log_mutex;
  opt.on_epoch = [&](std::size_t fold, const train::EpochLog& e, const model::ModelParams&) {
    if (log) {
      std::lock_guard lock(log_mutex);
      char buf[160];
      std::snprintf(buf, sizeof buf, "fold %zu epoch %d loss %.6f lambda %.4f lr %.6g", fold, e.epoch, e.loss,
                    e.lambda_eff, e.lr);
      log(buf);
    }
    return true;
  };
  auto cv = train::cross_validate(dataset, cfg, opt);

  std::string folds = "subject_id\tfold\tlabel\tgroup\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    folds += dataset[i].subject_id + "\t" + std::to_string(cv.plan.assignment[i]) + "\t" +
             std::to_string(dataset[i].label) + "\t" + dataset[i].group + "\n";
  }
  write_text(out / "folds.tsv", folds);
  std::vector<train::Metrics> per_fold;
  for (const auto& f : cv.folds) {
    const fs::path dir = out / ("fold_" + std::to_string(f.fold));
    prepare_dir(dir);
    model::save_checkpoint(dir / "model.mpkc", f.training.params);
    write_text(dir / "train_log.tsv", log_tsv(f.training.log));
    write_text(dir / "predictions.tsv", predictions_tsv(f.test_ids, f.labels, f.scores));
    std::string info = "selected_epoch\t" + std::to_string(f.training.selected_epoch) + "\n";
    if (f.transfer_source) info += "transfer_source\t" + abs_str(transfer[*f.transfer_source]) + "\n";
    write_text(dir / "selection.tsv", info);
    per_fold.push_back(f.metrics);
  }
  const std::string table = train::metrics_table(per_fold);
  write_text(out / "metrics.tsv", table);
  if (log) log("cross-validation finished; metrics in " + (out / "metrics.tsv").string());
  return table;
}

std::string eval_with_config(const fs::path& ckpt, const fs::path& data_path, const train::TrainConfig& cfg,
                             const std::optional<fs::path>& out, const LogFn& log) {
  if (out) {
    prepare_dir(*out);
    Manifest m;
    m.command = "eval";
    m.args.emplace("ckpt", abs_str(ckpt));
    m.args.emplace("data", abs_str(data_path));
    m.args.emplace("out", abs_str(*out));
    m.snapshot = train::to_ini(cfg);
    write_manifest(*out, m);
  }
  const auto params = model::load_checkpoint(ckpt, cfg.model);
  const auto vols = load_cropped(data_path, cfg);
  const auto scores = train::predict(params, vols);
  std::vector<int> labels;
  std::vector<std::string> ids;
  for (const auto& v : vols) {
    labels.push_back(v.label);
    ids.push_back(v.subject_id);
  }
  const train::Metrics metrics[] = {train::compute_metrics(scores, labels)};
  const std::string table = train::metrics_table(metrics, false);
  if (out) {
    write_text(*out / "metrics.tsv", table);
    write_text(*out / "predictions.tsv", predictions_tsv(ids, labels, scores));
  }
  if (log) log("evaluated " + std::to_string(vols.size()) + " subjects");
  return table;
}

void gradcam_with_config(const GradcamArgs& a, const train::TrainConfig& cfg, const LogFn& log) {
  prepare_dir(a.out);
  Manifest m;
  m.command = "gradcam";
  m.args.emplace("ckpt", abs_str(a.ckpt));
  m.args.emplace("data", abs_str(a.data));
  m.args.emplace("atlas", abs_str(a.atlas));
  m.args.emplace("out", abs_str(a.out));
  m.args.emplace("k", std::to_string(a.k));
  m.args.emplace("target", std::to_string(a.target));
  m.args.emplace("post_attention", a.post_attention ? "1" : "0");
  m.snapshot = train::to_ini(cfg);
  write_manifest(a.out, m);

  const auto params = model::load_checkpoint(a.ckpt, cfg.model);
  const auto vols = load_cropped(a.data, cfg);
  const auto atlas = interpret::load_atlas(a.atlas);
  interpret::GradcamOptions opt;
  opt.post_attention = a.post_attention;

  std::vector<interpret::RegionScores> all_scores;
  std::string summary = "subject_id\tlabel\ttarget\tzero_cam\ttop_region\ttop_name\ttop_score\n";
  for (const auto& v : vols) {
    if (v.dims() != atlas.dims) {
      throw DataError("atlas dims do not match subject '" + v.subject_id + "'");
    }
    const int target = a.target >= 0 ? a.target : v.label;
    auto cam = interpret::gradcam(params, v.voxels, target, opt);
    data::save_volume(a.out / (v.subject_id + "_cam.vox"),
                      Tensor(Shape{1, cam.dims[0], cam.dims[1], cam.dims[2]}, cam.cam), target);
    auto scores = interpret::region_aggregate(cam.cam, cam.dims, atlas);
    auto top = interpret::top_regions(scores, a.k);
    write_text(a.out / (v.subject_id + "_regions.tsv"), interpret::region_scores_tsv(scores, atlas));
    write_text(a.out / (v.subject_id + "_top.tsv"), interpret::top_regions_tsv(top, atlas));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", top.empty() ? 0.0 : top.front().second);
    summary += v.subject_id + "\t" + std::to_string(v.label) + "\t" + std::to_string(target) + "\t" +
               (cam.zero ? "1" : "0") + "\t" + (top.empty() ? "NA" : std::to_string(top.front().first)) + "\t" +
               (top.empty() ? "NA" : atlas.name_of(top.front().first)) + "\t" + buf + "\n";
    if (cam.zero && log) log("subject " + v.subject_id + ": CAM is identically zero");
    all_scores.push_back(std::move(scores));
  }
  write_text(a.out / "summary.tsv", summary);

  // Mean score per region over subjects, then the group ranking.
  interpret::RegionScores mean;
  for (const auto& s : all_scores) {
    for (const auto& [r, v] : s) mean[r] += v / static_cast<double>(all_scores.size());
  }
  write_text(a.out / "group_top.tsv", interpret::top_regions_tsv(interpret::top_regions(mean, a.k), atlas));

  if (all_scores.size() < 3) {
    if (log) log("correlation matrix skipped: needs at least 3 subjects, got " + std::to_string(all_scores.size()));
    return;
  }
  std::vector<int> regions;
  for (const auto& [r, v] : mean) regions.push_back(r);
  auto corr = interpret::region_correlation(all_scores, regions);
  write_text(a.out / "correlation.tsv", interpret::correlation_tsv(corr, regions));
  if (log) log("wrote CAMs for " + std::to_string(vols.size()) + " subjects to " + a.out.string());
}

}  // namespace

train::TrainConfig resolve_config(const std::optional<fs::path>& path, const ConfigOverrides& o) {
  train::TrainConfig cfg = path ? train::load_train_config(*path) : train::TrainConfig{};
  if (o.planes) cfg.model.planes = model::parse_planes(*o.planes);
  if (o.attention) {
    if (*o.attention == "off" || *o.attention == "none") {
      cfg.model.use_attention = false;
    } else {
      cfg.model.attention = model::parse_attention_variant(*o.attention);
      cfg.model.use_attention = true;
    }
  }
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

void cmd_synth(const SynthArgs& args, const LogFn& log) {
  if (args.n_per_class < 1) throw UsageError("synth: --n must be at least 1");
  synth_with_spec(data::load_phantom_spec(args.spec), args.out, args.n_per_class, log);
}

std::string cmd_train(const TrainArgs& args, const LogFn& log) {
  return train_with_config(args.data, args.transfer, resolve_config(args.config, args.overrides), args.out, log);
}

std::string cmd_eval(const EvalArgs& args, const LogFn& log) {
  return eval_with_config(args.ckpt, args.data, resolve_config(args.config, {}), args.out, log);
}

void cmd_gradcam(const GradcamArgs& args, const LogFn& log) {
  if (args.k < 1) throw UsageError("gradcam: --k must be at least 1");
  gradcam_with_config(args, resolve_config(args.config, {}), log);
}

bool cmd_gradcheck(const GradcheckArgs& args, const LogFn& log) {
  suites::SuiteOptions opt;
  opt.scale = suites::parse_scale(args.scale);
  opt.seed = args.seed;
  if (args.fault_op) detail::set_backward_fault(*args.fault_op, args.fault_factor);
  std::string report = "suite\tchecked\tmax_rel_error\ttolerance\tstatus\n";
  bool ok = true;
  std::vector<GradcheckReport> results;
  try {
    results = suites::run_all_suites(opt, [&](const GradcheckReport& r) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s\t%zu\t%.3e\t%.1e\t%s", r.name.c_str(), r.checked, r.max_rel_error, r.tolerance,
                    r.passed() ? "pass" : "FAIL");
      if (log) log(buf);
      report += std::string(buf) + "\n";
      ok = ok && r.passed();
    });
  } catch (...) {
    if (args.fault_op) detail::set_backward_fault("", 1.0);
    throw;
  }
  if (args.fault_op) detail::set_backward_fault("", 1.0);
  report += std::string("overall\t") + std::to_string(results.size()) + "\t-\t-\t" + (ok ? "pass" : "FAIL") + "\n";
  if (args.report) write_text(*args.report, report);
  return ok;
}

bool cmd_rerun(const fs::path& manifest, const std::optional<fs::path>& out, const LogFn& log) {
  const Manifest m = read_manifest_file(manifest);
  auto need = [&](const std::string& key) {
    auto v = m.get(key);
    if (!v) throw FormatError(manifest.string() + ": manifest lacks '" + key + "'");
    return *v;
  };
  const fs::path out_dir = out ? *out : fs::path(need("out"));
  if (m.command == "synth") {
    const auto spec = data::parse_phantom_spec(m.snapshot, manifest.string());
    synth_with_spec(spec, out_dir, static_cast<std::size_t>(train::parse_int(need("n"), "n")), log);
    return true;
  }
  if (m.command == "train") {
    const auto cfg = train::parse_train_config(m.snapshot, manifest.string());
    std::vector<fs::path> transfer;
    for (const auto& t : m.all("transfer")) transfer.emplace_back(t);
    train_with_config(need("data"), transfer, cfg, out_dir, log);
    return true;
  }
  if (m.command == "eval") {
    const auto cfg = train::parse_train_config(m.snapshot, manifest.string());
    const std::string table = eval_with_config(need("ckpt"), need("data"), cfg, out_dir, log);
    if (log) log(table);
    return true;
  }
  if (m.command == "gradcam") {
    GradcamArgs a;
    a.ckpt = need("ckpt");
    a.data = need("data");
    a.atlas = need("atlas");
    a.out = out_dir;
    a.k = static_cast<std::size_t>(train::parse_int(need("k"), "k"));
    a.target = static_cast<int>(train::parse_int(need("target"), "target"));
    a.post_attention = need("post_attention") == "1";
    gradcam_with_config(a, train::parse_train_config(m.snapshot, manifest.string()), log);
    return true;
  }
  throw FormatError(manifest.string() + ": cannot replay command '" + m.command + "'");
}

}  // namespace mpk::run
