/*
 * Copyright 2026 The Telltale Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "telltale/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "telltale/checkpoint.hpp"
#include "telltale/config.hpp"
#include "telltale/dataset.hpp"
#include "telltale/error.hpp"
#include "telltale/evaluate.hpp"
#include "telltale/locfuse.hpp"
#include "telltale/manifest.hpp"
#include "telltale/maskgen.hpp"
#include "telltale/residual.hpp"
#include "telltale/synthbench.hpp"
#include "telltale/trainer.hpp"

namespace telltale::cli {
namespace fs = std::filesystem;
namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

// Sorted key=value snapshot of a subcommand's effective options.
void write_snapshot(const fs::path& dir, const std::map<std::string, std::string>& entries) {
  std::string text;
  for (const auto& [k, v] : entries) text += k + "=" + v + "\n";
  write_text(dir / "resolved_config.txt", text);
}

std::string num(double v) { return evaluate::format_number(v); }

std::string join(const std::vector<std::string>& parts, const std::string& sep = ",") {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

// Output stems must be unique so per-sample files never collide.
std::vector<std::string> unique_stems(const std::vector<std::string>& paths) {
  std::vector<std::string> stems;
  std::set<std::string> seen;
  for (const auto& p : paths) {
    const std::string stem = fs::path(p).stem().string();
    if (!seen.insert(stem).second) throw DataError("duplicate file stem '" + stem + "'");
    stems.push_back(stem);
  }
  return stems;
}

std::vector<data::ManifestRecord> absolute_paths(std::vector<data::ManifestRecord> records) {
  auto abs = [](std::string& p) { p = fs::absolute(p).lexically_normal().string(); };
  for (auto& r : records) {
    abs(r.image_path);
    if (r.mask_path) abs(*r.mask_path);
    if (r.pair_path) abs(*r.pair_path);
  }
  return records;
}

// ---- extract-noise -------------------------------------------------------

struct NoiseArgs {
  double sigma = residual::kSigmaHighQuality;
  std::string filter = "wavelet";
  std::vector<std::string> inputs;
  std::string manifest;
  std::string out;
};

int cmd_extract_noise(const NoiseArgs& a, std::ostream& err) {
  std::vector<std::string> inputs = a.inputs;
  if (!a.manifest.empty()) {
    for (const auto& r : data::read_manifest(a.manifest)) inputs.push_back(r.image_path);
  }
  if (inputs.empty()) throw InvalidArgument("extract-noise: no input images");
  const auto stems = unique_stems(inputs);
  const fs::path out(a.out);
  for (size_t i = 0; i < inputs.size(); ++i) {
    const Image img = load_png(inputs[i]);
    const residual::NoiseMap n = a.filter == "srm" ? residual::srm_residual(img)
                                                   : residual::extract_residual(img, a.sigma);
    write_raw_array(out / (stems[i] + ".f32"), n.residual,
                    {{"sigma", n.sigma}, {"filter", a.filter}});
  }
  write_snapshot(out, {{"command", "extract-noise"},
                       {"filter", a.filter},
                       {"sigma", num(a.sigma)},
                       {"inputs", std::to_string(inputs.size())},
                       {"manifest", a.manifest}});
  err << "extract-noise: wrote " << inputs.size() << " residuals to " << out.string() << "\n";
  return kExitOk;
}

// ---- make-masks ----------------------------------------------------------

struct MaskArgs {
  double threshold = 0.05;
  bool no_cleanup = false;
  std::string manifest;
  std::string real, fake;
  std::string out;
};

void write_mask_set(const fs::path& dir, const std::string& stem, const Plane& mask) {
  Plane png = mask;
  for (size_t i = 0; i < png.size(); ++i) png[i] *= 255.0;
  save_png(dir / (stem + ".png"), png);
  for (int stride : {4, 8, 16}) {
    if (mask.height() % stride || mask.width() % stride) continue;
    const Plane aligned = maskgen::align_mask(mask, mask.height() / stride, mask.width() / stride);
    write_raw_array(dir / (stem + "_s" + std::to_string(stride) + ".f32"), aligned,
                    {{"stride", stride}});
  }
}

int cmd_make_masks(const MaskArgs& a, std::ostream& err) {
  maskgen::ThresholdConfig cfg;
  cfg.threshold = a.threshold;
  cfg.morph_cleanup = !a.no_cleanup;
  const fs::path out(a.out);
  size_t written = 0;
  if (!a.manifest.empty()) {
    auto records = absolute_paths(data::read_manifest(a.manifest));
    std::vector<std::string> paths;
    for (const auto& r : records) paths.push_back(r.image_path);
    const auto stems = unique_stems(paths);
    for (size_t i = 0; i < records.size(); ++i) {
      auto& r = records[i];
      if (!r.pair_path) continue;
      const Plane mask = maskgen::pair_to_mask(load_png(*r.pair_path), load_png(r.image_path), cfg);
      write_mask_set(out / "masks", stems[i], mask);
      r.mask_path = fs::absolute(out / "masks" / (stems[i] + ".png")).lexically_normal().string();
      ++written;
    }
    data::write_manifest(out / "manifest.jsonl", records);
  } else {
    if (a.real.empty() || a.fake.empty()) {
      throw InvalidArgument("make-masks: give --manifest or both --real and --fake");
    }
    const Plane mask = maskgen::pair_to_mask(load_png(a.real), load_png(a.fake), cfg);
    write_mask_set(out, fs::path(a.fake).stem().string(), mask);
    written = 1;
  }
  write_snapshot(out, {{"command", "make-masks"},
                       {"threshold", num(a.threshold)},
                       {"cleanup", cfg.morph_cleanup ? "true" : "false"},
                       {"manifest", a.manifest},
                       {"real", a.real},
                       {"fake", a.fake}});
  err << "make-masks: wrote " << written << " masks\n";
  return kExitOk;
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
  synthbench::SpliceSpec spec;
  std::string methods = "df";
  std::string base_dir;
  std::string out;
};

int cmd_synth(SynthArgs a, std::ostream& err) {
  a.spec.methods.clear();
  std::istringstream in(a.methods);
  for (std::string m; std::getline(in, m, ',');) a.spec.methods.push_back(m);
  a.spec.base_dir = a.base_dir;
  const auto records = synthbench::generate(a.spec, a.out);
  const auto& s = a.spec;
  write_snapshot(a.out, {{"command", "synth"},
                         {"count", std::to_string(s.count)},
                         {"seed", std::to_string(s.seed)},
                         {"image_size", std::to_string(s.image_size)},
                         {"base_dir", a.base_dir},
                         {"axis_min", num(s.axis_min)},
                         {"axis_max", num(s.axis_max)},
                         {"center_jitter", num(s.center_jitter)},
                         {"feather", num(s.feather)},
                         {"noise_sigma", num(s.noise_sigma)},
                         {"color_shift", num(s.color_shift)},
                         {"base_noise", num(s.base_noise)},
                         {"val_fraction", num(s.val_fraction)},
                         {"test_fraction", num(s.test_fraction)},
                         {"methods", a.methods},
                         {"quality", s.quality}});
  err << "synth: wrote " << records.size() << " images to " << a.out << "\n";
  return kExitOk;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string manifest;
  std::string step = "all";
  std::string out;
};

int cmd_train(const TrainArgs& a, std::ostream& err) {
  config::FlatConfig cfg = config::FlatConfig::defaults();
  if (!a.config.empty()) cfg.merge(config::FlatConfig::load(a.config));
  if (!a.manifest.empty()) cfg.set("data.manifest", a.manifest);
  for (const auto& o : a.overrides) cfg.apply_override(o);
  const config::RunSettings s = config::resolve(cfg);
  if (s.manifest.empty()) throw InvalidArgument("train: no manifest (--manifest or data.manifest)");

  const fs::path out(a.out);
  fs::create_directories(out);
  write_text(out / "resolved_config.txt", "command=train\nstep=" + a.step + "\n" + cfg.to_text());

  const auto records = data::read_manifest(s.manifest);
  const auto train_records = data::filter_split(records, "train");
  const auto val_records = data::filter_split(records, "val");
  if (train_records.empty()) throw DataError("manifest has no train samples");
  auto prep = s.prepare;
  prep.strides = {4, 8, 16};
  err << "train: preparing " << train_records.size() << " train / " << val_records.size()
      << " val samples\n";
  const auto train = data::prepare(train_records, prep);
  const auto val = data::prepare(val_records, prep);

  net::Model<float> model(s.model);
  model.initialize(s.train.seed);

  const bool run1 = a.step == "1" || a.step == "all";
  const bool run2 = a.step == "2" || a.step == "all";
  if (a.step == "2") {
    const fs::path init = s.init_checkpoint.empty() ? out / "step1.ckpt" : fs::path(s.init_checkpoint);
    if (fs::exists(init)) {
      const auto meta = checkpoint::read_metadata(init);
      if (!(meta.config == s.model)) throw DataError(init.string() + ": model config differs");
      checkpoint::load_into(init, model.parameters());
      err << "train: step 2 starts from " << init.string() << "\n";
    } else if (s.require_step1) {
      throw DataError("step-1 checkpoint not found: " + init.string());
    }
  }

  std::ofstream step_log(out / "train_log.jsonl", std::ios::trunc);
  std::ofstream epoch_log(out / "epochs.jsonl", std::ios::trunc);
  trainer::Trainer t(model, s.train);
  t.set_step_logger([&](const nlohmann::json& j) { step_log << j.dump() << "\n"; });
  t.set_epoch_logger([&](const trainer::EpochRecord& r) {
    epoch_log << r.to_json().dump() << "\n";
    err << "train: step " << static_cast<int>(r.stage) << " epoch " << r.epoch << " loss "
        << num(r.mean_loss.total) << " val_auc "
        << (r.val_auc ? num(*r.val_auc) : std::string("n/a")) << "\n";
  });

  auto save_stage = [&](const trainer::StageResult& r, int stage, const std::string& file) {
    checkpoint::Metadata meta;
    meta.config = s.model;
    meta.stage = stage;
    if (!r.checkpoints.empty()) {
      meta.epoch = r.checkpoints[r.selected].epoch;
      meta.val_auc = r.checkpoints[r.selected].val_auc;
    }
    meta.extra = {{"resolved_config", cfg.to_text()}};
    checkpoint::save(out / file, model.parameters(), meta);
    checkpoint::save(out / "model.ckpt", model.parameters(), meta);
  };
  if (run1) save_stage(t.run_stage(trainer::Stage::kStep1, train, val), 1, "step1.ckpt");
  if (run2) save_stage(t.run_stage(trainer::Stage::kStep2, train, val), 2, "step2.ckpt");
  return kExitOk;
}

// ---- eval / localize -----------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string manifest;
  std::string split = "test";
  std::string out;
  std::string name;
  std::string gamma = "0.1,0.2,0.7";
  double threshold = 0.5;
  double map_threshold = locfuse::kDefaultBinarizeThreshold;
  bool curves = false;
  bool export_maps = false;
};

std::vector<data::ManifestRecord> split_records(const std::string& manifest,
                                                const std::string& split) {
  auto records = data::read_manifest(manifest);
  if (split != "all") records = data::filter_split(records, split);
  if (records.empty()) throw DataError("no samples in split '" + split + "'");
  return records;
}

int cmd_eval(const EvalArgs& a, std::ostream& err) {
  const auto model = checkpoint::load_model(a.checkpoint);
  const auto records = split_records(a.manifest, a.split);
  data::PrepareOptions prep;
  prep.noise_targets = false;
  const auto samples = data::prepare(records, prep);
  evaluate::EvalOptions opt;
  opt.gamma = locfuse::FusionWeights::parse(a.gamma);
  opt.decision_threshold = a.threshold;
  opt.map_threshold = a.map_threshold;
  const std::string name = a.name.empty() ? fs::path(a.out).filename().string() : a.name;
  const auto result = evaluate::evaluate(*model, samples, opt, name);

  const fs::path out(a.out);
  write_text(out / "report.json", result.report.to_json().dump(2) + "\n");
  if (a.curves) evaluate::write_curves(out, result.scored);
  if (a.export_maps) {
    std::vector<std::string> paths;
    for (const auto& s : samples) paths.push_back(s.id);
    const auto stems = unique_stems(paths);
    for (size_t i = 0; i < samples.size(); ++i) {
      evaluate::export_map(out / "maps" / (stems[i] + ".png"), result.predictions[i].fused);
    }
  }
  write_snapshot(out, {{"command", "eval"},
                       {"checkpoint", a.checkpoint},
                       {"manifest", a.manifest},
                       {"split", a.split},
                       {"name", name},
                       {"gamma", a.gamma},
                       {"threshold", num(a.threshold)},
                       {"map_threshold", num(a.map_threshold)},
                       {"curves", a.curves ? "true" : "false"},
                       {"export_maps", a.export_maps ? "true" : "false"}});
  const auto& r = result.report;
  err << "eval: " << r.samples << " samples, auc " << num(r.auc) << ", acc " << num(r.acc);
  if (r.localization) err << ", iou " << num(r.localization->iou);
  err << "\n";
  return kExitOk;
}

struct LocalizeArgs {
  std::string checkpoint;
  std::string manifest;
  std::vector<std::string> images;
  std::string split = "all";
  std::string gamma = "0.1,0.2,0.7";
  std::string out;
  bool debug = false;
};

int cmd_localize(const LocalizeArgs& a, std::ostream& err) {
  const auto model = checkpoint::load_model(a.checkpoint);
  const auto gamma = locfuse::FusionWeights::parse(a.gamma).normalized();
  std::vector<std::string> inputs = a.images;
  if (!a.manifest.empty()) {
    for (const auto& r : split_records(a.manifest, a.split)) inputs.push_back(r.image_path);
  }
  if (inputs.empty()) throw InvalidArgument("localize: no input images");
  const auto stems = unique_stems(inputs);
  const fs::path out(a.out);
  const int s3 = model->strides()[2];
  for (size_t i = 0; i < inputs.size(); ++i) {
    const Image img = load_png(inputs[i]);
    if (img.height() % s3 || img.width() % s3) {
      throw DataError(inputs[i] + ": size is not a multiple of " + std::to_string(s3));
    }
    const auto input = data::normalize_input(img);
    const auto pred = evaluate::predict(*model, input, gamma);
    evaluate::export_map(out / (stems[i] + ".png"), pred.fused);
    if (a.debug) evaluate::export_forward_debug(out / "debug" / stems[i], model->forward(input));
  }
  write_snapshot(out, {{"command", "localize"},
                       {"checkpoint", a.checkpoint},
                       {"manifest", a.manifest},
                       {"split", a.split},
                       {"images", join(a.images)},
                       {"gamma", a.gamma},
                       {"debug", a.debug ? "true" : "false"}});
  err << "localize: wrote " << inputs.size() << " maps to " << out.string() << "\n";
  return kExitOk;
}

// ---- report --------------------------------------------------------------

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir,
               std::ostream& err) {
  std::vector<metrics::EvalReport> reports;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ": " + e.what());
    }
    auto r = metrics::EvalReport::from_json(j);
    if (r.name.empty()) r.name = fs::path(path).parent_path().filename().string();
    reports.push_back(std::move(r));
  }
  const fs::path out(out_dir);
  write_text(out / "report.txt", render_text(reports));
  write_text(out / "report.csv", render_csv(reports));
  write_snapshot(out, {{"command", "report"}, {"inputs", join(inputs)}});
  err << "report: " << reports.size() << " rows\n";
  return kExitOk;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Manipulation detection and localization pipeline", "telltale");
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  NoiseArgs noise;
  auto* sub_noise = app.add_subcommand("extract-noise", "Wavelet or SRM noise residuals");
  sub_noise->add_option("--sigma", noise.sigma, "AWGN std on the 0-255 scale")
      ->check(CLI::Range(0.0, residual::kMaxSigma));
  sub_noise->add_option("--filter", noise.filter)->check(CLI::IsMember({"wavelet", "srm"}));
  sub_noise->add_option("--manifest", noise.manifest, "Manifest whose images to process");
  sub_noise->add_option("--out", noise.out)->required();
  sub_noise->add_option("images", noise.inputs, "PNG files");

  MaskArgs masks;
  auto* sub_masks = app.add_subcommand("make-masks", "Masks from real/fake pairs");
  sub_masks->add_option("--threshold", masks.threshold)->check(CLI::Range(0.0, 1.0));
  sub_masks->add_flag("--no-cleanup", masks.no_cleanup, "Skip morphological cleanup");
  sub_masks->add_option("--manifest", masks.manifest);
  sub_masks->add_option("--real", masks.real);
  sub_masks->add_option("--fake", masks.fake);
  sub_masks->add_option("--out", masks.out)->required();

  SynthArgs synth;
  auto* sub_synth = app.add_subcommand("synth", "Generate synthetic real/fake pairs");
  sub_synth->add_option("--count", synth.spec.count, "Number of pairs")->required();
  sub_synth->add_option("--seed", synth.spec.seed);
  sub_synth->add_option("--out", synth.out)->required();
  sub_synth->add_option("--size", synth.spec.image_size);
  sub_synth->add_option("--base-dir", synth.base_dir);
  sub_synth->add_option("--axis-min", synth.spec.axis_min);
  sub_synth->add_option("--axis-max", synth.spec.axis_max);
  sub_synth->add_option("--center-jitter", synth.spec.center_jitter);
  sub_synth->add_option("--feather", synth.spec.feather);
  sub_synth->add_option("--noise-sigma", synth.spec.noise_sigma);
  sub_synth->add_option("--color-shift", synth.spec.color_shift);
  sub_synth->add_option("--base-noise", synth.spec.base_noise);
  sub_synth->add_option("--val-fraction", synth.spec.val_fraction);
  sub_synth->add_option("--test-fraction", synth.spec.test_fraction);
  sub_synth->add_option("--methods", synth.methods, "Comma list of df,ff,fs,nt");
  sub_synth->add_option("--quality", synth.spec.quality)->check(CLI::IsMember({"hq", "lq"}));

  TrainArgs train;
  auto* sub_train = app.add_subcommand("train", "Two-step training");
  sub_train->add_option("--config", train.config, "key=value config file");
  sub_train->add_option("--set", train.overrides, "Override key=value (repeatable)");
  sub_train->add_option("--manifest", train.manifest);
  sub_train->add_option("--step", train.step)->check(CLI::IsMember({"1", "2", "all"}));
  sub_train->add_option("--out", train.out)->required();

  EvalArgs ev;
  auto* sub_eval = app.add_subcommand("eval", "Detection and localization metrics");
  sub_eval->add_option("--checkpoint", ev.checkpoint)->required();
  sub_eval->add_option("--manifest", ev.manifest)->required();
  sub_eval->add_option("--split", ev.split)->check(CLI::IsMember({"train", "val", "test", "all"}));
  sub_eval->add_option("--out", ev.out)->required();
  sub_eval->add_option("--name", ev.name);
  sub_eval->add_option("--gamma", ev.gamma);
  sub_eval->add_option("--threshold", ev.threshold)->check(CLI::Range(0.0, 1.0));
  sub_eval->add_option("--map-threshold", ev.map_threshold);
  sub_eval->add_flag("--curves", ev.curves, "Write roc.csv and pr.csv");
  sub_eval->add_flag("--export-maps", ev.export_maps, "Write fused maps");

  LocalizeArgs loc;
  auto* sub_loc = app.add_subcommand("localize", "Export fused localization maps");
  sub_loc->add_option("--checkpoint", loc.checkpoint)->required();
  sub_loc->add_option("--manifest", loc.manifest);
  sub_loc->add_option("--split", loc.split)->check(CLI::IsMember({"train", "val", "test", "all"}));
  sub_loc->add_option("--gamma", loc.gamma);
  sub_loc->add_option("--out", loc.out)->required();
  sub_loc->add_flag("--debug", loc.debug, "Also dump features and per-tap maps");
  sub_loc->add_option("images", loc.images, "PNG files");

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* sub_report = app.add_subcommand("report", "Merge EvalReport files into a table");
  sub_report->add_option("--out", report_out)->required();
  sub_report->add_option("reports", report_inputs, "report.json files")->required();

  // CLI11 consumes the vector from the back.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kExitUsage;
  }

  if (sub_noise->parsed()) return cmd_extract_noise(noise, err);
  if (sub_masks->parsed()) return cmd_make_masks(masks, err);
  if (sub_synth->parsed()) return cmd_synth(synth, err);
  if (sub_train->parsed()) return cmd_train(train, err);
  if (sub_eval->parsed()) return cmd_eval(ev, err);
  if (sub_loc->parsed()) return cmd_localize(loc, err);
  if (sub_report->parsed()) return cmd_report(report_inputs, report_out, err);
  return kExitUsage;
}

}  // namespace

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {"name", "samples", "acc", "auc", "eer", "ap",
                                                "fpr",  "fnr",     "iou", "pbca", "iinc"};
  return cols;
}

std::vector<std::vector<std::string>> report_rows(const std::vector<metrics::EvalReport>& reports) {
  auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : reports) {
    std::vector<std::string> row = {r.name,   std::to_string(r.samples), num(r.acc), num(r.auc),
                                    num(r.eer), num(r.ap), opt(r.fpr), opt(r.fnr)};
    if (r.localization) {
      row.push_back(num(r.localization->iou));
      row.push_back(num(r.localization->pbca));
      row.push_back(num(r.localization->iinc));
    } else {
      row.insert(row.end(), 3, std::string());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_csv(const std::vector<metrics::EvalReport>& reports) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::string out = join(report_columns()) + "\n";
  for (const auto& row : report_rows(reports)) {
    std::vector<std::string> cells;
    for (const auto& c : row) cells.push_back(quote(c));
    out += join(cells) + "\n";
  }
  return out;
}

std::string render_text(const std::vector<metrics::EvalReport>& reports) {
  const auto& cols = report_columns();
  const auto rows = report_rows(reports);
  std::vector<size_t> width(cols.size());
  for (size_t c = 0; c < cols.size(); ++c) width[c] = cols[c].size();
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (size_t c = 0; c < cells.size(); ++c) {
      std::string cell = cells[c];
      cell.resize(width[c], ' ');
      s += (c ? "  " : "") + cell;
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  std::string out = line(cols);
  for (const auto& row : rows) out += line(row);
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
}

int run(const std::vector<std::string>& args) { return run(args, std::cout, std::cerr); }

}  // namespace telltale::cli
