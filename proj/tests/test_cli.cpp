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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "telltale/cli.hpp"
#include "telltale/manifest.hpp"

namespace fs = std::filesystem;
using namespace telltale;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Shared fixture: one synthetic set and one tiny trained model.
class Pipeline : public ::testing::Test {
 protected:
  static fs::path root;

  static std::vector<std::string> tiny_sets() {
    return {"--set", "model.input_size=48",        "--set", "model.stem_channels=4",
            "--set", "model.backbone_channels=8,8,8", "--set", "model.head_channels=4",
            "--set", "model.classifier_hidden=8", "--set", "train.epochs_step1=1",
            "--set", "train.epochs_step2=1",      "--set", "train.batch_size=8"};
  }

  static void SetUpTestSuite() {
    root = fs::temp_directory_path() / "telltale_cli";
    fs::remove_all(root);
    auto r = call({"synth", "--count", "10", "--seed", "3", "--size", "48", "--val-fraction",
                   "0.2", "--test-fraction", "0.2", "--out", (root / "data").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::vector<std::string> args = {"train", "--manifest", (root / "data/manifest.jsonl").string(),
                                     "--out", (root / "run").string()};
    for (const auto& s : tiny_sets()) args.push_back(s);
    r = call(args);
    ASSERT_EQ(r.code, 0) << r.err;
  }
};

fs::path Pipeline::root;

metrics::EvalReport sample_report(const std::string& name, bool with_loc) {
  metrics::EvalReport r;
  r.name = name;
  r.samples = 4;
  r.acc = 0.75;
  r.auc = 0.875;
  r.eer = 0.25;
  r.ap = 0.9;
  r.fpr = 0.5;
  r.fnr = 0.0;
  if (with_loc) r.localization = metrics::LocalizationReport{0.5, 0.75, 0.125};
  return r;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(call({}).code, cli::kExitUsage);
  EXPECT_EQ(call({"synth", "--count", "2", "--out", "/tmp/x", "--bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(call({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(call({"synth", "--out", "/tmp/x"}).code, cli::kExitUsage);
  EXPECT_EQ(call({"synth", "--count", "0", "--out", "/tmp/x"}).code, cli::kExitUsage);
  EXPECT_EQ(call({"--help"}).code, cli::kExitOk);
  EXPECT_EQ(call({"train", "--out", "/tmp/x", "--set", "nope=1"}).code, cli::kExitUsage);
}

TEST(Cli, MissingInputsAreDataErrors) {
  EXPECT_EQ(call({"eval", "--checkpoint", "/nonexistent.ckpt", "--manifest", "/nonexistent.jsonl",
                  "--out", "/tmp/x"})
                .code,
            cli::kExitData);
  EXPECT_EQ(call({"report", "--out", "/tmp/x", "/nonexistent/report.json"}).code, cli::kExitData);
}

TEST_F(Pipeline, SynthWritesImagesAndManifest) {
  const auto records = data::read_manifest(root / "data/manifest.jsonl");
  ASSERT_EQ(records.size(), 20u);
  int images = 0;
  for (const auto& e : fs::directory_iterator(root / "data/images")) images += e.is_regular_file();
  EXPECT_EQ(images, 20);
  EXPECT_TRUE(fs::exists(root / "data/resolved_config.txt"));
  EXPECT_EQ(data::filter_split(records, "test").size(), 4u);
}

TEST_F(Pipeline, TrainOutputs) {
  for (const char* f : {"resolved_config.txt", "train_log.jsonl", "epochs.jsonl", "step1.ckpt",
                        "step2.ckpt", "model.ckpt"}) {
    EXPECT_TRUE(fs::exists(root / "run" / f)) << f;
  }
  std::istringstream log(slurp(root / "run/train_log.jsonl"));
  int lines = 0;
  for (std::string line; std::getline(log, line); ++lines) {
    const auto j = nlohmann::json::parse(line);
    for (const char* k : {"step", "L_c", "L_n", "L_b", "total"}) EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_GT(lines, 0);
  const std::string cfg = slurp(root / "run/resolved_config.txt");
  EXPECT_NE(cfg.find("model.input_size=48"), std::string::npos);
}

TEST_F(Pipeline, TrainingIsReproducible) {
  std::vector<std::string> args = {"train", "--manifest", (root / "data/manifest.jsonl").string(),
                                   "--out", (root / "run2").string()};
  for (const auto& s : tiny_sets()) args.push_back(s);
  ASSERT_EQ(call(args).code, 0);
  for (const char* f : {"model.ckpt", "train_log.jsonl", "resolved_config.txt"}) {
    EXPECT_EQ(slurp(root / "run" / f), slurp(root / "run2" / f)) << f;
  }
}

TEST_F(Pipeline, StepTwoNeedsStepOne) {
  std::vector<std::string> args = {"train", "--manifest", (root / "data/manifest.jsonl").string(),
                                   "--step", "2", "--out", (root / "lonely").string()};
  for (const auto& s : tiny_sets()) args.push_back(s);
  EXPECT_EQ(call(args).code, cli::kExitData);
  args.push_back("--set");
  args.push_back("run.require_step1=false");
  EXPECT_EQ(call(args).code, cli::kExitOk);
}

TEST_F(Pipeline, EvalWritesReportCurvesAndMaps) {
  const auto r = call({"eval", "--checkpoint", (root / "run/model.ckpt").string(), "--manifest",
                       (root / "data/manifest.jsonl").string(), "--out", (root / "eval").string(),
                       "--curves", "--export-maps"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(root / "eval/report.json"));
  const auto rep = metrics::EvalReport::from_json(j);
  EXPECT_EQ(rep.samples, 4);
  EXPECT_EQ(rep.name, "eval");
  EXPECT_TRUE(rep.localization.has_value());
  EXPECT_TRUE(fs::exists(root / "eval/roc.csv"));
  EXPECT_TRUE(fs::exists(root / "eval/pr.csv"));
  EXPECT_TRUE(fs::exists(root / "eval/maps/pair_00008_fake.png"));
  EXPECT_TRUE(fs::exists(root / "eval/maps/pair_00008_fake.f32"));

  const auto again = call({"eval", "--checkpoint", (root / "run/model.ckpt").string(),
                           "--manifest", (root / "data/manifest.jsonl").string(), "--out",
                           (root / "eval").string(), "--curves", "--export-maps"});
  ASSERT_EQ(again.code, 0);
  EXPECT_EQ(slurp(root / "eval/report.json"), j.dump(2) + "\n");
}

TEST_F(Pipeline, EvalOnRealsOnlyIsDataError) {
  auto records = data::read_manifest(root / "data/manifest.jsonl");
  std::vector<data::ManifestRecord> reals;
  for (const auto& r : records)
    if (r.label == "real") reals.push_back(r);
  data::write_manifest(root / "reals.jsonl", reals);
  const auto r = call({"eval", "--checkpoint", (root / "run/model.ckpt").string(), "--manifest",
                       (root / "reals.jsonl").string(), "--split", "all", "--out",
                       (root / "eval_reals").string()});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("single-class"), std::string::npos) << r.err;
}

TEST_F(Pipeline, LocalizeExtractNoiseMakeMasks) {
  const std::string fake = (root / "data/images/pair_00001_fake.png").string();
  const std::string real = (root / "data/images/pair_00001_real.png").string();
  auto r = call({"localize", "--checkpoint", (root / "run/model.ckpt").string(), "--out",
                 (root / "loc").string(), "--debug", fake});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(root / "loc/pair_00001_fake.png"));
  EXPECT_TRUE(fs::exists(root / "loc/debug/pair_00001_fake"));

  r = call({"extract-noise", "--out", (root / "noise").string(), fake, real});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(fs::file_size(root / "noise/pair_00001_fake.f32"), 48u * 48u * 3u * 4u);
  r = call({"extract-noise", "--filter", "srm", "--out", (root / "noise_srm").string(), fake});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(call({"extract-noise", "--out", (root / "dup").string(), fake, fake}).code,
            cli::kExitData);

  r = call({"make-masks", "--real", real, "--fake", fake, "--out", (root / "mask").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"pair_00001_fake.png", "pair_00001_fake_s4.f32", "pair_00001_fake_s8.f32",
                        "pair_00001_fake_s16.f32"}) {
    EXPECT_TRUE(fs::exists(root / "mask" / f)) << f;
  }
  r = call({"make-masks", "--manifest", (root / "data/manifest.jsonl").string(), "--out",
            (root / "masks_all").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto records = data::read_manifest(root / "masks_all/manifest.jsonl");
  ASSERT_EQ(records.size(), 20u);
  EXPECT_TRUE(records[1].mask_path && fs::exists(*records[1].mask_path));
  EXPECT_EQ(call({"make-masks", "--out", (root / "m2").string()}).code, cli::kExitUsage);
}

TEST(Report, RowsAndBlankLocalizationCells) {
  const auto single = cli::render_csv({sample_report("a", true)});
  EXPECT_EQ(single,
            "name,samples,acc,auc,eer,ap,fpr,fnr,iou,pbca,iinc\n"
            "a,4,0.75,0.875,0.25,0.9,0.5,0,0.5,0.75,0.125\n");
  const auto two = cli::render_csv({sample_report("a", true), sample_report("b", false)});
  EXPECT_EQ(two.substr(two.rfind('\n', two.size() - 2) + 1), "b,4,0.75,0.875,0.25,0.9,0.5,0,,,\n");
  const auto text = cli::render_text({sample_report("a", true), sample_report("long_name", false)});
  EXPECT_EQ(text.substr(0, 18), "name       samples");
}

TEST(Report, CommandIsIdempotent) {
  const fs::path dir = fs::temp_directory_path() / "telltale_report";
  fs::remove_all(dir);
  fs::create_directories(dir / "x");
  fs::create_directories(dir / "y");
  {
    std::ofstream(dir / "x/report.json") << sample_report("", true).to_json().dump();
    std::ofstream(dir / "y/report.json") << sample_report("named", false).to_json().dump();
  }
  const std::vector<std::string> args = {"report", "--out", (dir / "out").string(),
                                         (dir / "x/report.json").string(),
                                         (dir / "y/report.json").string()};
  ASSERT_EQ(call(args).code, 0);
  const std::string first = slurp(dir / "out/report.csv");
  EXPECT_NE(first.find("\nx,4,"), std::string::npos) << first;
  EXPECT_NE(first.find("\nnamed,4,"), std::string::npos);
  ASSERT_EQ(call(args).code, 0);
  EXPECT_EQ(slurp(dir / "out/report.csv"), first);
  EXPECT_TRUE(fs::exists(dir / "out/report.txt"));
}
