/* Copyright 2026 The LaSS Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <doctest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lass/io.hpp"
#include "lass/mask.hpp"
#include "lass/pipeline.hpp"
#include "test_util.hpp"

using namespace lass;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"([data]
families = f:aa,ab;g:zz,zy
sizes = aa:300,ab:120,zz:60,zy:60
holdout = zz
pivot_words = 30
min_len = 2
max_len = 5
valid_size = 20
test_size = 20
zero_shot_test_size = 10

[model]
num_layers = 1
d_model = 16
num_heads = 2
d_ff = 32
max_seq_len = 8

[train]
base_lr = 0.003
warmup_steps = 20
base_steps = 60
lass_steps = 20
batch_size = 16
finetune_steps = 0:10,200:20
eval_every = 30
extend_pair = en-zz
extend_steps = 20
extend_eval_every = 10

[mask]
alpha = 0.5

[eval]
beam_size = 2
max_sentences = 5
swap_sentences = 5
extend_sentences = 5
tier_medium_min = 100
tier_rich_min = 200

[sweep]
alphas = 0.1,0.3,0.5,0.7,0.9
lass_steps = 5
)";

struct Run {
  fs::path dir;
  fs::path config;
  std::ostringstream log;

  explicit Run(const std::string& tag, const std::string& extra = "") {
    dir = testing::scratch_dir(tag);
    config = dir.parent_path() / (dir.filename().string() + ".ini");
    write_file_text(config, std::string(kTinyConfig) + extra);
  }
  ~Run() {
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::remove(config, ec);
  }
  int operator()(const std::string& cmd, bool force = false) {
    RunOptions o;
    o.run_dir = dir;
    o.config_path = config;
    o.force = force;
    o.use_env = false;
    o.log = &log;
    return run_command(cmd, o);
  }
};

std::size_t lines(const fs::path& p) {
  auto t = read_file_text(p);
  return static_cast<std::size_t>(std::count(t.begin(), t.end(), '\n'));
}

}  // namespace

TEST_CASE("prerequisites are named before anything runs") {
  Run run("prereq");
  CHECK(run("zero-shot") == 3);
  CHECK(run.log.str().find("make-masks") != std::string::npos);
  CHECK(run("train-base") == 3);
  CHECK(run.log.str().find("gen-data") != std::string::npos);
  CHECK(run("not-a-command") == 1);
}

TEST_CASE("full pipeline on a tiny config") {
  Run run("full");
  for (const char* cmd : {"gen-data", "train-base", "make-masks", "lass-train", "evaluate"}) {
    INFO(cmd << "\n" << run.log.str());
    REQUIRE(run(cmd) == 0);
  }
  for (const char* d : {"data", "ckpt", "masks", "reports"}) CHECK(fs::is_directory(run.dir / d));
  CHECK(fs::exists(run.dir / "config.resolved"));
  CHECK_FALSE(fs::exists(run.dir / ".lock"));

  // 6 trained directions (zz is held out), one split.
  CHECK(lines(run.dir / "reports" / "eval.csv") == 1 + 6);
  CHECK(lines(run.dir / "reports" / "eval_baseline.csv") == 1 + 6);
  auto ej = nlohmann::json::parse(read_file_text(run.dir / "reports" / "eval.json"));
  CHECK(ej["win_ratio"]["baseline"] == "baseline");
  CHECK(ej["win_ratio"]["baseline_hash"].get<std::string>().size() == 16);
  CHECK(ej["win_ratio"]["arms"].contains("lass"));
  CHECK(ej["arms"]["lass"]["test"]["tiers"].contains("rich"));

  // Identical config: notice, no work.
  const auto before = fs::last_write_time(run.dir / "reports" / "eval.csv");
  run.log.str("");
  CHECK(run("evaluate") == 0);
  CHECK(run.log.str().find("nothing to do") != std::string::npos);
  CHECK(fs::last_write_time(run.dir / "reports" / "eval.csv") == before);

  // A changed eval section conflicts until forced.
  write_file_text(run.config, std::string(kTinyConfig) + "\n[eval]\nbeam_size = 1\n");
  CHECK(run("evaluate") == 2);
  CHECK(run.log.str().find("--force") != std::string::npos);
  CHECK(run("evaluate", true) == 0);

  CHECK(run("zero-shot") == 0);
  CHECK(fs::exists(run.dir / "masks" / "zero_shot" / "aa-ab.mask"));
  auto merged = load_mask(run.dir / "masks" / "zero_shot" / "aa-ab.mask");
  CHECK(merged.provenance == Provenance::kMerged);
  auto zj = nlohmann::json::parse(read_file_text(run.dir / "reports" / "zero_shot.json"));
  CHECK(zj.contains("mask_swap"));
  CHECK(zj.contains("baseline"));
  CHECK(lines(run.dir / "reports" / "zero_shot_lass.csv") == 1 + 6);

  CHECK(run("analyze") == 0);
  CHECK(lines(run.dir / "reports" / "profile.csv") == 1 + 2 * 1 * 6);
  CHECK(fs::exists(run.dir / "reports" / "similarity_from_pivot.csv"));

  CHECK(run("extend") == 0);
  CHECK(lines(run.dir / "reports" / "extend.csv") == 1 + 2 * 3);

  CHECK(run("sweep") == 0);
  auto sweep = read_file_text(run.dir / "reports" / "sweep.csv");
  for (const char* tier : {"low", "medium", "rich"}) {
    std::size_t n = 0, pos = 0;
    const std::string key = std::string(",") + tier + ",";
    while ((pos = sweep.find(key, pos)) != std::string::npos) {
      ++n;
      ++pos;
    }
    INFO(sweep);
    CHECK(n == 5);
  }
  auto sj = nlohmann::json::parse(read_file_text(run.dir / "reports" / "sweep.json"));
  CHECK(sj.contains("argmax_alpha"));

  // Rerunning an upstream command invalidates downstream stamps.
  write_file_text(run.config, std::string(kTinyConfig) + "\n[mask]\nalpha = 0.6\n");
  CHECK(run("make-masks") == 2);
  CHECK(run("make-masks", true) == 0);
  CHECK(run("evaluate") == 3);
}

TEST_CASE("a held lock refuses a second writer") {
  Run run("lock");
  write_file_text(run.dir / ".lock", "123\n");
  CHECK(run("gen-data") != 0);
  CHECK(run.log.str().find("locked") != std::string::npos);
  fs::remove(run.dir / ".lock");
  CHECK(run("gen-data") == 0);
}

TEST_CASE("configuration errors exit with 2") {
  Run run("badcfg", "\n[mask]\nalpha = 1.5\n");
  CHECK(run("gen-data") == 2);
  RunOptions o;
  o.run_dir = run.dir;
  o.config_path = run.dir / "missing.ini";
  o.use_env = false;
  std::ostringstream log;
  o.log = &log;
  CHECK(run_command("gen-data", o) == 2);
}

TEST_CASE("latest_checkpoint picks the highest step") {
  auto dir = testing::scratch_dir("ckpt");
  for (const char* f : {"base.10.ckpt", "base.200.ckpt", "base.30.ckpt", "lass.999.ckpt", "base.x.ckpt"}) {
    write_file_text(dir / f, "");
  }
  CHECK(latest_checkpoint(dir, "base")->filename() == "base.200.ckpt");
  CHECK_FALSE(latest_checkpoint(dir, "random"));
  fs::remove_all(dir);
}
