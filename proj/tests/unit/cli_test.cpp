// Copyright 2026 The bookmatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <string>
#include <vector>

#include "common/temp.hpp"
#include "doctest.h"

using bookmatch::testing::TempDir;
using bookmatch::testing::read_file;
using bookmatch::testing::write_file;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs the installed binary through the shell, capturing both streams.
CliResult run_cli(const TempDir& dir, const std::string& args) {
  static int call = 0;
  const std::string out_path = dir.file("stdout_" + std::to_string(call));
  const std::string err_path = dir.file("stderr_" + std::to_string(call));
  ++call;
  const std::string cmd = std::string(BOOKMATCH_CLI_PATH) + " " + args + " >" + out_path +
                          " 2>" + err_path;
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  return r;
}

// Benchmark fixture shared by the CLI cases.
struct Fixture {
  TempDir dir;
  std::string cat, det;
  Fixture() {
    cat = dir.file("cat.csv");
    det = dir.file("det.jsonl");
    const CliResult r = run_cli(dir, "gen-benchmark --n-targets 40 --n-queries 12 --seed 3"
                                     " --catalog-out " + cat + " --detections-out " + det);
    REQUIRE(r.exit_code == 0);
  }
};

}  // namespace

TEST_CASE("help exits 0 for every command") {
  TempDir dir;
  for (const char* cmd : {"", "embed", "match", "eval", "gen-benchmark", "corrupt",
                          "gen-rerank-data", "train"}) {
    const CliResult r = run_cli(dir, std::string(cmd) + " --help");
    CAPTURE(cmd);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("Usage") != std::string::npos);
  }
}

TEST_CASE("unknown flags and bad combos exit 2") {
  Fixture fx;
  CHECK(run_cli(fx.dir, "match --bogus").exit_code == 2);
  CHECK(run_cli(fx.dir, "nosuchcommand").exit_code == 2);
  const CliResult r = run_cli(fx.dir, "match --detections " + fx.det + " --catalog " + fx.cat +
                                          " --stage1 fuzzy --stage2 hungarian --out -");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("error:") == 0);
}

TEST_CASE("missing and malformed inputs exit 3") {
  Fixture fx;
  CHECK(run_cli(fx.dir, "match --detections absent.jsonl --catalog " + fx.cat +
                            " --out -").exit_code == 3);
  const std::string bad = fx.dir.file("bad.csv");
  write_file(bad, "id,author,title,isbn\nb1,a,t,\nb1,a,t,\n");
  CHECK(run_cli(fx.dir, "match --detections " + fx.det + " --catalog " + bad +
                            " --out -").exit_code == 3);
}

TEST_CASE("oversized dense request exits 4 and suggests the streamed path") {
  Fixture fx;
  const CliResult r = run_cli(fx.dir, "match --detections " + fx.det + " --catalog " + fx.cat +
                                          " --stage2 hungarian --dense-limit 10 --out -");
  CHECK(r.exit_code == 4);
  CHECK(r.err.find("rerank") != std::string::npos);
}

TEST_CASE("zero-corruption benchmark scores accuracy 1 under every matcher") {
  TempDir dir;
  const std::string cat = dir.file("cat.csv");
  const std::string det = dir.file("det.jsonl");
  REQUIRE(run_cli(dir, "gen-benchmark --n-targets 30 --n-queries 10 --seed 9"
                       " --p-char-del 0 --p-char-sub 0 --p-word-del 0 --p-word-rep 0"
                       " --catalog-out " + cat + " --detections-out " + det).exit_code == 0);
  for (const std::string flags :
       {std::string("--stage1 fuzzy"), std::string("--stage1 embed"),
        std::string("--stage1 embed --stage2 hungarian")}) {
    const std::string m = dir.file("m.jsonl");
    REQUIRE(run_cli(dir, "match --detections " + det + " --catalog " + cat + " " + flags +
                             " --out " + m).exit_code == 0);
    const CliResult r = run_cli(dir, "eval --matches " + m + " --detections " + det);
    CAPTURE(flags);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("accuracy=1.000000") != std::string::npos);
  }
}

TEST_CASE("eval writes a machine-readable report") {
  Fixture fx;
  const std::string m = fx.dir.file("m.jsonl");
  REQUIRE(run_cli(fx.dir, "match --detections " + fx.det + " --catalog " + fx.cat +
                              " --out " + m).exit_code == 0);
  const std::string rep = fx.dir.file("rep.json");
  const CliResult r = run_cli(fx.dir, "eval --matches " + m + " --detections " + fx.det +
                                          " --mode matching-only --report " + rep);
  CHECK(r.exit_code == 0);
  const std::string body = read_file(rep);
  CHECK(body.find("\"accuracy\"") != std::string::npos);
  CHECK(body.find("\"n_total\"") != std::string::npos);

  // Eval joining matches against foreign detections fails loudly.
  const std::string det2 = fx.dir.file("det2.jsonl");
  write_file(det2,
             "{\"image_id\":\"zz\",\"segment_id\":\"s0\",\"ocr_text\":\"x\",\"gt_ids\":[\"b1\"]}\n");
  CHECK(run_cli(fx.dir, "eval --matches " + m + " --detections " + det2).exit_code == 3);
}

TEST_CASE("match writes identical bytes to stdout and to a file") {
  Fixture fx;
  const std::string m = fx.dir.file("m.jsonl");
  REQUIRE(run_cli(fx.dir, "match --detections " + fx.det + " --catalog " + fx.cat +
                              " --stage2 hungarian --out " + m).exit_code == 0);
  const CliResult r = run_cli(fx.dir, "match --detections " + fx.det + " --catalog " + fx.cat +
                                          " --stage2 hungarian --out -");
  CHECK(r.exit_code == 0);
  CHECK(r.out == read_file(m));
}

TEST_CASE("gen-benchmark is byte deterministic") {
  TempDir dir;
  const std::string base = "gen-benchmark --n-targets 25 --n-queries 10 --nil-fraction 0.2";
  REQUIRE(run_cli(dir, base + " --seed 31 --catalog-out " + dir.file("c1.csv") +
                       " --detections-out " + dir.file("d1.jsonl")).exit_code == 0);
  REQUIRE(run_cli(dir, base + " --seed 31 --catalog-out " + dir.file("c2.csv") +
                       " --detections-out " + dir.file("d2.jsonl")).exit_code == 0);
  CHECK(read_file(dir.file("c1.csv")) == read_file(dir.file("c2.csv")));
  CHECK(read_file(dir.file("d1.jsonl")) == read_file(dir.file("d2.jsonl")));
  REQUIRE(run_cli(dir, base + " --seed 32 --catalog-out " + dir.file("c3.csv") +
                       " --detections-out " + dir.file("d3.jsonl")).exit_code == 0);
  CHECK(read_file(dir.file("c1.csv")) != read_file(dir.file("c3.csv")));
}

TEST_CASE("corrupt command rewrites ocr_text deterministically") {
  Fixture fx;
  const std::string out1 = fx.dir.file("c1.jsonl");
  const std::string out2 = fx.dir.file("c2.jsonl");
  REQUIRE(run_cli(fx.dir, "corrupt --in " + fx.det + " --out " + out1 + " --seed 5 --catalog " +
                              fx.cat).exit_code == 0);
  REQUIRE(run_cli(fx.dir, "corrupt --in " + fx.det + " --out " + out2 + " --seed 5 --catalog " +
                              fx.cat).exit_code == 0);
  CHECK(read_file(out1) == read_file(out2));
  CHECK(read_file(out1) != read_file(fx.det));
}

TEST_CASE("embed then match from the embeddings file reproduces direct matching") {
  Fixture fx;
  const std::string emb = fx.dir.file("cat.emb");
  REQUIRE(run_cli(fx.dir, "embed --catalog " + fx.cat + " --out " + emb).exit_code == 0);
  const std::string m1 = fx.dir.file("m1.jsonl");
  const std::string m2 = fx.dir.file("m2.jsonl");
  REQUIRE(run_cli(fx.dir, "match --detections " + fx.det + " --catalog " + fx.cat +
                              " --out " + m1).exit_code == 0);
  REQUIRE(run_cli(fx.dir, "match --detections " + fx.det + " --catalog " + fx.cat +
                              " --target-emb " + emb + " --out " + m2).exit_code == 0);
  CHECK(read_file(m1) == read_file(m2));
}

TEST_CASE("train pipeline: gen-rerank-data, train, match with the model") {
  TempDir dir;
  const std::string cat = dir.file("cat.csv");
  const std::string det = dir.file("det.jsonl");
  REQUIRE(run_cli(dir, "gen-benchmark --n-targets 60 --n-queries 15 --seed 23"
                       " --catalog-out " + cat + " --detections-out " + det).exit_code == 0);
  const std::string samples = dir.file("samples.jsonl");
  REQUIRE(run_cli(dir, "gen-rerank-data --catalog " + cat + " --out " + samples +
                       " --topk 5 --n-samples 300 --data-seed 2").exit_code == 0);
  const std::string model = dir.file("model.json");
  REQUIRE(run_cli(dir, "train --samples " + samples + " --out " + model).exit_code == 0);
  CHECK(read_file(model).find("\"weights\"") != std::string::npos);

  const std::string m = dir.file("m.jsonl");
  const CliResult r = run_cli(dir, "match --detections " + det + " --catalog " + cat +
                                       " --stage2 rerank --topk 5 --model " + model +
                                       " --out " + m);
  CHECK(r.exit_code == 0);
  CHECK(run_cli(dir, "eval --matches " + m + " --detections " + det).exit_code == 0);

  // Training on an empty samples file is a usage error.
  const std::string empty = dir.file("empty.jsonl");
  write_file(empty, "");
  CHECK(run_cli(dir, "train --samples " + empty + " --out " + model).exit_code == 2);
}
