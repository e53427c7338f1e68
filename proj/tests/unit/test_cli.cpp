// Copyright 2026 The sweepret Authors
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

#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fixtures.hpp"
#include "sweepret/cli.hpp"

using namespace sweepret;
using nlohmann::json;
using testsupport::TempDir;

namespace {

struct Run {
  int code = 0;
  std::vector<json> records;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "sweepret");
  std::ostringstream out, err;
  Run r;
  r.code = cli_main(args, out, err);
  r.err = err.str();
  std::istringstream lines(out.str());
  for (std::string line; std::getline(lines, line);) {
    if (line.empty() || line.front() != '{') continue;
    r.records.push_back(json::parse(line));
  }
  return r;
}

const json* find_event(const Run& r, const std::string& event) {
  for (const auto& j : r.records)
    if (j.value("event", "") == event) return &j;
  return nullptr;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"query", "--image", "x.pgm"}).code == 2);
  CHECK(run({"build-index", "--sweep", "x"}).code == 2);
  CHECK(run({"train", "--config", "/nonexistent.ini", "--out", "o"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("runtime errors exit with 1 and a JSON record") {
  TempDir dir("cli_err");
  std::ofstream(dir / "bad.ini") << "[loss]\nnope = 1\n";
  const Run r = run({"train", "--config", (dir / "bad.ini").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 1);
  const json* e = find_event(r, "error");
  REQUIRE(e);
  CHECK((*e)["code"] == "config");
  CHECK((*e)["context"] == "loss.nope");
  CHECK(run({"train", "--baseline", "simclr", "--out", (dir / "o").string()}).code == 1);
}

TEST_CASE("end-to-end on a tiny configuration") {
  TempDir dir("cli_e2e");
  const std::string cfg = (dir / "tiny.ini").string();
  std::ofstream(cfg) << testsupport::tiny_config_text();
  const std::string data = (dir / "data").string();

  const Run gen = run({"gen-synth", "--config", cfg, "--out", data});
  REQUIRE(gen.code == 0);
  CHECK(gen.records.size() == 4);
  CHECK(std::filesystem::exists(dir / "data/train/phantom_11_0/manifest.json"));
  CHECK(std::filesystem::exists(dir / "data/test/phantom_11_3"));

  const std::string model_dir = (dir / "model").string();
  const Run tr = run({"train", "--config", cfg, "--desk", "--out", model_dir});
  REQUIRE(tr.code == 0);
  const json* conf = find_event(tr, "config");
  REQUIRE(conf);
  CHECK((*conf)["epochs"] == 2);
  const json* done = find_event(tr, "trained");
  REQUIRE(done);
  const std::string ckpt = (*done)["checkpoint"];
  CHECK(std::filesystem::exists(ckpt));
  std::size_t epochs = 0;
  for (const auto& j : tr.records) epochs += j["event"] == "epoch";
  CHECK(epochs == 2);

  const Run abl = run({"train", "--config", cfg, "--ablation", "sce", "--epochs", "1", "--out", (dir / "m2").string()});
  REQUIRE(abl.code == 0);
  json a = (*find_event(abl, "config"))["config"], f = (*conf)["config"];
  CHECK(a["loss"]["mode"] != f["loss"]["mode"]);
  a["loss"].erase("mode");
  f["loss"].erase("mode");
  CHECK(a == f);

  const std::string index = (dir / "test.swix").string();
  const Run bi = run({"build-index", "--config", cfg, "--checkpoint", ckpt, "--sweep",
                      (dir / "data/test/phantom_11_3").string(), "--out", index});
  REQUIRE(bi.code == 0);
  CHECK((*find_event(bi, "index"))["entries"] == 40);

  const std::string frame = (dir / "data/test/phantom_11_3/frames/000007.pgm").string();
  const Run q = run({"query", "--index", index, "--checkpoint", ckpt, "--image", frame, "--image", frame});
  REQUIRE(q.code == 0);
  REQUIRE(q.records.size() == 2);
  CHECK(q.records[0] == q.records[1]);
  CHECK(q.records[0].contains("status"));

  const Run ev = run({"evaluate", "--config", cfg, "--checkpoint", ckpt, "--out", (dir / "rep").string()});
  REQUIRE(ev.code == 0);
  const json* rep = find_event(ev, "report");
  REQUIRE(rep);
  CHECK((*rep)["query_count"] == 6);
  CHECK((*rep)["per_sweep"].size() == 1);
  std::ifstream rf(dir / "rep/report.json");
  const json full = json::parse(rf);
  CHECK(full["records"].size() == 6);
  CHECK(full.contains("checkpoint_provenance"));

  const Run ncc = run({"evaluate", "--config", cfg, "--baseline", "ncc"});
  REQUIRE(ncc.code == 0);
  CHECK((*find_event(ncc, "report"))["rejected_count"] == 0);
  CHECK(run({"train", "--config", cfg, "--baseline", "ncc", "--out", (dir / "m3").string()}).code == 1);
}
