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

#include "sweepret/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "sweepret/baselines.hpp"
#include "sweepret/checkpoint.hpp"
#include "sweepret/config.hpp"
#include "sweepret/error.hpp"
#include "sweepret/evaluation.hpp"
#include "sweepret/kernels.hpp"
#include "sweepret/phantom.hpp"
#include "sweepret/retrieval.hpp"
#include "sweepret/training.hpp"

#ifndef SWEEPRET_VERSION
#define SWEEPRET_VERSION "0.1.0"
#endif

namespace sweepret {

const char* version_string() { return SWEEPRET_VERSION; }

namespace {

using nlohmann::json;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string baseline;
  std::string ablation;
  bool desk = false;
  std::string out;
};

AppConfig resolve_config(const Common& c) {
  AppConfig cfg = c.config_path.empty() ? AppConfig{} : load_config(c.config_path);
  if (c.seed) {
    cfg.train.seed = *c.seed;
    cfg.phantom.seed = *c.seed;
    cfg.eval.seed = *c.seed;
  }
  if (!c.baseline.empty()) cfg.train.baseline = parse_baseline_kind(c.baseline);
  if (!c.ablation.empty()) cfg.loss.mode = parse_ablation_mode(c.ablation);
  return cfg;
}

void emit(std::ostream& out, const json& j) { out << j.dump() << '\n' << std::flush; }

int run_gen_synth(const Common& c, std::ostream& out, std::ostream& err) {
  const AppConfig cfg = resolve_config(c);
  const std::filesystem::path root = c.out;
  const std::size_t total = cfg.splits.train_sweeps + cfg.splits.val_sweeps + cfg.splits.test_sweeps;
  err << "generating " << total << " phantom sweeps under " << root << "\n";
  for (std::size_t k = 0; k < total; ++k) {
    const char* split = k < cfg.splits.train_sweeps                            ? "train"
                        : k < cfg.splits.train_sweeps + cfg.splits.val_sweeps ? "val"
                                                                               : "test";
    Sweep s = generate_phantom_sweep(cfg.phantom, k);
    save_sweep(s, root / split / s.id);
    emit(out, {{"event", "sweep"}, {"split", split}, {"id", s.id}, {"frames", s.size()}});
  }
  return 0;
}

int run_train(const Common& c, std::optional<std::int64_t> epochs, std::ostream& out, std::ostream& err) {
  const AppConfig cfg = resolve_config(c);
  const auto train_set = load_sweep_set(cfg.data.train_dir);
  const auto val_set = std::filesystem::exists(cfg.data.val_dir) ? load_sweep_set(cfg.data.val_dir)
                                                                 : std::vector<Sweep>{};
  TrainOptions opt;
  opt.epochs = epochs.value_or(c.desk ? cfg.train.desk_max_epochs : cfg.train.max_epochs);
  opt.out_dir = c.out;
  opt.provenance = {{"version", version_string()}, {"kernels", kernels::active().name}};
  emit(out, {{"event", "config"}, {"version", version_string()}, {"epochs", opt.epochs}, {"config", to_json(cfg)}});
  err << "training " << to_string(cfg.train.baseline) << " (" << to_string(cfg.loss.mode) << ") on "
      << train_set.size() << " sweeps, " << val_set.size() << " validation sweeps, " << opt.epochs << " epochs\n";
  opt.on_epoch = [&](const EpochRecord& r) {
    emit(out, to_json(r));
    err << "epoch " << r.epoch << " train " << r.train_loss;
    if (r.val_loss) err << " val " << *r.val_loss;
    err << (r.improved ? " *" : "") << "\n";
  };
  const TrainResult res = train(cfg, train_set, val_set, opt);
  emit(out, {{"event", "trained"},
             {"checkpoint", res.best_checkpoint.string()},
             {"best_epoch", res.best_epoch},
             {"best_loss", res.best_loss}});
  return 0;
}

std::filesystem::path checkpoint_for(const std::string& flag, const AppConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.eval.checkpoint.empty()) return cfg.eval.checkpoint;
  throw Error(ErrorCode::kConfig, "checkpoint", "pass --checkpoint or set [eval] checkpoint");
}

int run_build_index(const Common& c, const std::string& ckpt, const std::string& sweep_dir, std::ostream& out,
                    std::ostream& err) {
  const AppConfig cfg = resolve_config(c);
  const auto path = checkpoint_for(ckpt, cfg);
  Checkpoint ck = load_checkpoint(path);
  const Sweep sweep = load_sweep(sweep_dir);
  const EmbeddingIndex index = build_index(sweep, ck.model);
  save_index(c.out, index);
  err << "indexed " << index.entries.size() << " frames of " << sweep.id << "\n";
  emit(out, {{"event", "index"},
             {"path", c.out},
             {"sweep_id", index.sweep_id},
             {"entries", index.entries.size()},
             {"embedding_dim", index.embedding_dim},
             {"alpha", index.alpha}});
  return 0;
}

int run_query(const Common& c, const std::string& index_path, const std::string& ckpt,
              const std::vector<std::string>& images, std::ostream& out) {
  const AppConfig cfg = resolve_config(c);
  Checkpoint ck = load_checkpoint(checkpoint_for(ckpt, cfg));
  const EmbeddingIndex index = load_index(index_path);
  std::vector<Image> loaded;
  for (const auto& p : images) loaded.push_back(read_pgm(p));
  const auto results = batch_query(index, ck.model, loaded);
  for (std::size_t i = 0; i < results.size(); ++i) {
    json j = to_json(results[i]);
    j["image"] = images[i];
    emit(out, j);
  }
  return 0;
}

int run_evaluate(const Common& c, const std::string& ckpt, std::ostream& out, std::ostream& err) {
  const AppConfig cfg = resolve_config(c);
  const auto test_set = load_sweep_set(cfg.data.test_dir);
  if (test_set.empty()) throw Error(ErrorCode::kConfig, "data.test_dir", "no test sweeps found");
  const BaselineKind kind = cfg.train.baseline;
  std::optional<Checkpoint> ck;
  if (kind != BaselineKind::kNcc) ck = load_checkpoint(checkpoint_for(ckpt, cfg));

  std::vector<EvalReport> per_sweep;
  json sweeps = json::array();
  for (std::size_t s = 0; s < test_set.size(); ++s) {
    Sweep sweep = test_set[s];
    for (auto& f : sweep.frames) f.image = prepare_image(f.image, cfg.encoder);
    QuerySimulation sim{cfg.eval.queries_per_sweep, cfg.eval.half_width, cfg.eval.affine, cfg.eval.seed + s, false};
    const auto queries = simulate_queries(test_set[s], sim);
    EvalReport r = kind == BaselineKind::kNcc
                       ? evaluate(NccDatabase(sweep), queries, cfg.eval.success_threshold_mm)
                       : evaluate(build_index(sweep, ck->model), ck->model, queries, cfg.eval.success_threshold_mm);
    json sj = to_json(r, false);
    sj["sweep_id"] = sweep.id;
    sweeps.push_back(sj);
    err << sweep.id << ": success " << r.success_rate << ", rejected " << r.rejection_rate << "\n";
    per_sweep.push_back(std::move(r));
  }
  const EvalReport all = merge_reports(per_sweep);
  json summary = to_json(all, false);
  summary["event"] = "report";
  summary["baseline"] = to_string(kind);
  summary["version"] = version_string();
  summary["per_sweep"] = sweeps;
  emit(out, summary);

  if (!c.out.empty()) {
    std::filesystem::create_directories(c.out);
    json report = to_json(all, true);
    report["baseline"] = to_string(kind);
    report["version"] = version_string();
    report["per_sweep"] = sweeps;
    report["config"] = to_json(cfg);
    report["config_text"] = cfg.source_text;
    if (ck) report["checkpoint_provenance"] = ck->provenance;
    std::ofstream f(std::filesystem::path(c.out) / "report.json");
    f << report.dump(2) << '\n';
    if (!f) throw Error(ErrorCode::kIo, c.out, "cannot write report.json");
  }
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Intra-sweep contrastive retrieval for tracked ultrasound sweeps", "sweepret"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version_string()));

  Common common;
  auto add_common = [&](CLI::App* sub, bool out_required) {
    sub->add_option("--config", common.config_path, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Override the run seeds");
    sub->add_option("--baseline", common.baseline, "ncc|inter-sweep|ivpp|distance-ivpp|ours");
    sub->add_option("--ablation", common.ablation, "sce|p1|p2|full");
    sub->add_flag("--desk", common.desk, "Use the desk-scale epoch budget");
    auto* o = sub->add_option("--out", common.out, "Output directory or file");
    if (out_required) o->required();
  };

  auto* gen = app.add_subcommand("gen-synth", "Generate phantom sweeps split into train/val/test");
  add_common(gen, true);

  auto* tr = app.add_subcommand("train", "Train an encoder and dustbin; keeps the best validation checkpoint");
  add_common(tr, true);
  std::optional<std::int64_t> epochs;
  tr->add_option("--epochs", epochs, "Override the epoch budget");

  std::string ckpt, sweep_dir, index_path;
  std::vector<std::string> images;
  auto* bi = app.add_subcommand("build-index", "Embed every frame of a sweep into an index file");
  add_common(bi, true);
  bi->add_option("--checkpoint", ckpt, "Checkpoint file");
  bi->add_option("--sweep", sweep_dir, "Sweep directory")->required();

  auto* q = app.add_subcommand("query", "Retrieve the closest database frame for query images");
  add_common(q, false);
  q->add_option("--index", index_path, "Index file")->required()->check(CLI::ExistingFile);
  q->add_option("--checkpoint", ckpt, "Checkpoint file");
  q->add_option("--image", images, "Query image (PGM), repeatable")->required();

  auto* ev = app.add_subcommand("evaluate", "Run the simulated query protocol on the test sweeps");
  add_common(ev, false);
  ev->add_option("--checkpoint", ckpt, "Checkpoint file");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return run_gen_synth(common, out, err);
    if (*tr) return run_train(common, epochs, out, err);
    if (*bi) return run_build_index(common, ckpt, sweep_dir, out, err);
    if (*q) return run_query(common, index_path, ckpt, images, out);
    if (*ev) return run_evaluate(common, ckpt, out, err);
  } catch (const Error& e) {
    emit(out, {{"event", "error"}, {"code", to_string(e.code())}, {"context", e.context()}, {"message", e.detail()}});
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    emit(out, {{"event", "error"}, {"code", "internal"}, {"context", ""}, {"message", e.what()}});
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace sweepret
