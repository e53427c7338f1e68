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

#include "sweepret/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sweepret/error.hpp"

namespace sweepret {

namespace {

using Setter = std::function<void(const std::string&)>;
using Table = std::map<std::string, std::map<std::string, Setter>>;

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& what) {
  throw Error(ErrorCode::kConfig, key, "cannot parse '" + value + "' as " + what);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    bad(key, v, "a number");
  }
  if (used != v.size()) bad(key, v, "a number");
  return d;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long n = 0;
  try {
    n = std::stoll(v, &used);
  } catch (const std::exception&) {
    bad(key, v, "an integer");
  }
  if (used != v.size()) bad(key, v, "an integer");
  return n;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  const std::int64_t n = to_int(key, v);
  if (n < 0) bad(key, v, "a non-negative integer");
  return static_cast<std::size_t>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string l = boost::algorithm::to_lower_copy(v);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  bad(key, v, "a boolean");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, v, boost::algorithm::is_any_of(","));
  for (auto& p : parts) boost::algorithm::trim(p);
  return parts;
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& p : split_list(v)) out.push_back(to_size(key, p));
  return out;
}

Range to_range(const std::string& key, const std::string& v) {
  auto parts = split_list(v);
  if (parts.size() != 2) bad(key, v, "a range 'lo, hi'");
  return {to_double(key, parts[0]), to_double(key, parts[1])};
}

std::string range_str(const Range& r) {
  std::ostringstream s;
  s << r.lo << ", " << r.hi;
  return s.str();
}

Table make_table(AppConfig& c, std::vector<std::size_t>& channels, std::vector<std::size_t>& blocks,
                 std::vector<std::size_t>& strides) {
  Table t;
  auto& d = t["data"];
  d["train_dir"] = [&](const std::string& v) { c.data.train_dir = v; };
  d["val_dir"] = [&](const std::string& v) { c.data.val_dir = v; };
  d["test_dir"] = [&](const std::string& v) { c.data.test_dir = v; };

  auto& p = t["phantom"];
  p["volume_dims_voxels"] = [&](const std::string& v) {
    auto dims = to_sizes("phantom.volume_dims_voxels", v);
    if (dims.size() != 3) bad("phantom.volume_dims_voxels", v, "three sizes 'nx, ny, nz'");
    c.phantom.volume_dims_voxels = {dims[0], dims[1], dims[2]};
  };
  p["voxel_mm"] = [&](const std::string& v) { c.phantom.voxel_mm = to_double("phantom.voxel_mm", v); };
  p["inclusion_count"] = [&](const std::string& v) { c.phantom.inclusion_count = to_size("phantom.inclusion_count", v); };
  p["vessel_count"] = [&](const std::string& v) { c.phantom.vessel_count = to_size("phantom.vessel_count", v); };
  p["speckle_noise_sigma"] = [&](const std::string& v) {
    c.phantom.speckle_noise_sigma = to_double("phantom.speckle_noise_sigma", v);
  };
  p["sweep_length_frames"] = [&](const std::string& v) {
    c.phantom.sweep_length_frames = to_size("phantom.sweep_length_frames", v);
  };
  p["inter_frame_spacing_mm"] = [&](const std::string& v) {
    c.phantom.inter_frame_spacing_mm = to_double("phantom.inter_frame_spacing_mm", v);
  };
  p["trajectory_curvature"] = [&](const std::string& v) {
    c.phantom.trajectory_curvature = to_double("phantom.trajectory_curvature", v);
  };
  p["pose_jitter_mm"] = [&](const std::string& v) { c.phantom.pose_jitter_mm = to_double("phantom.pose_jitter_mm", v); };
  p["seed"] = [&](const std::string& v) { c.phantom.seed = static_cast<std::uint64_t>(to_int("phantom.seed", v)); };
  p["image_height"] = [&](const std::string& v) { c.phantom.image_height = to_size("phantom.image_height", v); };
  p["image_width"] = [&](const std::string& v) { c.phantom.image_width = to_size("phantom.image_width", v); };
  p["pixel_spacing_mm"] = [&](const std::string& v) {
    c.phantom.pixel_spacing_mm = to_double("phantom.pixel_spacing_mm", v);
  };
  p["frame_rate_hz"] = [&](const std::string& v) { c.phantom.frame_rate_hz = to_double("phantom.frame_rate_hz", v); };
  p["start_margin_mm"] = [&](const std::string& v) {
    c.phantom.start_margin_mm = to_double("phantom.start_margin_mm", v);
  };
  p["train_sweeps"] = [&](const std::string& v) { c.splits.train_sweeps = to_size("phantom.train_sweeps", v); };
  p["val_sweeps"] = [&](const std::string& v) { c.splits.val_sweeps = to_size("phantom.val_sweeps", v); };
  p["test_sweeps"] = [&](const std::string& v) { c.splits.test_sweeps = to_size("phantom.test_sweeps", v); };

  auto& e = t["encoder"];
  e["input_height"] = [&](const std::string& v) { c.encoder.input_height = to_size("encoder.input_height", v); };
  e["input_width"] = [&](const std::string& v) { c.encoder.input_width = to_size("encoder.input_width", v); };
  e["stem_stride"] = [&](const std::string& v) { c.encoder.stem_stride = to_size("encoder.stem_stride", v); };
  e["stage_channels"] = [&](const std::string& v) { channels = to_sizes("encoder.stage_channels", v); };
  e["stage_blocks"] = [&](const std::string& v) { blocks = to_sizes("encoder.stage_blocks", v); };
  e["stage_strides"] = [&](const std::string& v) { strides = to_sizes("encoder.stage_strides", v); };
  e["embedding_dim"] = [&](const std::string& v) { c.encoder.embedding_dim = to_size("encoder.embedding_dim", v); };
  e["mlp_layers"] = [&](const std::string& v) { c.encoder.mlp_layers = to_size("encoder.mlp_layers", v); };
  e["mlp_width"] = [&](const std::string& v) { c.encoder.mlp_width = to_size("encoder.mlp_width", v); };
  e["mlp_order"] = [&](const std::string& v) {
    if (v == "linear-norm-relu") {
      c.encoder.mlp_order = MlpOrder::kLinearNormRelu;
    } else if (v == "linear-relu-norm") {
      c.encoder.mlp_order = MlpOrder::kLinearReluNorm;
    } else {
      bad("encoder.mlp_order", v, "linear-norm-relu|linear-relu-norm");
    }
  };
  e["bn_momentum"] = [&](const std::string& v) { c.encoder.bn_momentum = to_double("encoder.bn_momentum", v); };
  e["bn_eps"] = [&](const std::string& v) { c.encoder.bn_eps = to_double("encoder.bn_eps", v); };

  auto& l = t["loss"];
  l["tau"] = [&](const std::string& v) { c.loss.tau = to_double("loss.tau", v); };
  l["triplet_weight"] = [&](const std::string& v) { c.loss.triplet_weight = to_double("loss.triplet_weight", v); };
  l["triplet_distance_norm_mm"] = [&](const std::string& v) {
    c.loss.triplet_distance_norm_mm = to_double("loss.triplet_distance_norm_mm", v);
  };
  l["logit_scale_mode"] = [&](const std::string& v) { c.loss.logit_scale = parse_logit_scale(v); };
  l["batch_mean"] = [&](const std::string& v) { c.loss.batch_mean = to_bool("loss.batch_mean", v); };
  l["triplet_similarity"] = [&](const std::string& v) { c.loss.triplet_similarity = parse_triplet_similarity(v); };
  l["mode"] = [&](const std::string& v) { c.loss.mode = parse_ablation_mode(v); };

  auto& a = t["augment"];
  a["rotation_deg"] = [&](const std::string& v) { c.augment.rotation_deg = to_range("augment.rotation_deg", v); };
  a["translate_frac"] = [&](const std::string& v) { c.augment.translate_frac = to_range("augment.translate_frac", v); };
  a["scale"] = [&](const std::string& v) { c.augment.scale = to_range("augment.scale", v); };
  a["crop_scale"] = [&](const std::string& v) { c.augment.crop_scale = to_range("augment.crop_scale", v); };
  a["brightness_delta"] = [&](const std::string& v) {
    c.augment.brightness_delta = to_range("augment.brightness_delta", v);
  };
  a["contrast_factor"] = [&](const std::string& v) { c.augment.contrast_factor = to_range("augment.contrast_factor", v); };

  auto& o = t["optimizer"];
  o["learning_rate"] = [&](const std::string& v) { c.optimizer.adam.learning_rate = to_double("optimizer.learning_rate", v); };
  o["beta1"] = [&](const std::string& v) { c.optimizer.adam.beta1 = to_double("optimizer.beta1", v); };
  o["beta2"] = [&](const std::string& v) { c.optimizer.adam.beta2 = to_double("optimizer.beta2", v); };
  o["epsilon"] = [&](const std::string& v) { c.optimizer.adam.epsilon = to_double("optimizer.epsilon", v); };
  o["step_size"] = [&](const std::string& v) { c.optimizer.step_size = to_int("optimizer.step_size", v); };
  o["gamma"] = [&](const std::string& v) { c.optimizer.gamma = to_double("optimizer.gamma", v); };

  auto& s = t["sampler"];
  s["batch_size"] = [&](const std::string& v) { c.sampler.batch_size = to_size("sampler.batch_size", v); };
  s["overlap"] = [&](const std::string& v) { c.sampler.overlap = to_double("sampler.overlap", v); };
  s["positive_threshold_mm"] = [&](const std::string& v) {
    c.sampler.positive_threshold_mm = to_double("sampler.positive_threshold_mm", v);
  };
  s["ivpp_delta_t"] = [&](const std::string& v) { c.sampler.ivpp_delta_t = to_int("sampler.ivpp_delta_t", v); };
  s["ivpp_delta_probe_mm"] = [&](const std::string& v) {
    c.sampler.ivpp_delta_probe_mm = to_double("sampler.ivpp_delta_probe_mm", v);
  };

  auto& tr = t["train"];
  tr["max_epochs"] = [&](const std::string& v) { c.train.max_epochs = to_int("train.max_epochs", v); };
  tr["desk_max_epochs"] = [&](const std::string& v) { c.train.desk_max_epochs = to_int("train.desk_max_epochs", v); };
  tr["seed"] = [&](const std::string& v) { c.train.seed = static_cast<std::uint64_t>(to_int("train.seed", v)); };
  tr["validation_seed"] = [&](const std::string& v) {
    c.train.validation_seed = static_cast<std::uint64_t>(to_int("train.validation_seed", v));
  };
  tr["baseline"] = [&](const std::string& v) { c.train.baseline = parse_baseline_kind(v); };

  auto& ev = t["eval"];
  ev["queries_per_sweep"] = [&](const std::string& v) { c.eval.queries_per_sweep = to_size("eval.queries_per_sweep", v); };
  ev["half_width"] = [&](const std::string& v) { c.eval.half_width = to_size("eval.half_width", v); };
  ev["success_threshold_mm"] = [&](const std::string& v) {
    c.eval.success_threshold_mm = to_double("eval.success_threshold_mm", v);
  };
  ev["rotation_deg"] = [&](const std::string& v) { c.eval.affine.rotation_deg = to_range("eval.rotation_deg", v); };
  ev["translation_frac"] = [&](const std::string& v) {
    c.eval.affine.translation_frac = to_range("eval.translation_frac", v);
  };
  ev["scale"] = [&](const std::string& v) { c.eval.affine.scale = to_range("eval.scale", v); };
  ev["seed"] = [&](const std::string& v) { c.eval.seed = static_cast<std::uint64_t>(to_int("eval.seed", v)); };
  ev["checkpoint"] = [&](const std::string& v) { c.eval.checkpoint = v; };
  return t;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

}  // namespace

AppConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::kConfig, "line " + std::to_string(e.line()), e.message());
  }

  AppConfig c;
  std::vector<std::size_t> channels, blocks, strides;
  for (const auto& s : c.encoder.conv_stages) {
    channels.push_back(s.channels);
    blocks.push_back(s.blocks);
    strides.push_back(s.stride);
  }
  const Table table = make_table(c, channels, blocks, strides);

  for (const auto& [section, keys] : tree) {
    auto sec = table.find(section);
    if (sec == table.end()) {
      if (keys.empty()) throw Error(ErrorCode::kConfig, section, "keys must live inside a [section]");
      throw Error(ErrorCode::kConfig, section, "unknown section");
    }
    for (const auto& [key, node] : keys) {
      auto it = sec->second.find(key);
      if (it == sec->second.end()) throw Error(ErrorCode::kConfig, section + "." + key, "unknown key");
      it->second(boost::algorithm::trim_copy(node.data()));
    }
  }

  if (channels.size() != blocks.size() || channels.size() != strides.size()) {
    throw Error(ErrorCode::kConfig, "encoder.stage_channels",
                "stage_channels, stage_blocks and stage_strides must have the same length");
  }
  c.encoder.conv_stages.clear();
  for (std::size_t i = 0; i < channels.size(); ++i) c.encoder.conv_stages.push_back({channels[i], blocks[i], strides[i]});

  c.data.train_dir = resolve(base_dir, c.data.train_dir);
  c.data.val_dir = resolve(base_dir, c.data.val_dir);
  c.data.test_dir = resolve(base_dir, c.data.test_dir);
  c.eval.checkpoint = resolve(base_dir, c.eval.checkpoint);
  c.source_text = text;
  validate(c);
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, path.string(), "cannot open config file");
  std::ostringstream s;
  s << f.rdbuf();
  return parse_config(s.str(), path.parent_path());
}

void validate(const AppConfig& c) {
  try {
    validate(c.encoder);
    validate(c.loss);
    validate(c.augment);
    validate_phantom_config(c.phantom);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    throw Error(ErrorCode::kConfig, e.context(), e.detail());
  }
  auto fail = [](const std::string& key, const std::string& msg) { throw Error(ErrorCode::kConfig, key, msg); };
  if (c.sampler.batch_size < 2) fail("sampler.batch_size", "must be at least 2");
  if (!(c.sampler.overlap >= 0.0 && c.sampler.overlap <= 1.0)) fail("sampler.overlap", "must lie in [0, 1]");
  if (!(c.sampler.positive_threshold_mm > 0.0)) fail("sampler.positive_threshold_mm", "must be positive");
  if (c.sampler.ivpp_delta_t < 0) fail("sampler.ivpp_delta_t", "must be >= 0");
  if (c.sampler.ivpp_delta_probe_mm < 0.0) fail("sampler.ivpp_delta_probe_mm", "must be >= 0");
  if (!(c.optimizer.adam.learning_rate > 0.0)) fail("optimizer.learning_rate", "must be positive");
  if (c.optimizer.step_size <= 0) fail("optimizer.step_size", "must be positive");
  if (!(c.optimizer.gamma > 0.0)) fail("optimizer.gamma", "must be positive");
  if (c.train.max_epochs < 0 || c.train.desk_max_epochs < 0) fail("train.max_epochs", "must be >= 0");
  if (c.eval.queries_per_sweep == 0) fail("eval.queries_per_sweep", "must be positive");
  if (!(c.eval.success_threshold_mm > 0.0)) fail("eval.success_threshold_mm", "must be positive");
  for (const Range* r : {&c.eval.affine.rotation_deg, &c.eval.affine.translation_frac, &c.eval.affine.scale}) {
    if (r->lo > r->hi) fail("eval", "range lower bound exceeds upper bound");
  }
  if (!(c.eval.affine.scale.lo > 0.0)) fail("eval.scale", "must be positive");
}

nlohmann::json to_json(const AppConfig& c) {
  using nlohmann::json;
  json stages = json::array();
  for (const auto& s : c.encoder.conv_stages) stages.push_back({s.channels, s.blocks, s.stride});
  return {
      {"data",
       {{"train_dir", c.data.train_dir.string()},
        {"val_dir", c.data.val_dir.string()},
        {"test_dir", c.data.test_dir.string()}}},
      {"encoder", to_json(c.encoder)},
      {"loss", to_json(c.loss)},
      {"augment",
       {{"rotation_deg", range_str(c.augment.rotation_deg)},
        {"translate_frac", range_str(c.augment.translate_frac)},
        {"scale", range_str(c.augment.scale)},
        {"crop_scale", range_str(c.augment.crop_scale)},
        {"brightness_delta", range_str(c.augment.brightness_delta)},
        {"contrast_factor", range_str(c.augment.contrast_factor)}}},
      {"optimizer",
       {{"learning_rate", c.optimizer.adam.learning_rate},
        {"beta1", c.optimizer.adam.beta1},
        {"beta2", c.optimizer.adam.beta2},
        {"epsilon", c.optimizer.adam.epsilon},
        {"step_size", c.optimizer.step_size},
        {"gamma", c.optimizer.gamma}}},
      {"sampler",
       {{"batch_size", c.sampler.batch_size},
        {"overlap", c.sampler.overlap},
        {"positive_threshold_mm", c.sampler.positive_threshold_mm},
        {"ivpp_delta_t", c.sampler.ivpp_delta_t},
        {"ivpp_delta_probe_mm", c.sampler.ivpp_delta_probe_mm}}},
      {"train",
       {{"max_epochs", c.train.max_epochs},
        {"desk_max_epochs", c.train.desk_max_epochs},
        {"seed", c.train.seed},
        {"validation_seed", c.train.validation_seed},
        {"baseline", to_string(c.train.baseline)}}},
      {"eval",
       {{"queries_per_sweep", c.eval.queries_per_sweep},
        {"half_width", c.eval.half_width},
        {"success_threshold_mm", c.eval.success_threshold_mm},
        {"rotation_deg", range_str(c.eval.affine.rotation_deg)},
        {"translation_frac", range_str(c.eval.affine.translation_frac)},
        {"scale", range_str(c.eval.affine.scale)},
        {"seed", c.eval.seed}}},
  };
}

}  // namespace sweepret
