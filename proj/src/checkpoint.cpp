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

#include "sweepret/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "sweepret/error.hpp"

namespace sweepret {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

using nlohmann::json;

namespace {

class Writer {
 public:
  void u32(std::uint32_t v) { raw(&v, 4); }
  void f32(float v) { raw(&v, 4); }
  void bytes(const std::string& s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void raw(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void record(const std::string& name, const Shape& shape, std::span<const float> values) {
    u32(static_cast<std::uint32_t>(name.size()));
    bytes(name);
    u32(static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) u32(static_cast<std::uint32_t>(d));
    raw(values.data(), values.size() * sizeof(float));
  }
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(std::vector<char> data, std::string ctx) : data_(std::move(data)), ctx_(std::move(ctx)) {}

  void need(std::size_t n, const char* what) {
    if (pos_ + n > data_.size()) {
      throw Error(ErrorCode::kFormat, ctx_, std::string("truncated file while reading ") + what);
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v;
    std::memcpy(&v, data_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  void floats(float* out, std::size_t n, const char* what) {
    need(n * sizeof(float), what);
    std::memcpy(out, data_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }
  bool done() const { return pos_ == data_.size(); }
  const std::string& ctx() const { return ctx_; }

 private:
  std::vector<char> data_;
  std::string ctx_;
  std::size_t pos_ = 0;
};

struct Record {
  Shape shape;
  std::vector<float> values;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model<float>& model,
                     const AdamState<float>& optimizer, std::int64_t epoch, const json& provenance) {
  const auto& enc = model.encoder;
  const std::size_t n_params = enc.params.size() + 1;
  const bool has_moments = optimizer.first_moment.size() == n_params;
  const std::size_t record_count =
      enc.params.size() + enc.buffers.size() + 1 + (has_moments ? 2 * n_params : 0);

  json header = {{"encoder", to_json(enc.config)},
                 {"init_seed", enc.init_seed},
                 {"epoch", epoch},
                 {"adam",
                  {{"step_count", optimizer.step_count},
                   {"learning_rate", optimizer.learning_rate},
                   {"beta1", optimizer.beta1},
                   {"beta2", optimizer.beta2},
                   {"epsilon", optimizer.epsilon},
                   {"has_moments", has_moments}}},
                 {"record_count", record_count},
                 {"provenance", provenance}};
  const std::string header_text = header.dump();

  Writer w;
  w.raw(kCheckpointMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(header_text.size()));
  w.bytes(header_text);
  for (const auto& p : enc.params) w.record(p.name, p.value.shape, p.value.data);
  for (const auto& b : enc.buffers) w.record(b.name, Shape{b.data.size()}, b.data);
  w.record(model.dustbin.name, model.dustbin.value.shape, model.dustbin.value.data);
  if (has_moments) {
    std::vector<const Parameter<float>*> all;
    for (const auto& p : enc.params) all.push_back(&p);
    all.push_back(&model.dustbin);
    for (std::size_t i = 0; i < all.size(); ++i) {
      w.record("adam.m/" + all[i]->name, optimizer.first_moment[i].shape, optimizer.first_moment[i].data);
      w.record("adam.v/" + all[i]->name, optimizer.second_moment[i].shape, optimizer.second_moment[i].data);
    }
  }

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw Error(ErrorCode::kIo, path.string(), "cannot open checkpoint for writing");
    f.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
    if (!f) throw Error(ErrorCode::kIo, path.string(), "checkpoint write failed");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, path.string(), "cannot open checkpoint");
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(f), {}), path.string());

  if (r.bytes(4, "magic") != std::string(kCheckpointMagic, 4)) {
    throw Error(ErrorCode::kFormat, r.ctx(), "bad magic (not a SWMC checkpoint)");
  }
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kFormat, r.ctx(), "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t header_len = r.u32("header length");
  json header;
  try {
    header = json::parse(r.bytes(header_len, "header"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, r.ctx(), std::string("corrupt header: ") + e.what());
  }

  Checkpoint ck;
  std::size_t record_count = 0;
  bool has_moments = false;
  try {
    ck.model.encoder.config = encoder_config_from_json(header.at("encoder"));
    ck.model.encoder.init_seed = header.at("init_seed").get<std::uint64_t>();
    ck.epoch = header.at("epoch").get<std::int64_t>();
    const json& adam = header.at("adam");
    ck.optimizer.step_count = adam.at("step_count").get<std::int64_t>();
    ck.optimizer.learning_rate = adam.at("learning_rate").get<double>();
    ck.optimizer.beta1 = adam.at("beta1").get<double>();
    ck.optimizer.beta2 = adam.at("beta2").get<double>();
    ck.optimizer.epsilon = adam.at("epsilon").get<double>();
    has_moments = adam.at("has_moments").get<bool>();
    record_count = header.at("record_count").get<std::size_t>();
    ck.provenance = header.value("provenance", json::object());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, r.ctx(), std::string("bad header field: ") + e.what());
  }

  std::map<std::string, Record> records;
  for (std::size_t k = 0; k < record_count; ++k) {
    const std::uint32_t name_len = r.u32("record name length");
    std::string name = r.bytes(name_len, "record name");
    const std::uint32_t rank = r.u32("record rank");
    if (rank > 8) throw Error(ErrorCode::kFormat, r.ctx(), "implausible rank for record '" + name + "'");
    Record rec;
    for (std::uint32_t d = 0; d < rank; ++d) rec.shape.push_back(r.u32("record dims"));
    rec.values.resize(numel(rec.shape));
    r.floats(rec.values.data(), rec.values.size(), "record values");
    if (!records.emplace(name, std::move(rec)).second) {
      throw Error(ErrorCode::kFormat, r.ctx(), "duplicate record '" + name + "'");
    }
  }
  if (!r.done()) throw Error(ErrorCode::kFormat, r.ctx(), "trailing bytes after the last record");

  auto take = [&](const std::string& name, const Shape& expect) -> std::vector<float> {
    auto it = records.find(name);
    if (it == records.end()) throw Error(ErrorCode::kFormat, r.ctx(), "missing record '" + name + "'");
    if (it->second.shape != expect) {
      throw Error(ErrorCode::kShapeMismatch, r.ctx(),
                  "record '" + name + "' has shape " + shape_str(it->second.shape) + ", config implies " +
                      shape_str(expect));
    }
    std::vector<float> v = std::move(it->second.values);
    records.erase(it);
    return v;
  };

  auto& enc = ck.model.encoder;
  for (const ParamSpec& spec : parameter_layout(enc.config)) {
    std::vector<float> v = take(spec.name, spec.shape);
    if (spec.is_buffer) {
      enc.buffers.push_back({spec.name, std::move(v)});
    } else {
      enc.params.emplace_back(spec.name, Tensor<float>(spec.shape, std::move(v)));
    }
  }
  enc.rebuild_index();
  ck.model.dustbin = Parameter<float>("dustbin.alpha", Tensor<float>(Shape{}, take("dustbin.alpha", Shape{})));
  if (has_moments) {
    auto all = ck.model.trainable();
    for (const Parameter<float>* p : all) {
      ck.optimizer.first_moment.emplace_back(p->value.shape, take("adam.m/" + p->name, p->value.shape));
      ck.optimizer.second_moment.emplace_back(p->value.shape, take("adam.v/" + p->name, p->value.shape));
    }
  }
  if (!records.empty()) {
    throw Error(ErrorCode::kFormat, r.ctx(), "unexpected record '" + records.begin()->first + "'");
  }
  return ck;
}

}  // namespace sweepret
