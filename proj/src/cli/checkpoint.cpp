// Copyright 2026 The RAMAVT Authors.
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

#include "cli/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <vector>

#include "common/error.hpp"

namespace ramavt::cli {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

class Writer {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void put_floats(const float* data, std::size_t n) {
    const auto* p = reinterpret_cast<const char*>(data);
    bytes_.insert(bytes_.end(), p, p + n * sizeof(float));
  }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  Reader(std::vector<char> bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  void need(std::size_t n) const {
    require(pos_ + n <= bytes_.size(), ErrorKind::kTruncated,
            path_ + ": checkpoint truncated at byte " + std::to_string(bytes_.size()));
  }
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  void get_floats(float* dst, std::size_t n) {
    need(n * sizeof(float));
    std::memcpy(dst, bytes_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
  std::string path_;
};

}  // namespace

CheckpointMeta meta_for(const blocks::QNetwork& net, int episode, std::uint64_t seed) {
  const auto& s = net.spec();
  return {s.variant, s.input_format, s.resolution, s.action_count, episode, seed};
}

void save_checkpoint(const blocks::QNetwork& net, const CheckpointMeta& meta, const std::string& path) {
  Writer w;
  for (char c : kCheckpointMagic) w.put(c);
  w.put(kCheckpointVersion);
  w.put_string(blocks::variant_name(meta.variant));
  w.put_string(input_format_name(meta.input_format));
  w.put(static_cast<std::uint32_t>(meta.resolution));
  w.put(static_cast<std::uint32_t>(meta.action_count));
  w.put(static_cast<std::uint32_t>(meta.episode));
  w.put(meta.seed);
  const auto& entries = net.params().entries();
  w.put(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    w.put_string(e.name);
    w.put(static_cast<std::uint32_t>(e.tensor->rank()));
    for (int d : e.tensor->shape()) w.put(static_cast<std::uint32_t>(d));
    w.put_floats(e.tensor->values().data(), e.tensor->size());
  }
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  // Write to a sibling file first so a crash never leaves a torn checkpoint.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::kIo, "cannot write checkpoint " + path);
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    require(out.good(), ErrorKind::kIo, "failed writing checkpoint " + path);
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kIo, "cannot open checkpoint " + path);
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}), path);
  char magic[8];
  for (char& c : magic) c = r.get<char>();
  require(std::memcmp(magic, kCheckpointMagic, 8) == 0, ErrorKind::kBadMagic, path + ": not a RAMAVT checkpoint");
  const auto version = r.get<std::uint16_t>();
  require(version == kCheckpointVersion, ErrorKind::kVersion,
          path + ": checkpoint version " + std::to_string(version) + " is not supported (expected " +
              std::to_string(kCheckpointVersion) + ")");
  LoadedCheckpoint out;
  const std::string variant = r.get_string();
  const std::string format = r.get_string();
  try {
    out.meta.variant = blocks::parse_variant(variant);
    out.meta.input_format = parse_input_format(format);
  } catch (const Error& e) {
    fail(ErrorKind::kSpecMismatch, path + ": " + e.what());
  }
  out.meta.resolution = static_cast<int>(r.get<std::uint32_t>());
  out.meta.action_count = static_cast<int>(r.get<std::uint32_t>());
  out.meta.episode = static_cast<int>(r.get<std::uint32_t>());
  out.meta.seed = r.get<std::uint64_t>();

  auto spec = blocks::QNetworkSpec::make(out.meta.variant, out.meta.input_format, out.meta.resolution);
  require(spec.action_count == out.meta.action_count, ErrorKind::kSpecMismatch,
          path + ": checkpoint has " + std::to_string(out.meta.action_count) + " actions, network has " +
              std::to_string(spec.action_count));
  out.network = std::make_unique<blocks::QNetwork>(spec, 0);
  const auto& entries = out.network->params().entries();
  const auto count = r.get<std::uint32_t>();
  require(count == entries.size(), ErrorKind::kSpecMismatch,
          path + ": checkpoint holds " + std::to_string(count) + " tensors, the network has " +
              std::to_string(entries.size()));
  for (const auto& e : entries) {
    const std::string name = r.get_string();
    require(name == e.name, ErrorKind::kSpecMismatch, path + ": expected tensor " + e.name + ", found " + name);
    const auto rank = r.get<std::uint32_t>();
    diffnet::Shape shape(rank);
    for (auto& d : shape) d = static_cast<int>(r.get<std::uint32_t>());
    require(shape == e.tensor->shape(), ErrorKind::kSpecMismatch,
            path + ": tensor " + name + " is " + diffnet::shape_string(shape) + ", network expects " +
                diffnet::shape_string(e.tensor->shape()));
    r.get_floats(e.tensor->values().data(), e.tensor->size());
  }
  require(r.at_end(), ErrorKind::kSpecMismatch, path + ": trailing bytes after the tensor table");
  return out;
}

LoadedCheckpoint load_checkpoint(const std::string& path, const blocks::QNetworkSpec& expected) {
  auto loaded = load_checkpoint(path);
  const auto& m = loaded.meta;
  require(m.variant == expected.variant && m.input_format == expected.input_format &&
              m.resolution == expected.resolution && m.action_count == expected.action_count,
          ErrorKind::kSpecMismatch,
          path + ": checkpoint is " + blocks::variant_name(m.variant) + "/" + input_format_name(m.input_format) + "/" +
              std::to_string(m.resolution) + ", expected " + blocks::variant_name(expected.variant) + "/" +
              input_format_name(expected.input_format) + "/" + std::to_string(expected.resolution));
  return loaded;
}

}  // namespace ramavt::cli
