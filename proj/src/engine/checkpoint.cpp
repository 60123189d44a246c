//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "csmiles/engine/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "csmiles/error.h"

namespace csmiles::engine {
namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv(std::uint64_t &h, const void *data, std::size_t n) {
  const auto *p = static_cast<const unsigned char *>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void put_u32(std::string &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string &out, float f) {
  put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class Reader {
public:
  explicit Reader(std::string data) : data_(std::move(data)) { }

  std::string bytes(std::size_t n) {
    if (pos_ + n > data_.size())
      throw Error(ErrorCode::kCheckpoint, "truncated file");
    std::string out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::uint32_t u32() {
    const std::string b = bytes(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }
  bool done() const { return pos_ == data_.size(); }

private:
  std::string data_;
  std::size_t pos_ = 0;
};

int to_int(const std::string &key, const std::string &v) {
  try {
    return std::stoi(v);
  } catch (const std::exception &) {
    throw Error(ErrorCode::kCheckpoint, "bad value for " + key);
  }
}

}  // namespace

std::string serialize_config(const ModelConfig &c, std::span<const std::string> vocab) {
  std::ostringstream out;
  out.precision(17);
  out << "num_layers=" << c.num_layers << "\n"
      << "num_heads=" << c.num_heads << "\n"
      << "d_model=" << c.d_model << "\n"
      << "d_ff=" << c.d_ff << "\n"
      << "dropout=" << c.dropout << "\n"
      << "vocab_size=" << c.vocab_size << "\n"
      << "max_len=" << c.max_len << "\n"
      << "align_layer=" << c.alignment_layer() << "\n"
      << "align_head=" << c.align_head << "\n"
      << "vocab=";
  for (std::size_t i = 0; i < vocab.size(); ++i)
    out << (i ? " " : "") << vocab[i];
  out << "\n";
  return out.str();
}

void save_checkpoint(const std::string &path, const Model &model,
                     std::span<const std::string> vocab) {
  std::string out(kCheckpointMagic);
  const std::string config = serialize_config(model.config(), vocab);
  put_u32(out, static_cast<std::uint32_t>(config.size()));
  out += config;
  const auto &tensors = model.params().tensors();
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor &t: tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_u32(out, 2);
    put_u32(out, static_cast<std::uint32_t>(t.value.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.value.cols()));
    for (long r = 0; r < t.value.rows(); ++r)
      for (long c = 0; c < t.value.cols(); ++c)
        put_f32(out, static_cast<float>(t.value(r, c)));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw Error(ErrorCode::kIo, "cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f)
    throw Error(ErrorCode::kIo, "write failed for " + path);
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw Error(ErrorCode::kFileNotFound, path);
  Reader in(std::string(std::istreambuf_iterator<char>(f), {}));
  if (in.bytes(5) != kCheckpointMagic)
    throw Error(ErrorCode::kCheckpoint, "bad magic in " + path);

  Checkpoint ck;
  std::istringstream config(in.bytes(in.u32()));
  std::string line;
  while (std::getline(config, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kCheckpoint, "bad config line: " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    ModelConfig &c = ck.config;
    if (key == "num_layers")
      c.num_layers = to_int(key, value);
    else if (key == "num_heads")
      c.num_heads = to_int(key, value);
    else if (key == "d_model")
      c.d_model = to_int(key, value);
    else if (key == "d_ff")
      c.d_ff = to_int(key, value);
    else if (key == "dropout")
      c.dropout = std::stod(value);
    else if (key == "vocab_size")
      c.vocab_size = to_int(key, value);
    else if (key == "max_len")
      c.max_len = to_int(key, value);
    else if (key == "align_layer")
      c.align_layer = to_int(key, value);
    else if (key == "align_head")
      c.align_head = to_int(key, value);
    else if (key == "vocab") {
      std::istringstream toks(value);
      for (std::string t; toks >> t;)
        ck.vocab.push_back(t);
    } else
      throw Error(ErrorCode::kCheckpoint, "unknown config key " + key);
  }

  const std::uint32_t count = in.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string name = in.bytes(in.u32());
    const std::uint32_t rank = in.u32();
    if (rank != 2)
      throw Error(ErrorCode::kCheckpoint, "tensor " + name + " has rank " + std::to_string(rank));
    const std::uint32_t rows = in.u32(), cols = in.u32();
    Matrix m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c)
        m(r, c) = in.f32();
    ck.params.add(std::move(name), std::move(m));
  }
  if (!in.done())
    throw Error(ErrorCode::kCheckpoint, "trailing bytes in " + path);
  ck.config.validate();
  return ck;
}

std::uint64_t parameter_checksum(const ParameterSet &params) {
  std::uint64_t h = kFnvOffset;
  for (const Tensor &t: params.tensors()) {
    fnv(h, t.name.data(), t.name.size());
    for (long r = 0; r < t.value.rows(); ++r)
      for (long c = 0; c < t.value.cols(); ++c) {
        const float f = static_cast<float>(t.value(r, c));
        fnv(h, &f, sizeof f);
      }
  }
  return h;
}

std::uint64_t file_checksum(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw Error(ErrorCode::kFileNotFound, path);
  const std::string data(std::istreambuf_iterator<char>(f), {});
  std::uint64_t h = kFnvOffset;
  fnv(h, data.data(), data.size());
  return h;
}

}  // namespace csmiles::engine
