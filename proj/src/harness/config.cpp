//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>

#include "csmiles/error.h"
#include "csmiles/harness.h"

namespace csmiles::harness {
namespace {

namespace fs = std::filesystem;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string &key, const std::string &value) {
  throw Error(ErrorCode::kInvalidConfig, "bad value '" + value + "' for " + key);
}

long to_long(const std::string &key, const std::string &v) {
  std::size_t used = 0;
  long out = 0;
  try {
    out = std::stol(v, &used);
  } catch (const std::exception &) {
    bad(key, v);
  }
  if (used != v.size())
    bad(key, v);
  return out;
}

int to_int(const std::string &key, const std::string &v) {
  return static_cast<int>(to_long(key, v));
}

double to_double(const std::string &key, const std::string &v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception &) {
    bad(key, v);
  }
  if (used != v.size())
    bad(key, v);
  return out;
}

bool to_bool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on")
    return true;
  if (v == "false" || v == "0" || v == "no" || v == "off")
    return false;
  bad(key, v);
}

std::string resolve(const std::string &base, const std::string &v) {
  if (v.empty())
    return v;
  const fs::path p(v);
  return p.is_absolute() ? v : (fs::path(base) / p).lexically_normal().string();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(bool v) { return v ? "true" : "false"; }

struct Field {
  std::function<void(RunConfig &, const std::string &, const std::string &)> set;
  std::function<std::string(const RunConfig &)> get;
};

#define CSMILES_INT(path)                                                                   \
  Field {                                                                                   \
    [](RunConfig &c, const std::string &k, const std::string &v) { c.path = to_int(k, v); }, \
        [](const RunConfig &c) { return std::to_string(c.path); }                           \
  }
#define CSMILES_DOUBLE(path)                                                                   \
  Field {                                                                                      \
    [](RunConfig &c, const std::string &k, const std::string &v) { c.path = to_double(k, v); }, \
        [](const RunConfig &c) { return fmt(c.path); }                                         \
  }
#define CSMILES_BOOL(path)                                                                   \
  Field {                                                                                    \
    [](RunConfig &c, const std::string &k, const std::string &v) { c.path = to_bool(k, v); }, \
        [](const RunConfig &c) { return fmt(c.path); }                                       \
  }

// Paths take the directory of the file they came from as base.
using PathSetter = std::string RunConfig::*;

const std::map<std::string, Field> &fields() {
  static const std::map<std::string, Field> table = {
    { "model.num_layers", CSMILES_INT(model.num_layers) },
    { "model.num_heads", CSMILES_INT(model.num_heads) },
    { "model.d_model", CSMILES_INT(model.d_model) },
    { "model.d_ff", CSMILES_INT(model.d_ff) },
    { "model.dropout", CSMILES_DOUBLE(model.dropout) },
    { "model.max_len", CSMILES_INT(model.max_len) },
    { "model.align_layer", CSMILES_INT(model.align_layer) },
    { "model.align_head", CSMILES_INT(model.align_head) },
    { "train.lambda_sa", CSMILES_DOUBLE(training.lambda_sa) },
    { "train.lambda_ci", CSMILES_DOUBLE(training.lambda_ci) },
    { "train.epsilon_smooth", CSMILES_DOUBLE(training.epsilon_smooth) },
    { "train.lr", CSMILES_DOUBLE(training.lr) },
    { "train.beta1", CSMILES_DOUBLE(training.beta1) },
    { "train.beta2", CSMILES_DOUBLE(training.beta2) },
    { "train.adam_eps", CSMILES_DOUBLE(training.adam_eps) },
    { "train.batch_size", CSMILES_INT(training.batch_size) },
    { "train.epochs", CSMILES_INT(training.epochs) },
    { "train.tf_start", CSMILES_DOUBLE(training.tf_start) },
    { "train.tf_end", CSMILES_DOUBLE(training.tf_end) },
    { "train.tf_fraction", CSMILES_DOUBLE(training.tf_fraction) },
    { "train.rdrop", CSMILES_BOOL(training.rdrop_enabled) },
    { "train.rdrop_alpha", CSMILES_DOUBLE(training.rdrop_alpha) },
    { "train.enable_copy", CSMILES_BOOL(training.enable_copy) },
    { "train.enable_sa", CSMILES_BOOL(training.enable_sa) },
    { "train.enable_ci", CSMILES_BOOL(training.enable_ci) },
    { "train.stop_token_acc", CSMILES_DOUBLE(stop_token_acc) },
    { "train.log_every", CSMILES_INT(log_every) },
    { "train.max_epochs", CSMILES_INT(max_epochs) },
    { "data.augment", CSMILES_INT(augment_factor) },
    { "data.freeze_augmentation", CSMILES_BOOL(freeze_augmentation) },
    { "data.class_conditioning", CSMILES_BOOL(class_conditioning) },
    { "decode.beam_size", CSMILES_INT(beam.beam_size) },
    { "decode.max_len", CSMILES_INT(beam.max_len) },
    { "decode.length_exponent", CSMILES_DOUBLE(beam.length_exponent) },
    { "decode.copy_threshold", CSMILES_DOUBLE(copy_threshold) },
    { "threads", CSMILES_INT(threads) },
    { "seed",
      { [](RunConfig &c, const std::string &k, const std::string &v) {
         const long s = to_long(k, v);
         if (s < 0)
           bad(k, v);
         c.seed = static_cast<std::uint64_t>(s);
       },
        [](const RunConfig &c) { return std::to_string(c.seed); } } },
    { "eval.k",
      { [](RunConfig &c, const std::string &k, const std::string &v) {
         c.eval_k.clear();
         std::istringstream in(v);
         for (std::string item; std::getline(in, item, ',');)
           c.eval_k.push_back(to_int(k, trim(item)));
         if (c.eval_k.empty())
           bad(k, v);
       },
        [](const RunConfig &c) {
          std::string out;
          for (std::size_t i = 0; i < c.eval_k.size(); ++i)
            out += (i ? "," : "") + std::to_string(c.eval_k[i]);
          return out;
        } } },
  };
  return table;
}

#undef CSMILES_INT
#undef CSMILES_DOUBLE
#undef CSMILES_BOOL

const std::map<std::string, PathSetter> &path_fields() {
  static const std::map<std::string, PathSetter> table = {
    { "data.train", &RunConfig::train_path },
    { "data.valid", &RunConfig::valid_path },
    { "data.test", &RunConfig::test_path },
    { "output.dir", &RunConfig::output_dir },
    { "output.checkpoint", &RunConfig::checkpoint },
  };
  return table;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c: s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string RunConfig::checkpoint_path() const {
  return checkpoint.empty() ? (fs::path(output_dir) / "model.ckpt").string() : checkpoint;
}

void set_option(RunConfig &cfg, const std::string &key, const std::string &value,
                const std::string &base_dir) {
  if (key.starts_with("manifest."))
    return;
  if (auto p = path_fields().find(key); p != path_fields().end()) {
    cfg.*(p->second) = resolve(base_dir, value);
    return;
  }
  auto f = fields().find(key);
  if (f == fields().end())
    throw Error(ErrorCode::kInvalidConfig, "unknown key " + key);
  f->second.set(cfg, key, value);
  if (key == "seed")
    cfg.training.seed = cfg.seed;
}

RunConfig parse_config(std::string_view text, const std::string &base_dir) {
  RunConfig cfg;
  std::istringstream in { std::string(text) };
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kInvalidConfig,
                  "line " + std::to_string(line_no) + ": expected key = value");
    set_option(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), base_dir);
  }
  return cfg;
}

RunConfig load_config(const std::string &path) {
  std::ifstream f(path);
  if (!f)
    throw Error(ErrorCode::kFileNotFound, path);
  const std::string text(std::istreambuf_iterator<char>(f), {});
  return parse_config(text, fs::path(path).parent_path().string());
}

std::string serialize_config(const RunConfig &cfg) {
  std::map<std::string, std::string> all;
  for (const auto &[k, f]: fields())
    all[k] = f.get(cfg);
  for (const auto &[k, member]: path_fields())
    all[k] = cfg.*member;
  std::string out;
  for (const auto &[k, v]: all)
    out += k + " = " + v + "\n";
  return out;
}

std::uint64_t config_hash(const RunConfig &cfg) {
  return fnv1a(serialize_config(cfg));
}

void validate(const RunConfig &cfg) {
  if (cfg.augment_factor < 0)
    throw Error(ErrorCode::kInvalidConfig, "data.augment must be >= 0");
  if (cfg.max_epochs < 0)
    throw Error(ErrorCode::kInvalidConfig, "train.max_epochs must be >= 0");
  if (cfg.threads < 1)
    throw Error(ErrorCode::kInvalidConfig, "threads must be >= 1");
  if (cfg.beam.beam_size < 1)
    throw Error(ErrorCode::kInvalidConfig, "decode.beam_size must be >= 1");
  if (cfg.copy_threshold < 0 || cfg.copy_threshold > 1)
    throw Error(ErrorCode::kInvalidConfig, "decode.copy_threshold must be in [0, 1]");
  for (int k: cfg.eval_k)
    if (k < 1)
      throw Error(ErrorCode::kInvalidConfig, "eval.k entries must be >= 1");
  if (cfg.seed != cfg.training.seed)
    throw Error(ErrorCode::kInvalidConfig, "seed and training seed differ");
  engine::ModelConfig m = cfg.model;
  if (m.vocab_size == 0)
    m.vocab_size = codec::Vocabulary::kNumSentinels + 1;  // set from data later
  m.validate();
  cfg.training.validate();
  for (const std::string *p: { &cfg.train_path, &cfg.valid_path, &cfg.test_path })
    if (!p->empty() && !fs::exists(*p))
      throw Error(ErrorCode::kFileNotFound, *p);
}

}  // namespace csmiles::harness
