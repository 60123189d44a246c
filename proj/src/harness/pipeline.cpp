//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <Eigen/Core>
#include <spdlog/spdlog.h>

#include "csmiles/engine/checkpoint.h"
#include "csmiles/error.h"
#include "csmiles/harness.h"
#include "csmiles/metrics.h"

namespace csmiles::harness {
namespace {

namespace fs = std::filesystem;

constexpr const char *kVersion = "0.1.0";

void write_file(const std::string &path, const std::string &data) {
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw Error(ErrorCode::kIo, "cannot write " + path);
  f << data;
  if (!f)
    throw Error(ErrorCode::kIo, "write failed for " + path);
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt(const char *f, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<ReactionRecord> load_logged(const std::string &path, Split split) {
  LoadResult r = load_reactions(path, split);
  for (const std::string &w: r.warnings)
    spdlog::warn("skipped {}", w);
  if (r.skipped)
    spdlog::warn("{}: {} of {} lines skipped", path, r.skipped,
                 r.skipped + static_cast<int>(r.records.size()));
  return std::move(r.records);
}

std::optional<int> class_of(const RunConfig &cfg, const ReactionRecord &r) {
  return cfg.class_conditioning ? r.reaction_class : std::nullopt;
}

struct LoadedModel {
  engine::Model model;
  codec::Vocabulary vocab;
};

LoadedModel load_model(const RunConfig &cfg) {
  engine::Checkpoint ck = engine::load_checkpoint(cfg.checkpoint_path());
  codec::Vocabulary vocab = codec::vocab_from_tokens(ck.vocab);
  return { engine::Model(ck.config, std::move(ck.params)), std::move(vocab) };
}

std::vector<int> source_ids(const RunConfig &cfg, const ReactionRecord &r,
                            const codec::Vocabulary &vocab) {
  return vocab.ids(encode_pair(canonical_pair(r), class_of(cfg, r)).source);
}

decoding::BeamOptions beam_options(const RunConfig &cfg) {
  decoding::BeamOptions o = cfg.beam;
  o.enable_copy = cfg.training.enable_copy;
  return o;
}

}  // namespace

void init_logging() {
  const char *env = std::getenv("CSMILES_LOG");
  const std::string level = env ? env : "info";
  if (level == "error")
    spdlog::set_level(spdlog::level::err);
  else if (level == "warn")
    spdlog::set_level(spdlog::level::warn);
  else if (level == "info")
    spdlog::set_level(spdlog::level::info);
  else if (level == "debug")
    spdlog::set_level(spdlog::level::debug);
  else
    throw Error(ErrorCode::kInvalidConfig, "CSMILES_LOG must be error, warn, info or debug");
  spdlog::set_pattern("[%l] %v");
}

std::string version_string() {
  return std::string("csmiles ") + kVersion;
}

std::string write_manifest(const RunConfig &cfg, const std::string &command,
                           const std::map<std::string, std::string> &extra) {
  fs::create_directories(cfg.output_dir);
  std::string out = serialize_config(cfg);
  std::map<std::string, std::string> m = extra;
  m["manifest.command"] = command;
  m["manifest.config_hash"] = hex(config_hash(cfg));
  m["manifest.seed"] = std::to_string(cfg.seed);
  m["manifest.version"] = version_string();
  m["manifest.eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION)
                        + "." + std::to_string(EIGEN_MINOR_VERSION);
  m["manifest.spdlog"] = std::to_string(SPDLOG_VER_MAJOR) + "." + std::to_string(SPDLOG_VER_MINOR)
                         + "." + std::to_string(SPDLOG_VER_PATCH);
#if defined(__clang__)
  m["manifest.compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  m["manifest.compiler"] = std::string("gcc ") + __VERSION__;
#endif
  for (const auto &[k, v]: m)
    out += k + " = " + v + "\n";
  const std::string path = (fs::path(cfg.output_dir) / (command + ".manifest")).string();
  write_file(path, out);
  return path;
}

TrainArtifacts run_train(const RunConfig &cfg) {
  validate(cfg);
  if (cfg.train_path.empty())
    throw Error(ErrorCode::kInvalidConfig, "data.train is not set");
  const std::vector<ReactionRecord> records = load_logged(cfg.train_path, Split::kTrain);
  const codec::Vocabulary vocab = build_vocabulary(records, cfg.class_conditioning);

  engine::ModelConfig mc = cfg.model;
  mc.vocab_size = vocab.size();
  engine::Model model(mc, cfg.seed);
  spdlog::info("train: {} reactions, vocab {}, {} parameters", records.size(), vocab.size(),
               model.params().scalar_count());

  std::vector<engine::Example> canonical;
  for (const ReactionRecord &r: records)
    canonical.push_back(to_example(encode_pair(canonical_pair(r), class_of(cfg, r)), vocab));

  std::vector<engine::Example> frozen;
  engine::EpochSource source = [&](int epoch) -> std::vector<engine::Example> {
    if (cfg.augment_factor == 0)
      return canonical;
    if (cfg.freeze_augmentation && !frozen.empty())
      return frozen;
    std::vector<engine::Example> out;
    const int round = cfg.freeze_augmentation ? 0 : epoch + 1;
    for (std::size_t i = 0; i < records.size(); ++i) {
      // Per-record streams keep the result independent of record order.
      std::seed_seq seq { static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(round), static_cast<std::uint32_t>(i) };
      std::mt19937_64 rng(seq);
      for (const ReactionPair &p: augment(records[i], cfg.augment_factor, rng))
        out.push_back(to_example(encode_pair(p, class_of(cfg, records[i])), vocab));
    }
    if (cfg.freeze_augmentation)
      frozen = out;
    return out;
  };

  engine::TrainingConfig tc = cfg.training;
  tc.seed = cfg.seed;
  engine::EpochCallback on_epoch = [&](const engine::EpochMetrics &m) {
    if (cfg.log_every > 0 && (m.epoch % cfg.log_every == 0 || m.epoch + 1 == tc.epochs))
      spdlog::info("epoch {} total {:.5f} lm {:.5f} sa {:.5f} ci {:.5f} tau {:.3f} acc {:.4f}",
                   m.epoch, m.total, m.lm, m.sa, m.ci, m.tf_tau, m.token_acc);
    if (cfg.stop_token_acc > 0 && m.token_acc >= cfg.stop_token_acc) {
      spdlog::info("epoch {}: token accuracy {:.4f} reached the stop threshold", m.epoch,
                   m.token_acc);
      return false;
    }
    return cfg.max_epochs == 0 || m.epoch + 1 < cfg.max_epochs;
  };
  engine::TrainResult result = engine::train(model, source, tc, on_epoch);

  fs::create_directories(cfg.output_dir);
  TrainArtifacts art;
  art.log = std::move(result.log);
  art.checkpoint = cfg.checkpoint_path();
  if (const fs::path dir = fs::path(art.checkpoint).parent_path(); !dir.empty())
    fs::create_directories(dir);
  engine::save_checkpoint(art.checkpoint, model, vocab.tokens());
  art.checkpoint_checksum = engine::file_checksum(art.checkpoint);
  art.metrics_csv = (fs::path(cfg.output_dir) / "metrics.csv").string();
  write_file(art.metrics_csv, engine::metrics_csv(art.log));

  std::map<std::string, std::string> extra {
    { "manifest.checkpoint_checksum", hex(art.checkpoint_checksum) },
    { "manifest.epochs_run", std::to_string(art.log.size()) },
    { "manifest.vocab_size", std::to_string(vocab.size()) },
  };
  if (!cfg.valid_path.empty()) {
    std::vector<engine::Example> valid;
    for (const ReactionRecord &r: load_logged(cfg.valid_path, Split::kValid))
      valid.push_back(to_example(encode_pair(canonical_pair(r), class_of(cfg, r)), vocab));
    const engine::TeacherForcedEval ev = engine::evaluate_teacher_forced(model, valid, tc);
    spdlog::info("valid: loss {:.5f} token acc {:.4f}", ev.loss.total, ev.token_acc);
    extra["manifest.valid_loss"] = fmt("%.9g", ev.loss.total);
    extra["manifest.valid_token_acc"] = fmt("%.9g", ev.token_acc);
  }
  art.manifest = write_manifest(cfg, "train", extra);
  spdlog::info("checkpoint {} ({})", art.checkpoint, hex(art.checkpoint_checksum));
  return art;
}

std::string run_predict(const RunConfig &cfg, const std::string &input,
                        const std::string &out_tsv) {
  validate(cfg);
  const std::string in = input.empty() ? cfg.test_path : input;
  if (in.empty())
    throw Error(ErrorCode::kInvalidConfig, "no input file (data.test)");
  const LoadedModel lm = load_model(cfg);
  const std::vector<ReactionRecord> records = load_logged(in, Split::kTest);
  const decoding::BeamOptions options = beam_options(cfg);

  std::vector<decoding::PredictionSet> results(records.size());
  std::vector<std::exception_ptr> errors(records.size());
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < records.size(); i += stride) {
      try {
        results[i] = decoding::beam_search(lm.model, lm.vocab, source_ids(cfg, records[i], lm.vocab),
                                           options, cfg.copy_threshold);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(cfg.threads, std::max<std::size_t>(records.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t)
    pool.emplace_back(work, t, threads);
  work(0, threads);
  for (std::thread &t: pool)
    t.join();
  for (const std::exception_ptr &e: errors)
    if (e)
      std::rethrow_exception(e);

  std::string out = "input_idx\trank\tscore\tsmiles\tvalid\tcopied_fraction\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto &cands = results[i].candidates;
    for (std::size_t r = 0; r < cands.size(); ++r)
      out += std::to_string(i) + "\t" + std::to_string(r + 1) + "\t" + fmt("%.6f", cands[r].score)
             + "\t" + cands[r].smiles + "\t" + (cands[r].valid ? "1" : "0") + "\t"
             + fmt("%.4f", cands[r].copied_fraction) + "\n";
  }
  fs::create_directories(cfg.output_dir);
  const std::string path =
      out_tsv.empty() ? (fs::path(cfg.output_dir) / "predictions.tsv").string() : out_tsv;
  write_file(path, out);
  write_manifest(cfg, "predict", { { "manifest.input", in }, { "manifest.predictions", path } });
  spdlog::info("predict: {} inputs -> {}", records.size(), path);
  return path;
}

std::vector<PredictionRow> read_predictions(const std::string &path) {
  std::ifstream f(path);
  if (!f)
    throw Error(ErrorCode::kFileNotFound, path);
  std::vector<PredictionRow> rows;
  std::string line;
  std::getline(f, line);
  if (line.rfind("input_idx\trank", 0) != 0)
    throw Error(ErrorCode::kMalformedLine, path + ": missing predictions header");
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty())
      continue;
    std::vector<std::string> cells;
    std::istringstream in(line);
    for (std::string c; std::getline(in, c, '\t');)
      cells.push_back(c);
    if (cells.size() != 6)
      throw Error(ErrorCode::kMalformedLine, path + ":" + std::to_string(line_no));
    try {
      rows.push_back({ std::stoi(cells[0]), std::stoi(cells[1]), std::stod(cells[2]), cells[3],
                       cells[4] == "1", std::stod(cells[5]) });
    } catch (const std::exception &) {
      throw Error(ErrorCode::kMalformedLine, path + ":" + std::to_string(line_no));
    }
  }
  return rows;
}

std::map<std::string, double> run_eval(const RunConfig &cfg, const std::string &predictions,
                                       const std::string &gold, const std::string &out_path) {
  validate(cfg);
  const std::string pred_path =
      predictions.empty() ? (fs::path(cfg.output_dir) / "predictions.tsv").string() : predictions;
  const std::string gold_path = gold.empty() ? cfg.test_path : gold;
  if (gold_path.empty())
    throw Error(ErrorCode::kInvalidConfig, "no gold file (data.test)");
  const std::vector<ReactionRecord> records = load_logged(gold_path, Split::kTest);
  std::vector<std::string> gold_reactants;
  for (const ReactionRecord &r: records)
    gold_reactants.push_back(r.reactants);

  std::vector<std::vector<std::pair<int, std::string>>> ranked(records.size());
  for (const PredictionRow &row: read_predictions(pred_path)) {
    if (row.input_idx < 0 || row.input_idx >= static_cast<int>(records.size()))
      throw Error(ErrorCode::kLengthMismatch,
                  "prediction for input " + std::to_string(row.input_idx) + " has no gold");
    ranked[row.input_idx].push_back({ row.rank, row.smiles });
  }
  std::vector<std::vector<std::string>> candidates;
  for (auto &list: ranked) {
    std::stable_sort(list.begin(), list.end(),
                     [](const auto &a, const auto &b) { return a.first < b.first; });
    std::vector<std::string> c;
    for (auto &[rank, s]: list)
      c.push_back(std::move(s));
    candidates.push_back(std::move(c));
  }

  std::map<std::string, double> out;
  for (const auto &[k, v]: metrics::topk_accuracy(candidates, gold_reactants, cfg.eval_k))
    out["top" + std::to_string(k) + "_accuracy"] = v;
  for (const auto &[k, v]: metrics::topk_validity(candidates, cfg.eval_k))
    out["top" + std::to_string(k) + "_validity"] = v;

  std::string text;
  for (const auto &[k, v]: out)
    text += k + "=" + fmt("%.6f", v) + "\n";
  fs::create_directories(cfg.output_dir);
  const std::string path =
      out_path.empty() ? (fs::path(cfg.output_dir) / "eval.txt").string() : out_path;
  write_file(path, text);
  write_manifest(cfg, "eval", { { "manifest.predictions", pred_path },
                                { "manifest.gold", gold_path },
                                { "manifest.metrics", path } });
  for (const auto &[k, v]: out)
    spdlog::info("{} = {:.4f}", k, v);
  return out;
}

std::map<std::string, double> read_metrics(const std::string &path) {
  std::ifstream f(path);
  if (!f)
    throw Error(ErrorCode::kFileNotFound, path);
  std::map<std::string, double> out;
  std::string line;
  while (std::getline(f, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      continue;
    out[line.substr(0, eq)] = std::stod(line.substr(eq + 1));
  }
  return out;
}

decoding::AttentionDumpFiles run_dump_attn(const RunConfig &cfg, const std::string &input,
                                           int index, const std::string &prefix) {
  validate(cfg);
  const std::string in = input.empty() ? cfg.test_path : input;
  if (in.empty())
    throw Error(ErrorCode::kInvalidConfig, "no input file");
  const LoadedModel lm = load_model(cfg);
  const std::vector<ReactionRecord> records = load_logged(in, Split::kTest);
  if (index < 0 || index >= static_cast<int>(records.size()))
    throw Error(ErrorCode::kInvalidConfig, "record index " + std::to_string(index)
                                               + " out of range (" + std::to_string(records.size())
                                               + " records)");
  const ReactionRecord &r = records[index];
  const EncodedPair enc = encode_pair(canonical_pair(r), class_of(cfg, r));
  const engine::Example ex = to_example(enc, lm.vocab);

  fs::create_directories(cfg.output_dir);
  const std::string base =
      prefix.empty() ? (fs::path(cfg.output_dir) / ("record" + std::to_string(index))).string()
                     : prefix;
  decoding::AttentionDumpFiles files =
      decoding::attention_dump(lm.model, ex.source, ex.target, ex.sam, base);

  const decoding::PredictionSet ps =
      decoding::beam_search(lm.model, lm.vocab, ex.source, beam_options(cfg), cfg.copy_threshold);
  if (!ps.candidates.empty()) {
    const auto trace = decoding::copy_trace(lm.model, ex.source, ps.candidates[0].tokens,
                                            cfg.copy_threshold);
    write_file(base + ".copy.tsv", decoding::copy_trace_tsv(trace, lm.vocab, ex.source));
  }
  write_manifest(cfg, "dump-attn", { { "manifest.input", in },
                                     { "manifest.index", std::to_string(index) },
                                     { "manifest.prefix", base } });
  return files;
}

}  // namespace csmiles::harness
