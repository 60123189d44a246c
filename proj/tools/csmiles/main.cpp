//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "csmiles/alignment.h"
#include "csmiles/csmiles.h"
#include "csmiles/error.h"
#include "csmiles/harness.h"
#include "csmiles/metrics.h"

namespace {

using namespace csmiles;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDiverged = 3;

struct Globals {
  std::string config;
  long seed = -1;
  int threads = 0;
  std::vector<std::string> overrides;
  std::string output_dir;
};

harness::RunConfig make_config(const Globals &g) {
  harness::RunConfig cfg = g.config.empty() ? harness::RunConfig {} : harness::load_config(g.config);
  for (const std::string &kv: g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kInvalidConfig, "--set expects key=value, got " + kv);
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      return s;
    };
    harness::set_option(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  if (g.seed >= 0)
    harness::set_option(cfg, "seed", std::to_string(g.seed));
  if (g.threads > 0)
    cfg.threads = g.threads;
  if (!g.output_dir.empty())
    cfg.output_dir = g.output_dir;
  return cfg;
}

struct Io {
  std::ifstream fin;
  std::ofstream fout;
  std::istream *in = &std::cin;
  std::ostream *out = &std::cout;

  Io(const std::string &input, const std::string &output) {
    if (!input.empty() && input != "-") {
      fin.open(input);
      if (!fin)
        throw Error(ErrorCode::kFileNotFound, input);
      in = &fin;
    }
    if (!output.empty() && output != "-") {
      fout.open(output);
      if (!fout)
        throw Error(ErrorCode::kIo, "cannot write " + output);
      out = &fout;
    }
  }
};

int cmd_convert(const std::string &to, const std::string &input, const std::string &output) {
  Io io(input, output);
  int bad = 0, line_no = 0;
  for (std::string line; std::getline(*io.in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    try {
      if (to == "csmiles")
        *io.out << codec::to_text(codec::encode(line)) << "\n";
      else
        *io.out << codec::decode(codec::from_text(line)) << "\n";
    } catch (const Error &e) {
      ++bad;
      spdlog::warn("line {}: {}", line_no, e.what());
      *io.out << "\n";
    }
  }
  return bad ? kExitData : 0;
}

std::vector<harness::ReactionRecord> load(const std::string &path) {
  harness::LoadResult r = harness::load_reactions(path);
  for (const std::string &w: r.warnings)
    spdlog::warn("skipped {}", w);
  return std::move(r.records);
}

int cmd_align(const std::string &input, const std::string &output) {
  Io io("", output);
  const auto records = load(input);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const harness::EncodedPair e = harness::encode_pair(harness::canonical_pair(records[i]));
    std::ostream &out = *io.out;
    out << "# " << i << "\nsource\t";
    for (std::size_t k = 0; k < e.source.size(); ++k)
      out << (k ? " " : "") << e.source[k];
    out << "\ntarget\t";
    for (std::size_t k = 0; k < e.target.size(); ++k)
      out << (k ? " " : "") << e.target[k];
    out << "\n";
    for (int r = 0; r < e.sam.rows; ++r) {
      for (int c = 0; c < e.sam.cols; ++c)
        out << static_cast<int>(e.sam.at(r, c));
      out << "\n";
    }
  }
  return 0;
}

int cmd_stats(const std::string &input, const std::string &output) {
  Io io("", output);
  const auto records = load(input);
  std::vector<metrics::ReactionText> corpus;
  std::vector<std::vector<std::string>> raw, csm;
  for (const auto &r: records) {
    corpus.push_back({ r.product, r.reactants });
    for (const std::string *side: { &r.product, &r.reactants }) {
      const align::MappedSide s = align::prepare_side(*side);
      raw.push_back(s.unmapped);
      csm.push_back(s.csmiles.texts());
    }
  }
  const metrics::EditDistanceSummary s = metrics::edit_distance_report(corpus);
  const codec::Vocabulary raw_vocab = codec::build_vocab(raw), csm_vocab = codec::build_vocab(csm);
  int composites = 0;
  for (const std::string &t: csm_vocab.tokens())
    composites += t.size() > 1 && t.front() == '[';
  std::ostream &out = *io.out;
  char buf[64];
  auto kv = [&](const char *k, double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    out << k << "=" << buf << "\n";
  };
  out << "reactions=" << records.size() << "\n";
  out << "vocab_raw=" << raw_vocab.size() << "\n";
  out << "vocab_csmiles=" << csm_vocab.size() << "\n";
  out << "csmiles_bracket_tokens=" << composites << "\n";
  kv("mean_edit_raw", s.mean_raw);
  kv("mean_edit_csmiles", s.mean_csmiles);
  kv("median_edit_raw", s.median_raw);
  kv("median_edit_csmiles", s.median_csmiles);
  kv("mean_delta", s.mean_delta);
  kv("fraction_csmiles_le_raw", s.fraction_csmiles_le_raw);
  out << "csmiles_better=" << s.csmiles_better << "\n";
  out << "csmiles_worse=" << s.csmiles_worse << "\n";
  return 0;
}

int exit_code(const Error &e) {
  switch (e.code()) {
  case ErrorCode::kDivergedLoss:
    return kExitDiverged;
  case ErrorCode::kInvalidConfig:
    return kExitUsage;
  default:
    return kExitData;
  }
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app { "C-SMILES retrosynthesis toolkit" };
  app.set_version_flag("--version", harness::version_string());
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Run configuration (key = value file)");
  app.add_option("--seed", g.seed, "Override the seed")->check(CLI::NonNegativeNumber);
  app.add_option("--threads", g.threads, "Worker threads for decoding")->check(CLI::PositiveNumber);
  app.add_option("--set", g.overrides, "Override a config key (key=value), repeatable");
  app.add_option("--output-dir", g.output_dir, "Override output.dir");

  std::string to = "csmiles", input, output;
  auto *convert = app.add_subcommand("convert", "Convert molecules between SMILES and C-SMILES");
  convert->add_option("--to", to, "Target notation")->check(CLI::IsMember({ "csmiles", "smiles" }));
  convert->add_option("-i,--input", input, "Input file (default stdin)");
  convert->add_option("-o,--output", output, "Output file (default stdout)");

  auto *align = app.add_subcommand("align", "Print C-SMILES token pairs and their SAM");
  align->add_option("input", input, "Reaction file")->required();
  align->add_option("-o,--output", output, "Output file (default stdout)");

  auto *stats = app.add_subcommand("stats", "Vocabulary and edit-distance report");
  stats->add_option("input", input, "Reaction file")->required();
  stats->add_option("-o,--output", output, "Output file (default stdout)");

  bool freeze = false;
  auto *train = app.add_subcommand("train", "Train a model");
  train->add_flag("--freeze-augmentation", freeze, "Reuse the same augmented set every epoch");

  std::string checkpoint;
  auto *predict = app.add_subcommand("predict", "Beam-search predictions as TSV");
  predict->add_option("--checkpoint", checkpoint, "Checkpoint (default from config)");
  predict->add_option("-i,--input", input, "Reaction file (default data.test)");
  predict->add_option("-o,--output", output, "TSV path (default <output>/predictions.tsv)");

  std::string predictions, gold;
  auto *eval = app.add_subcommand("eval", "Top-k accuracy and validity");
  eval->add_option("--predictions", predictions, "Predictions TSV");
  eval->add_option("--gold", gold, "Reaction file with gold reactants (default data.test)");
  eval->add_option("-o,--output", output, "Metrics path (default <output>/eval.txt)");

  int index = 0;
  std::string prefix;
  auto *dump = app.add_subcommand("dump-attn", "Write attention, SAM and copy-trace files");
  dump->add_option("--checkpoint", checkpoint, "Checkpoint (default from config)");
  dump->add_option("-i,--input", input, "Reaction file (default data.test)");
  dump->add_option("--index", index, "Record index")->check(CLI::NonNegativeNumber);
  dump->add_option("--prefix", prefix, "Output path prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    harness::init_logging();
    if (*convert)
      return cmd_convert(to, input, output);
    if (*align)
      return cmd_align(input, output);
    if (*stats)
      return cmd_stats(input, output);

    harness::RunConfig cfg = make_config(g);
    if (!checkpoint.empty())
      cfg.checkpoint = checkpoint;
    if (*train) {
      if (freeze)
        cfg.freeze_augmentation = true;
      const harness::TrainArtifacts a = harness::run_train(cfg);
      std::cout << a.checkpoint << "\n" << a.metrics_csv << "\n" << a.manifest << "\n";
    } else if (*predict) {
      std::cout << harness::run_predict(cfg, input, output) << "\n";
    } else if (*eval) {
      for (const auto &[k, v]: harness::run_eval(cfg, predictions, gold, output))
        std::printf("%s=%.6f\n", k.c_str(), v);
    } else if (*dump) {
      const auto f = harness::run_dump_attn(cfg, input, index, prefix);
      std::cout << f.attention_csv << "\n" << f.attention_pgm << "\n" << f.sam_csv << "\n"
                << f.sam_pgm << "\n";
    }
  } catch (const Error &e) {
    spdlog::error("{}", e.what());
    return exit_code(e);
  } catch (const std::exception &e) {
    spdlog::error("{}", e.what());
    return kExitData;
  }
  return 0;
}
