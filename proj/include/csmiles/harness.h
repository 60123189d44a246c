//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CSMILES_HARNESS_H_
#define CSMILES_HARNESS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "csmiles/alignment.h"
#include "csmiles/csmiles.h"
#include "csmiles/decoding.h"
#include "csmiles/engine/train.h"

namespace csmiles::harness {

// ---- data ----

enum class Split { kTrain, kValid, kTest };

struct ReactionRecord {
  std::string product;    // atom-mapped, the model's source
  std::string reactants;  // atom-mapped, '.'-joined, the model's target
  std::optional<int> reaction_class;
  Split split = Split::kTrain;
};

struct LoadResult {
  std::vector<ReactionRecord> records;
  int skipped = 0;
  std::vector<std::string> warnings;  // one per skipped line
};

// One reaction per line: "[class<TAB>]reactants>>product". A reagent field
// ("reactants>reagents>product") is dropped. Throws on a bad line.
ReactionRecord parse_reaction_line(std::string_view line, Split split = Split::kTrain);
// Skips bad lines. FileNotFound; AllLinesInvalid when nothing survives.
LoadResult load_reactions(const std::string &path, Split split = Split::kTrain);

struct ReactionPair {
  std::string product;
  std::string reactants;
};

// Canonical pair: each molecule written canonically from its canonical
// root, reactant molecules sorted by canonical form. Atom maps are kept.
ReactionPair canonical_pair(const ReactionRecord &record);
// The canonical pair plus `factor` root-aligned variants.
std::vector<ReactionPair> augment(const ReactionRecord &record, int factor,
                                  std::mt19937_64 &rng);

std::string class_token(int reaction_class);
// Returns the class and removes the token when the sequence starts with one.
std::optional<int> strip_class_token(std::vector<std::string> &source);

struct EncodedPair {
  std::vector<std::string> source;  // map-free C-SMILES tokens
  std::vector<std::string> target;
  align::AlignmentMap sam;          // target x source
};

// With a class, `<RC_n>` leads the source and gets an all-zero SAM column.
EncodedPair encode_pair(const ReactionPair &pair, std::optional<int> reaction_class = {});

// Training tokens plus ring digits 1-9 and, when asked, class tokens.
codec::Vocabulary build_vocabulary(const std::vector<ReactionRecord> &train,
                                   bool class_conditioning);

engine::Example to_example(const EncodedPair &pair, const codec::Vocabulary &vocab);

// ---- configuration ----

struct RunConfig {
  std::string train_path, valid_path, test_path;
  std::string output_dir = "out";
  std::string checkpoint;  // default <output_dir>/model.ckpt

  engine::ModelConfig model;
  engine::TrainingConfig training;
  int augment_factor = 0;
  bool freeze_augmentation = false;
  bool class_conditioning = false;
  std::uint64_t seed = 0;
  // Stop early once the epoch's token accuracy reaches this (0 = off).
  double stop_token_acc = 0;
  // Stop after this many epochs; the schedule still follows training.epochs.
  int max_epochs = 0;
  int log_every = 10;

  decoding::BeamOptions beam;
  double copy_threshold = 0.7;
  std::vector<int> eval_k { 1, 3, 5, 10 };
  int threads = 1;

  std::string checkpoint_path() const;
};

// Flat "key = value" lines; '#' starts a comment; relative paths resolve
// against `base_dir`. Unknown keys are InvalidConfig; "manifest.*" keys are
// ignored so a manifest loads as a config.
RunConfig parse_config(std::string_view text, const std::string &base_dir = ".");
RunConfig load_config(const std::string &path);
void set_option(RunConfig &cfg, const std::string &key, const std::string &value,
                const std::string &base_dir = ".");
// Every key with its effective value, sorted, bit-exact for doubles.
std::string serialize_config(const RunConfig &cfg);
std::uint64_t config_hash(const RunConfig &cfg);
// InvalidConfig on bad values; FileNotFound for a listed input that is missing.
void validate(const RunConfig &cfg);

// ---- pipeline ----

struct TrainArtifacts {
  std::string checkpoint;
  std::string metrics_csv;
  std::string manifest;
  std::uint64_t checkpoint_checksum = 0;
  std::vector<engine::EpochMetrics> log;
};

// Writes model.ckpt (or cfg.checkpoint), metrics.csv and train.manifest.
TrainArtifacts run_train(const RunConfig &cfg);

// Beam-decodes the products of `input` (defaults to cfg.test_path); TSV
// columns input_idx, rank, score, smiles, valid, copied_fraction.
std::string run_predict(const RunConfig &cfg, const std::string &input = "",
                        const std::string &out_tsv = "");

struct PredictionRow {
  int input_idx = 0;
  int rank = 0;
  double score = 0;
  std::string smiles;
  bool valid = false;
  double copied_fraction = 0;
};
std::vector<PredictionRow> read_predictions(const std::string &path);

// top<k>_accuracy and top<k>_validity for each k, written as key=value.
std::map<std::string, double> run_eval(const RunConfig &cfg, const std::string &predictions = "",
                                       const std::string &gold = "",
                                       const std::string &out_path = "");

// Attention/SAM dumps and the rank-1 copy trace for one record of `input`.
decoding::AttentionDumpFiles run_dump_attn(const RunConfig &cfg, const std::string &input,
                                           int index, const std::string &prefix = "");

// key=value metrics file.
std::map<std::string, double> read_metrics(const std::string &path);

// Writes <output_dir>/<command>.manifest: the effective config followed by
// manifest.* entries. Returns the path.
std::string write_manifest(const RunConfig &cfg, const std::string &command,
                           const std::map<std::string, std::string> &extra = {});

std::string version_string();

// Log level from CSMILES_LOG (error, warn, info, debug); default info.
// InvalidConfig on any other value.
void init_logging();

}  // namespace csmiles::harness

#endif  // CSMILES_HARNESS_H_
