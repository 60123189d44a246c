//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CSMILES_DECODING_H_
#define CSMILES_DECODING_H_

#include <span>
#include <string>
#include <vector>

#include "csmiles/alignment.h"
#include "csmiles/csmiles.h"
#include "csmiles/engine/model.h"

namespace csmiles::decoding {

struct Hypothesis {
  std::vector<int> tokens;         // without SOS; EOS last when finished
  double log_prob = 0;
  std::vector<double> p_gen;       // per emitted token
  std::vector<int> source_index;   // argmax of the alignment head per token
  bool finished = false;
};

struct BeamOptions {
  int beam_size = 10;
  int max_len = 0;                 // 0 = model max_len
  double length_exponent = 0;      // score = log_prob / len^exponent
  bool enable_copy = true;
};

// Finished hypotheses, best first, at most beam_size.
std::vector<Hypothesis> beam_search_ids(const engine::Model &model, std::span<const int> source,
                                        const BeamOptions &options);
Hypothesis greedy_decode(const engine::Model &model, std::span<const int> source, int max_len = 0,
                         bool enable_copy = true);

double hypothesis_score(const Hypothesis &h, double length_exponent);

struct Candidate {
  std::vector<int> tokens;  // without EOS
  std::string smiles;       // decoded, or the raw token text when decode fails
  double score = 0;
  bool valid = false;
  double copied_fraction = 0;
};

// Ranked, deduplicated by canonical form; invalid decodes stay in place.
struct PredictionSet {
  std::vector<Candidate> candidates;
};

PredictionSet beam_search(const engine::Model &model, const codec::Vocabulary &vocab,
                          std::span<const int> source, const BeamOptions &options,
                          double copy_threshold = 0.7);

struct Decoded {
  std::string smiles;
  bool parsed = false;
  bool valid = false;
};
Decoded decode_tokens(const codec::Vocabulary &vocab, std::span<const int> tokens);

struct CopyRecord {
  int token = 0;
  double p_gen = 0;
  bool copied = false;   // (1 - p_gen) > threshold
  int source_index = 0;
};

// Teacher-forces `candidate` (no EOS) and records the gate per token.
std::vector<CopyRecord> copy_trace(const engine::Model &model, std::span<const int> source,
                                   std::span<const int> candidate, double threshold = 0.7);
std::string copy_trace_tsv(const std::vector<CopyRecord> &records,
                           const codec::Vocabulary &vocab, std::span<const int> source);

// T x |P| matrix as CSV rows.
std::string matrix_csv(const engine::Matrix &m);
engine::Matrix parse_matrix_csv(const std::string &csv);
// Binary 8-bit PGM, width |P|, height T, each row scaled by its maximum.
std::string matrix_pgm(const engine::Matrix &m);

struct AttentionDumpFiles {
  std::string attention_csv, attention_pgm, sam_csv, sam_pgm;
};

// Teacher-forced pass over source/target; writes <prefix>.attn.{csv,pgm}
// and <prefix>.sam.{csv,pgm}. The SAM gets the EOS row appended.
AttentionDumpFiles attention_dump(const engine::Model &model, std::span<const int> source,
                                  std::span<const int> target, const align::AlignmentMap &sam,
                                  const std::string &prefix);

// Attention mass on SAM-aligned cells, accumulated over examples. Only the
// first sam.rows attention rows are used (the EOS row has no alignment).
struct AlignmentMass {
  double row_mass_sum = 0;  // per aligned row: sum of attention on its aligned cells
  int rows = 0;
  double aligned_sum = 0;
  long aligned_cells = 0;
  double unaligned_sum = 0;
  long unaligned_cells = 0;

  void add(const engine::Matrix &attention, const align::AlignmentMap &sam);
  double aligned_row_mass() const { return rows ? row_mass_sum / rows : 0.0; }
  double aligned_cell_mean() const { return aligned_cells ? aligned_sum / aligned_cells : 0.0; }
  double unaligned_cell_mean() const {
    return unaligned_cells ? unaligned_sum / unaligned_cells : 0.0;
  }
};

}  // namespace csmiles::decoding

#endif  // CSMILES_DECODING_H_
