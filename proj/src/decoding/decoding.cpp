//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "csmiles/decoding.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <fstream>
#include <set>
#include <sstream>

#include "csmiles/error.h"
#include "csmiles/metrics.h"

namespace csmiles::decoding {
namespace {

using codec::Vocabulary;
using engine::Matrix;

struct Beam {
  Hypothesis hyp;
  engine::DecoderState state;
  int last = Vocabulary::kSos;
};

struct Expansion {
  double log_prob;
  int beam;
  int token;
  double p_gen;
  int source_index;
};

int resolve_max_len(const engine::Model &model, int max_len) {
  return max_len > 0 ? std::min(max_len, model.config().max_len) : model.config().max_len;
}

void write_file(const std::string &path, const std::string &data) {
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw Error(ErrorCode::kIo, "cannot write " + path);
  f << data;
}

}  // namespace

double hypothesis_score(const Hypothesis &h, double length_exponent) {
  if (length_exponent == 0 || h.tokens.empty())
    return h.log_prob;
  return h.log_prob / std::pow(static_cast<double>(h.tokens.size()), length_exponent);
}

std::vector<Hypothesis> beam_search_ids(const engine::Model &model, std::span<const int> source,
                                        const BeamOptions &options) {
  if (options.beam_size < 1)
    throw Error(ErrorCode::kInvalidConfig, "beam_size must be at least 1");
  const int k = options.beam_size;
  const int max_len = resolve_max_len(model, options.max_len);
  std::vector<Beam> alive(1);
  alive[0].state = model.start(source);
  std::vector<Hypothesis> finished;

  auto kth_finished = [&] {
    std::vector<double> s;
    for (const Hypothesis &h: finished)
      s.push_back(h.log_prob);
    std::nth_element(s.begin(), s.begin() + (k - 1), s.end(), std::greater<>());
    return s[k - 1];
  };

  for (int step = 0; step < max_len && !alive.empty(); ++step) {
    std::vector<Expansion> cand;
    for (std::size_t b = 0; b < alive.size(); ++b) {
      engine::DecoderStep ds = model.decode_step(alive[b].state, alive[b].last,
                                                 options.enable_copy);
      // Each beam proposes its k best tokens; an EOS among them finishes
      // without taking an alive slot.
      std::vector<int> order(ds.mixed.size());
      for (int i = 0; i < static_cast<int>(order.size()); ++i)
        order[i] = i;
      const int keep = std::min<int>(k, static_cast<int>(order.size()));
      std::partial_sort(order.begin(), order.begin() + keep, order.end(), [&](int a, int c) {
        return ds.mixed[a] > ds.mixed[c] || (ds.mixed[a] == ds.mixed[c] && a < c);
      });
      order.resize(keep);
      for (int tok: order) {
        const double p = std::max(ds.mixed[tok], 1e-300);
        cand.push_back({ alive[b].hyp.log_prob + std::log(p), static_cast<int>(b), tok, ds.p_gen,
                         ds.align_argmax });
      }
    }
    std::stable_sort(cand.begin(), cand.end(), [](const Expansion &a, const Expansion &b) {
      return a.log_prob > b.log_prob;
    });

    std::vector<Beam> next;
    for (const Expansion &e: cand) {
      const bool eos = e.token == Vocabulary::kEos;
      if (!eos && static_cast<int>(next.size()) >= k)
        continue;
      Hypothesis h = alive[e.beam].hyp;
      h.tokens.push_back(e.token);
      h.log_prob = e.log_prob;
      h.p_gen.push_back(e.p_gen);
      h.source_index.push_back(e.source_index);
      if (eos) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        next.push_back({ std::move(h), alive[e.beam].state, e.token });
      }
    }
    alive = std::move(next);
    if (static_cast<int>(finished.size()) >= k) {
      // Log-probs only fall, so an alive beam below the k-th finished one
      // cannot enter the result. With length scoring we stop right away.
      if (options.length_exponent != 0 || alive.empty()
          || alive.front().hyp.log_prob <= kth_finished())
        break;
    }
  }

  std::stable_sort(finished.begin(), finished.end(), [&](const Hypothesis &a, const Hypothesis &b) {
    return hypothesis_score(a, options.length_exponent)
           > hypothesis_score(b, options.length_exponent);
  });
  if (static_cast<int>(finished.size()) > k)
    finished.resize(k);
  return finished;
}

Hypothesis greedy_decode(const engine::Model &model, std::span<const int> source, int max_len,
                         bool enable_copy) {
  const int limit = resolve_max_len(model, max_len);
  engine::DecoderState st = model.start(source);
  Hypothesis h;
  int last = Vocabulary::kSos;
  for (int step = 0; step < limit; ++step) {
    engine::DecoderStep ds = model.decode_step(st, last, enable_copy);
    Eigen::Index tok;
    ds.mixed.maxCoeff(&tok);
    h.tokens.push_back(static_cast<int>(tok));
    h.log_prob += std::log(std::max(ds.mixed[tok], 1e-300));
    h.p_gen.push_back(ds.p_gen);
    h.source_index.push_back(ds.align_argmax);
    last = static_cast<int>(tok);
    if (last == Vocabulary::kEos) {
      h.finished = true;
      break;
    }
  }
  return h;
}

Decoded decode_tokens(const Vocabulary &vocab, std::span<const int> tokens) {
  Decoded out;
  std::vector<std::string> texts;
  for (int id: tokens)
    texts.push_back(id >= 0 && id < vocab.size() ? vocab.token(id) : "<unk>");
  try {
    out.smiles = codec::decode(texts);
    out.parsed = true;
  } catch (const Error &) {
    for (std::size_t i = 0; i < texts.size(); ++i)
      out.smiles += (i ? " " : "") + texts[i];
    return out;
  }
  out.valid = metrics::is_valid_smiles(out.smiles);
  return out;
}

PredictionSet beam_search(const engine::Model &model, const Vocabulary &vocab,
                          std::span<const int> source, const BeamOptions &options,
                          double copy_threshold) {
  PredictionSet out;
  std::set<std::string> seen;
  for (const Hypothesis &h: beam_search_ids(model, source, options)) {
    Candidate c;
    c.tokens.assign(h.tokens.begin(), h.tokens.end() - (h.finished ? 1 : 0));
    c.score = hypothesis_score(h, options.length_exponent);
    Decoded d = decode_tokens(vocab, c.tokens);
    c.smiles = d.smiles;
    c.valid = d.valid;
    std::string key = "!" + d.smiles;
    if (d.parsed) {
      try {
        key.clear();
        for (const std::string &m: metrics::canonical_molecule_set(d.smiles))
          key += m + ".";
      } catch (const Error &) {
        key = "!" + d.smiles;
      }
    }
    if (!seen.insert(key).second)
      continue;
    int copied = 0;
    for (std::size_t t = 0; t < c.tokens.size(); ++t)
      copied += (1.0 - h.p_gen[t]) > copy_threshold;
    c.copied_fraction = c.tokens.empty() ? 0.0 : static_cast<double>(copied) / c.tokens.size();
    out.candidates.push_back(std::move(c));
  }
  return out;
}

std::vector<CopyRecord> copy_trace(const engine::Model &model, std::span<const int> source,
                                   std::span<const int> candidate, double threshold) {
  engine::DecoderState st = model.start(source);
  std::vector<CopyRecord> out;
  int last = Vocabulary::kSos;
  for (int tok: candidate) {
    engine::DecoderStep ds = model.decode_step(st, last);
    out.push_back({ tok, ds.p_gen, (1.0 - ds.p_gen) > threshold, ds.align_argmax });
    last = tok;
  }
  return out;
}

std::string copy_trace_tsv(const std::vector<CopyRecord> &records, const Vocabulary &vocab,
                           std::span<const int> source) {
  std::string out = "step\ttoken\tp_gen\tcopy_prob\tcopied\tsource_index\tsource_token\n";
  char buf[128];
  for (std::size_t t = 0; t < records.size(); ++t) {
    const CopyRecord &r = records[t];
    std::snprintf(buf, sizeof buf, "%.6f\t%.6f\t%d\t%d\t", r.p_gen, 1.0 - r.p_gen,
                  r.copied ? 1 : 0, r.source_index);
    out += std::to_string(t) + "\t" + vocab.token(r.token) + "\t" + buf
           + vocab.token(source[r.source_index]) + "\n";
  }
  return out;
}

std::string matrix_csv(const Matrix &m) {
  std::string out;
  char buf[32];
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", m(r, c));
      out += (c ? "," : "") + std::string(buf);
    }
    out += "\n";
  }
  return out;
}

Matrix parse_matrix_csv(const std::string &csv) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ','))
      row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows[0].size())
      throw Error(ErrorCode::kShapeMismatch, "ragged CSV");
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<long>(rows.size()), rows.empty() ? 0 : static_cast<long>(rows[0].size()));
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c)
      m(r, c) = rows[r][c];
  return m;
}

std::string matrix_pgm(const Matrix &m) {
  std::string out = "P5\n" + std::to_string(m.cols()) + " " + std::to_string(m.rows()) + "\n255\n";
  for (long r = 0; r < m.rows(); ++r) {
    const double mx = m.cols() ? m.row(r).maxCoeff() : 0.0;
    for (long c = 0; c < m.cols(); ++c) {
      const double v = mx > 0 ? std::clamp(m(r, c) / mx, 0.0, 1.0) : 0.0;
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255 * v))));
    }
  }
  return out;
}

AttentionDumpFiles attention_dump(const engine::Model &model, std::span<const int> source,
                                  std::span<const int> target, const align::AlignmentMap &sam,
                                  const std::string &prefix) {
  if (sam.rows != static_cast<int>(target.size()) || sam.cols != static_cast<int>(source.size()))
    throw Error(ErrorCode::kShapeMismatch, "SAM shape differs from target x source");
  engine::Tape tape;
  engine::ForwardPass fp = model.forward(tape, source, target, {}, nullptr);
  const Matrix &attn = tape.value(fp.attention);
  Matrix s = Matrix::Zero(attn.rows(), attn.cols());
  for (int i = 0; i < sam.rows; ++i)
    for (int j = 0; j < sam.cols; ++j)
      s(i, j) = sam.at(i, j);
  AttentionDumpFiles files { prefix + ".attn.csv", prefix + ".attn.pgm", prefix + ".sam.csv",
                             prefix + ".sam.pgm" };
  write_file(files.attention_csv, matrix_csv(attn));
  write_file(files.attention_pgm, matrix_pgm(attn));
  write_file(files.sam_csv, matrix_csv(s));
  write_file(files.sam_pgm, matrix_pgm(s));
  return files;
}

void AlignmentMass::add(const Matrix &attention, const align::AlignmentMap &sam) {
  if (attention.rows() < sam.rows || attention.cols() != sam.cols)
    throw Error(ErrorCode::kShapeMismatch, "attention smaller than SAM");
  for (int i = 0; i < sam.rows; ++i) {
    double mass = 0;
    bool any = false;
    for (int j = 0; j < sam.cols; ++j) {
      if (sam.at(i, j)) {
        mass += attention(i, j);
        any = true;
        aligned_sum += attention(i, j);
        ++aligned_cells;
      } else {
        unaligned_sum += attention(i, j);
        ++unaligned_cells;
      }
    }
    if (any) {
      row_mass_sum += mass;
      ++rows;
    }
  }
}

}  // namespace csmiles::decoding
