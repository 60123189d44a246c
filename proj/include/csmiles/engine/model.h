//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CSMILES_ENGINE_MODEL_H_
#define CSMILES_ENGINE_MODEL_H_

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "csmiles/engine/tape.h"

namespace csmiles::engine {

struct ModelConfig {
  int num_layers = 2;
  int num_heads = 4;
  int d_model = 64;
  int d_ff = 128;
  double dropout = 0.1;
  int vocab_size = 0;
  int max_len = 256;
  int align_layer = -1;  // -1 = last decoder layer
  int align_head = 0;

  int alignment_layer() const { return align_layer < 0 ? num_layers - 1 : align_layer; }
  // InvalidConfig on a bad combination.
  void validate() const;
};

class ParameterSet {
public:
  Tensor &add(std::string name, Matrix value);
  Tensor &operator[](const std::string &name);
  const Tensor &operator[](const std::string &name) const;
  bool contains(const std::string &name) const { return index_.contains(name); }

  std::vector<Tensor> &tensors() { return tensors_; }
  const std::vector<Tensor> &tensors() const { return tensors_; }
  void zero_grad();
  std::size_t scalar_count() const;

private:
  std::vector<Tensor> tensors_;
  std::map<std::string, std::size_t> index_;
};

// Tape-side outputs of one teacher-forced pass. T = target length + 1 (EOS).
struct ForwardPass {
  Var mixed;      // T x V, Eq. 3 distribution
  Var p_vocab;    // T x V
  Var attention;  // T x |P|, alignment head
  Var p_gen;      // T x 1, model gate before any forcing
  Var gate;       // T x 1, gate actually used in the mix
};

struct ForwardOptions {
  bool dropout = false;
  bool enable_copy = true;
  // Gate rows replaced by the copy label (teacher-forced copy decision).
  std::vector<bool> forced_gate;
  Vector gate_labels;
};

// Incremental decoding state.
struct DecoderState {
  std::vector<int> source;
  Matrix encoder_out;                      // |P| x d
  std::vector<Matrix> cross_k, cross_v;    // per layer, |P| x d
  std::vector<Matrix> self_k, self_v;      // per layer, t x d
  int position = 0;
};

struct DecoderStep {
  Vector state;                         // s_t, final decoder state
  Vector input;                         // x_t, scaled embedding plus position
  std::vector<Vector> attention;        // alignment layer, one per head
  Vector context;                       // h_t*
  double p_gen = 0;
  Vector p_vocab;
  Vector mixed;
  int align_argmax = 0;                 // argmax of the alignment head
};

Matrix positional_encoding(int length, int d_model);

class Model {
public:
  Model(const ModelConfig &config, std::uint64_t seed);
  Model(const ModelConfig &config, ParameterSet params);

  const ModelConfig &config() const { return config_; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }

  // Tape pass with teacher-forced decoder inputs SOS, y_1 .. y_n.
  ForwardPass forward(Tape &tape, std::span<const int> source, std::span<const int> target,
                      const ForwardOptions &options, std::mt19937_64 *rng) const;

  Matrix encode(std::span<const int> source) const;
  // Encoder stack on already-embedded inputs (|P| x d).
  Matrix encode_inputs(const Matrix &inputs) const;

  DecoderState start(std::span<const int> source) const;
  DecoderStep decode_step(DecoderState &state, int prev_token, bool enable_copy = true) const;

private:
  void init(std::uint64_t seed);
  void check_ids(std::span<const int> ids) const;

  ModelConfig config_;
  ParameterSet params_;
  Matrix positions_;
};

}  // namespace csmiles::engine

#endif  // CSMILES_ENGINE_MODEL_H_
