//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "csmiles/engine/model.h"

#include <cmath>

#include "csmiles/csmiles.h"
#include "csmiles/engine/loss.h"
#include "csmiles/error.h"

namespace csmiles::engine {
namespace {

using codec::Vocabulary;

std::string layer_name(const char *stack, int l, const char *rest) {
  return std::string(stack) + "." + std::to_string(l) + "." + rest;
}

// ---- plain kernels for the inference path ----

Matrix layer_norm(const Matrix &x, const Tensor &g, const Tensor &b) {
  Matrix y(x.rows(), x.cols());
  for (long r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    y.row(r) = ((x.row(r).array() - mu) / std::sqrt(var + 1e-5)).matrix();
  }
  y = (y.array().rowwise() * g.value.row(0).array()).matrix();
  y.rowwise() += b.value.row(0);
  return y;
}

Matrix affine(const Matrix &x, const Tensor &w, const Tensor &b) {
  Matrix y = x * w.value;
  y.rowwise() += b.value.row(0);
  return y;
}

Matrix gelu(const Matrix &x) {
  return x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::tanh(0.7978845608028654 * (v + 0.044715 * v * v * v)));
  });
}

void softmax_in_place(Eigen::Ref<RowVector> row) {
  const double m = row.maxCoeff();
  row = (row.array() - m).exp().matrix();
  row /= row.sum();
}

// Attention of the query rows over all key rows; per-head weights go to *heads.
Matrix attend(const ParameterSet &p, const std::string &prefix, const Matrix &q_in,
              const Matrix &k, const Matrix &v, int num_heads, bool causal,
              std::vector<Matrix> *heads) {
  Matrix q = affine(q_in, p[prefix + "wq"], p[prefix + "bq"]);
  const int d = static_cast<int>(q.cols()), dk = d / num_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  Matrix concat(q.rows(), d);
  if (heads)
    heads->clear();
  for (int h = 0; h < num_heads; ++h) {
    Matrix s = q.middleCols(h * dk, dk) * k.middleCols(h * dk, dk).transpose() * scale;
    Matrix a = Matrix::Zero(s.rows(), s.cols());
    for (long r = 0; r < s.rows(); ++r) {
      const long n = causal ? std::min<long>(r + 1, s.cols()) : s.cols();
      RowVector row = s.row(r).head(n);
      softmax_in_place(row);
      a.row(r).head(n) = row;
    }
    concat.middleCols(h * dk, dk) = a * v.middleCols(h * dk, dk);
    if (heads)
      heads->push_back(std::move(a));
  }
  return affine(concat, p[prefix + "wo"], p[prefix + "bo"]);
}

Matrix feed_forward(const ParameterSet &p, const std::string &prefix, const Matrix &x) {
  return affine(gelu(affine(x, p[prefix + "w1"], p[prefix + "b1"])), p[prefix + "w2"],
                p[prefix + "b2"]);
}

// ---- tape helpers ----

struct TapeCtx {
  Tape &tape;
  const ParameterSet &params;
  std::map<std::string, Var> vars;
  bool dropout;
  double rate;
  std::mt19937_64 *rng;

  Var param(const std::string &name) {
    auto it = vars.find(name);
    if (it != vars.end())
      return it->second;
    Var v = tape.parameter(const_cast<Tensor &>(params[name]));
    vars.emplace(name, v);
    return v;
  }

  Var affine(Var x, const std::string &w, const std::string &b) {
    return tape.add_row(tape.matmul(x, param(w)), param(b));
  }

  Var drop(Var x) {
    if (!dropout || rate <= 0)
      return x;
    const Matrix &v = tape.value(x);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix m(v.rows(), v.cols());
    for (long i = 0; i < m.size(); ++i)
      m(i) = u(*rng) < rate ? 0.0 : 1.0 / (1.0 - rate);
    return tape.mask(x, m);
  }

  Var norm(Var x, const std::string &prefix) {
    return tape.layer_norm(x, param(prefix + "g"), param(prefix + "b"));
  }

  Var attention(const std::string &prefix, Var q_in, Var kv_in, int num_heads, bool causal,
                std::vector<Var> *heads) {
    Var q = affine(q_in, prefix + "wq", prefix + "bq");
    Var k = affine(kv_in, prefix + "wk", prefix + "bk");
    Var v = affine(kv_in, prefix + "wv", prefix + "bv");
    const int d = static_cast<int>(tape.value(q).cols()), dk = d / num_heads;
    std::vector<Var> outs;
    for (int h = 0; h < num_heads; ++h) {
      Var s = tape.scale(tape.matmul_nt(tape.columns(q, h * dk, dk), tape.columns(k, h * dk, dk)),
                         1.0 / std::sqrt(static_cast<double>(dk)));
      Var a = tape.softmax_rows(s, causal);
      if (heads)
        heads->push_back(a);
      outs.push_back(tape.matmul(a, tape.columns(v, h * dk, dk)));
    }
    return affine(tape.hcat(outs), prefix + "wo", prefix + "bo");
  }

  Var feed_forward(const std::string &prefix, Var x) {
    return affine(tape.gelu(affine(x, prefix + "w1", prefix + "b1")), prefix + "w2",
                  prefix + "b2");
  }
};

}  // namespace

void ModelConfig::validate() const {
  auto bad = [](const std::string &what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (num_layers <= 0 || num_heads <= 0 || d_model <= 0 || d_ff <= 0 || max_len <= 0)
    bad("dimensions must be positive");
  if (d_model % num_heads != 0)
    bad("d_model must be divisible by num_heads");
  if (dropout < 0 || dropout >= 1)
    bad("dropout must be in [0,1)");
  if (vocab_size <= Vocabulary::kEos)
    bad("vocab_size must cover the sentinel ids");
  if (alignment_layer() < 0 || alignment_layer() >= num_layers || align_head < 0
      || align_head >= num_heads)
    bad("alignment head out of range");
}

Tensor &ParameterSet::add(std::string name, Matrix value) {
  index_[name] = tensors_.size();
  tensors_.push_back({ std::move(name), std::move(value), Matrix() });
  return tensors_.back();
}

Tensor &ParameterSet::operator[](const std::string &name) {
  auto it = index_.find(name);
  if (it == index_.end())
    throw Error(ErrorCode::kInvalidConfig, "no parameter " + name);
  return tensors_[it->second];
}

const Tensor &ParameterSet::operator[](const std::string &name) const {
  return const_cast<ParameterSet &>(*this)[name];
}

void ParameterSet::zero_grad() {
  for (Tensor &t: tensors_)
    t.zero_grad();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const Tensor &t: tensors_)
    n += static_cast<std::size_t>(t.value.size());
  return n;
}

Matrix positional_encoding(int length, int d_model) {
  Matrix pe(length, d_model);
  for (int pos = 0; pos < length; ++pos)
    for (int i = 0; i < d_model; i += 2) {
      const double angle = pos / std::pow(10000.0, static_cast<double>(i) / d_model);
      pe(pos, i) = std::sin(angle);
      if (i + 1 < d_model)
        pe(pos, i + 1) = std::cos(angle);
    }
  return pe;
}

Model::Model(const ModelConfig &config, std::uint64_t seed) : config_(config) {
  config_.validate();
  positions_ = positional_encoding(config_.max_len, config_.d_model);
  init(seed);
}

Model::Model(const ModelConfig &config, ParameterSet params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
  positions_ = positional_encoding(config_.max_len, config_.d_model);
  Model shape_ref(config_, 0);
  for (const Tensor &t: shape_ref.params().tensors()) {
    if (!params_.contains(t.name))
      throw Error(ErrorCode::kCheckpoint, "missing tensor " + t.name);
    const Tensor &mine = params_[t.name];
    if (mine.value.rows() != t.value.rows() || mine.value.cols() != t.value.cols())
      throw Error(ErrorCode::kCheckpoint, "shape mismatch for " + t.name);
  }
}

void Model::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int d = config_.d_model, f = config_.d_ff, v = config_.vocab_size;
  auto xavier = [&](int in, int out) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double limit = std::sqrt(6.0 / (in + out));
    Matrix m(in, out);
    for (long i = 0; i < m.size(); ++i)
      m(i) = limit * u(rng);
    return m;
  };
  auto zeros = [](int n) { return Matrix::Zero(1, n); };
  auto ones = [](int n) { return Matrix::Ones(1, n); };
  {
    std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
    Matrix e(v, d);
    for (long i = 0; i < e.size(); ++i)
      e(i) = n(rng);
    params_.add("embed", std::move(e));
  }
  auto attention = [&](const std::string &prefix) {
    for (const char *m: { "q", "k", "v", "o" }) {
      params_.add(prefix + "w" + m, xavier(d, d));
      params_.add(prefix + "b" + m, zeros(d));
    }
  };
  auto norm = [&](const std::string &prefix) {
    params_.add(prefix + "g", ones(d));
    params_.add(prefix + "b", zeros(d));
  };
  auto ffn = [&](const std::string &prefix) {
    params_.add(prefix + "w1", xavier(d, f));
    params_.add(prefix + "b1", zeros(f));
    params_.add(prefix + "w2", xavier(f, d));
    params_.add(prefix + "b2", zeros(d));
  };
  for (int l = 0; l < config_.num_layers; ++l) {
    norm(layer_name("enc", l, "ln1."));
    attention(layer_name("enc", l, "attn."));
    norm(layer_name("enc", l, "ln2."));
    ffn(layer_name("enc", l, "ff."));
  }
  norm("enc.ln.");
  for (int l = 0; l < config_.num_layers; ++l) {
    norm(layer_name("dec", l, "ln1."));
    attention(layer_name("dec", l, "self."));
    norm(layer_name("dec", l, "ln2."));
    attention(layer_name("dec", l, "cross."));
    norm(layer_name("dec", l, "ln3."));
    ffn(layer_name("dec", l, "ff."));
  }
  norm("dec.ln.");
  params_.add("out.w", xavier(d, v));
  params_.add("out.b", zeros(v));
  params_.add("copy.w_h", xavier(d, 1));
  params_.add("copy.w_s", xavier(d, 1));
  params_.add("copy.w_x", xavier(d, 1));
  params_.add("copy.b", Matrix::Zero(1, 1));
}

void Model::check_ids(std::span<const int> ids) const {
  if (static_cast<int>(ids.size()) > config_.max_len)
    throw Error(ErrorCode::kSequenceTooLong,
                std::to_string(ids.size()) + " tokens exceeds max_len "
                  + std::to_string(config_.max_len));
  for (int id: ids)
    if (id < 0 || id >= config_.vocab_size)
      throw Error(ErrorCode::kUnknownId, "id " + std::to_string(id));
}

ForwardPass Model::forward(Tape &tape, std::span<const int> source, std::span<const int> target,
                           const ForwardOptions &options, std::mt19937_64 *rng) const {
  check_ids(source);
  std::vector<int> dec_in { Vocabulary::kSos };
  dec_in.insert(dec_in.end(), target.begin(), target.end());
  check_ids(dec_in);
  if (source.empty())
    throw Error(ErrorCode::kLengthMismatch, "empty source");
  const int d = config_.d_model;
  const int np = static_cast<int>(source.size()), nt = static_cast<int>(dec_in.size());
  const double emb_scale = std::sqrt(static_cast<double>(d));

  TapeCtx c { tape, params_, {}, options.dropout, config_.dropout, rng };
  Var emb = c.param("embed");

  Var x = tape.add(tape.scale(tape.gather_rows(emb, source), emb_scale),
                   tape.constant(positions_.topRows(np)));
  x = c.drop(x);
  for (int l = 0; l < config_.num_layers; ++l) {
    Var h = c.norm(x, layer_name("enc", l, "ln1."));
    x = tape.add(x, c.drop(c.attention(layer_name("enc", l, "attn."), h, h, config_.num_heads,
                                       false, nullptr)));
    h = c.norm(x, layer_name("enc", l, "ln2."));
    x = tape.add(x, c.drop(c.feed_forward(layer_name("enc", l, "ff."), h)));
  }
  Var enc = c.norm(x, "enc.ln.");

  Var x_in = tape.add(tape.scale(tape.gather_rows(emb, dec_in), emb_scale),
                      tape.constant(positions_.topRows(nt)));
  Var y = c.drop(x_in);
  Var align;
  for (int l = 0; l < config_.num_layers; ++l) {
    Var h = c.norm(y, layer_name("dec", l, "ln1."));
    y = tape.add(y, c.drop(c.attention(layer_name("dec", l, "self."), h, h, config_.num_heads,
                                       true, nullptr)));
    h = c.norm(y, layer_name("dec", l, "ln2."));
    std::vector<Var> heads;
    y = tape.add(y, c.drop(c.attention(layer_name("dec", l, "cross."), h, enc,
                                       config_.num_heads, false, &heads)));
    if (l == config_.alignment_layer())
      align = heads[config_.align_head];
    h = c.norm(y, layer_name("dec", l, "ln3."));
    y = tape.add(y, c.drop(c.feed_forward(layer_name("dec", l, "ff."), h)));
  }
  Var s = c.norm(y, "dec.ln.");

  ForwardPass out;
  out.attention = align;
  out.p_vocab = tape.softmax_rows(c.affine(s, "out.w", "out.b"));
  Var h_star = tape.matmul(align, enc);
  Var z = tape.add(tape.add(tape.matmul(h_star, c.param("copy.w_h")),
                            tape.matmul(s, c.param("copy.w_s"))),
                   tape.matmul(x_in, c.param("copy.w_x")));
  out.p_gen = tape.sigmoid(tape.add_row(z, c.param("copy.b")));
  if (!options.enable_copy) {
    out.gate = tape.constant(Matrix::Ones(nt, 1));
    out.mixed = out.p_vocab;
    return out;
  }
  out.gate = out.p_gen;
  if (!options.forced_gate.empty()) {
    if (static_cast<int>(options.forced_gate.size()) != nt || options.gate_labels.size() != nt)
      throw Error(ErrorCode::kLengthMismatch, "forced gate length differs from target");
    out.gate = tape.force_rows(out.p_gen, options.forced_gate, options.gate_labels);
  }
  Matrix one_hot = Matrix::Zero(np, config_.vocab_size);
  for (int i = 0; i < np; ++i)
    one_hot(i, source[i]) = 1.0;
  Var copy = tape.matmul(align, tape.constant(std::move(one_hot)));
  out.mixed = tape.gate_mix(out.gate, out.p_vocab, copy);
  return out;
}

Matrix Model::encode_inputs(const Matrix &inputs) const {
  Matrix x = inputs;
  for (int l = 0; l < config_.num_layers; ++l) {
    Matrix h = layer_norm(x, params_[layer_name("enc", l, "ln1.g")],
                          params_[layer_name("enc", l, "ln1.b")]);
    const std::string a = layer_name("enc", l, "attn.");
    Matrix k = affine(h, params_[a + "wk"], params_[a + "bk"]);
    Matrix v = affine(h, params_[a + "wv"], params_[a + "bv"]);
    x += attend(params_, a, h, k, v, config_.num_heads, false, nullptr);
    h = layer_norm(x, params_[layer_name("enc", l, "ln2.g")],
                   params_[layer_name("enc", l, "ln2.b")]);
    x += feed_forward(params_, layer_name("enc", l, "ff."), h);
  }
  return layer_norm(x, params_["enc.ln.g"], params_["enc.ln.b"]);
}

Matrix Model::encode(std::span<const int> source) const {
  check_ids(source);
  const Matrix &emb = params_["embed"].value;
  const double scale = std::sqrt(static_cast<double>(config_.d_model));
  Matrix x(static_cast<long>(source.size()), config_.d_model);
  for (std::size_t i = 0; i < source.size(); ++i)
    x.row(static_cast<long>(i)) = emb.row(source[i]) * scale + positions_.row(static_cast<long>(i));
  return encode_inputs(x);
}

DecoderState Model::start(std::span<const int> source) const {
  DecoderState st;
  st.source.assign(source.begin(), source.end());
  st.encoder_out = encode(source);
  for (int l = 0; l < config_.num_layers; ++l) {
    const std::string a = layer_name("dec", l, "cross.");
    st.cross_k.push_back(affine(st.encoder_out, params_[a + "wk"], params_[a + "bk"]));
    st.cross_v.push_back(affine(st.encoder_out, params_[a + "wv"], params_[a + "bv"]));
    st.self_k.emplace_back(0, config_.d_model);
    st.self_v.emplace_back(0, config_.d_model);
  }
  return st;
}

DecoderStep Model::decode_step(DecoderState &st, int prev_token, bool enable_copy) const {
  if (prev_token < 0 || prev_token >= config_.vocab_size)
    throw Error(ErrorCode::kUnknownId, "id " + std::to_string(prev_token));
  if (st.position >= config_.max_len)
    throw Error(ErrorCode::kSequenceTooLong, "decoder passed max_len");
  const int d = config_.d_model;
  const double scale = std::sqrt(static_cast<double>(d));
  Matrix x = params_["embed"].value.row(prev_token) * scale + positions_.row(st.position);
  DecoderStep out;
  out.input = x.row(0).transpose();
  Matrix y = x;
  for (int l = 0; l < config_.num_layers; ++l) {
    Matrix h = layer_norm(y, params_[layer_name("dec", l, "ln1.g")],
                          params_[layer_name("dec", l, "ln1.b")]);
    const std::string sa = layer_name("dec", l, "self.");
    Matrix &k = st.self_k[l], &v = st.self_v[l];
    k.conservativeResize(k.rows() + 1, Eigen::NoChange);
    v.conservativeResize(v.rows() + 1, Eigen::NoChange);
    k.bottomRows(1) = affine(h, params_[sa + "wk"], params_[sa + "bk"]);
    v.bottomRows(1) = affine(h, params_[sa + "wv"], params_[sa + "bv"]);
    y += attend(params_, sa, h, k, v, config_.num_heads, false, nullptr);
    h = layer_norm(y, params_[layer_name("dec", l, "ln2.g")],
                   params_[layer_name("dec", l, "ln2.b")]);
    std::vector<Matrix> heads;
    y += attend(params_, layer_name("dec", l, "cross."), h, st.cross_k[l], st.cross_v[l],
                config_.num_heads, false, &heads);
    if (l == config_.alignment_layer())
      for (const Matrix &a: heads)
        out.attention.push_back(a.row(0).transpose());
    h = layer_norm(y, params_[layer_name("dec", l, "ln3.g")],
                   params_[layer_name("dec", l, "ln3.b")]);
    y += feed_forward(params_, layer_name("dec", l, "ff."), h);
  }
  ++st.position;
  Matrix s = layer_norm(y, params_["dec.ln.g"], params_["dec.ln.b"]);
  out.state = s.row(0).transpose();
  RowVector logits = affine(s, params_["out.w"], params_["out.b"]).row(0);
  softmax_in_place(logits);
  out.p_vocab = logits.transpose();

  const Vector &a = out.attention[config_.align_head];
  a.maxCoeff(&out.align_argmax);
  out.context = st.encoder_out.transpose() * a;
  CopyHead head { params_["copy.w_h"].value.col(0), params_["copy.w_s"].value.col(0),
                  params_["copy.w_x"].value.col(0), params_["copy.b"].value(0, 0) };
  const double g = gen_prob(out.context, out.state, out.input, head);
  out.p_gen = g;
  out.mixed = enable_copy ? mix_distribution(out.p_vocab, a, g, st.source) : out.p_vocab;
  return out;
}

}  // namespace csmiles::engine
