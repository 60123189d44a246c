//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "csmiles/engine/checkpoint.h"
#include "csmiles/engine/loss.h"
#include "csmiles/engine/model.h"
#include "csmiles/engine/tape.h"
#include "csmiles/engine/train.h"
#include "csmiles/error.h"
#include "support/synthetic_tasks.h"

namespace csmiles::engine {
namespace {

Matrix random_matrix(std::mt19937_64 &rng, int r, int c, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (long i = 0; i < m.size(); ++i)
    m(i) = u(rng);
  return m;
}

Vector random_distribution(std::mt19937_64 &rng, int n) {
  Vector v = random_matrix(rng, n, 1, 0.01, 1).col(0);
  return v / v.sum();
}

// ---- Eq. 1-3 primitives ----

TEST(GenProbTest, Examples) {
  Vector z = Vector::Zero(4);
  CopyHead zero { z, z, z, 0 };
  EXPECT_DOUBLE_EQ(gen_prob(z, z, z, zero), 0.5);
  CopyHead big { z, z, z, 50 };
  EXPECT_GT(gen_prob(z, z, z, big), 1 - 1e-12);

  std::mt19937_64 rng(3);
  Vector h = random_matrix(rng, 4, 1).col(0), s = random_matrix(rng, 4, 1).col(0),
         x = random_matrix(rng, 4, 1).col(0);
  CopyHead head { random_matrix(rng, 4, 1).col(0), random_matrix(rng, 4, 1).col(0),
                  random_matrix(rng, 4, 1).col(0), 0.3 };
  double acc = head.b;
  for (int i = 0; i < 4; ++i)
    acc += head.w_h[i] * h[i] + head.w_s[i] * s[i] + head.w_x[i] * x[i];
  EXPECT_NEAR(gen_prob(h, s, x, head), 1.0 / (1.0 + std::exp(-acc)), 1e-12);
}

TEST(MixDistributionTest, Examples) {
  // ids: C=4, O=5, N=6 in a 7-token vocabulary
  const std::vector<int> src { 4, 4, 5 };
  Vector a(3);
  a << 0.5, 0.3, 0.2;
  Vector pv = Vector::Constant(7, 1.0 / 7);
  EXPECT_TRUE(mix_distribution(pv, a, 1.0, src).isApprox(pv));

  Vector copy = mix_distribution(pv, a, 0.0, src);
  EXPECT_NEAR(copy[4], 0.8, 1e-15);
  EXPECT_NEAR(copy[5], 0.2, 1e-15);
  EXPECT_EQ(copy[6], 0.0);

  Vector onehot = Vector::Zero(7);
  onehot[5] = 1;
  Vector half = mix_distribution(onehot, a, 0.5, src);
  EXPECT_NEAR(half[5], 0.6, 1e-15);
  EXPECT_NEAR(half[4], 0.4, 1e-15);
}

TEST(MixDistributionTest, Normalized) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(1, 12), id(0, 19);
  std::uniform_real_distribution<double> g(0, 1);
  for (int k = 0; k < 2000; ++k) {
    Vector pv = random_distribution(rng, 20);
    const int n = len(rng);
    std::vector<int> src(n);
    for (int &s: src)
      s = id(rng);
    Vector out = mix_distribution(pv, random_distribution(rng, n), g(rng), src);
    ASSERT_NEAR(out.sum(), 1.0, 1e-6);
  }
}

TEST(ContextTest, Examples) {
  Matrix same(4, 3);
  for (int r = 0; r < 4; ++r)
    same.row(r) << 1.5, -2, 0.25;
  Vector uniform = Vector::Constant(4, 0.25);
  EXPECT_TRUE(attention_context(uniform, same).isApprox(same.row(0).transpose()));

  std::mt19937_64 rng(5);
  Matrix h = random_matrix(rng, 4, 3);
  Vector onehot = Vector::Zero(4);
  onehot[2] = 1;
  EXPECT_EQ(attention_context(onehot, h), h.row(2).transpose());

  Vector a = random_distribution(rng, 4);
  Vector ctx = attention_context(a, h);
  for (int c = 0; c < 3; ++c) {
    double v = 0;
    for (int i = 0; i < 4; ++i)
      v += a[i] * h(i, c);
    EXPECT_NEAR(ctx[c], v, 1e-14);
  }
}

// ---- losses ----

TEST(LmLossTest, Examples) {
  const std::vector<int> tgt { 1, 0, 2 };
  Matrix onehot = Matrix::Zero(3, 5);
  for (int t = 0; t < 3; ++t)
    onehot(t, tgt[t]) = 1;
  EXPECT_NEAR(lm_loss(onehot, tgt), 0.0, 1e-15);
  Matrix uniform = Matrix::Constant(3, 5, 0.2);
  EXPECT_NEAR(lm_loss(uniform, tgt), std::log(5.0), 1e-12);
  EXPECT_NEAR(lm_loss_rdrop(uniform, uniform, tgt, 2.0), lm_loss(uniform, tgt), 1e-15);
  EXPECT_EQ(symmetric_kl(uniform, uniform), 0.0);
  EXPECT_THROW(lm_loss(uniform, std::vector<int> { 1 }), Error);
}

TEST(CopyIndexLossTest, Examples) {
  const std::vector<int> y { 1, 0, 1, 1 };
  const std::vector<double> exact { 1, 0, 1, 1 };
  EXPECT_NEAR(copy_index_loss(exact, y), 0.0, 1e-6);
  const std::vector<double> half(4, 0.5);
  EXPECT_NEAR(copy_index_loss(half, y), 4 * std::log(2.0), 1e-12);
  const std::vector<double> p { 0.9, 0.2 };
  EXPECT_NEAR(copy_index_loss(p, std::vector<int> { 1, 0 }),
              -(std::log(0.9) + std::log(0.8)), 1e-12);
  try {
    copy_index_loss(p, y);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
}

TEST(AlignmentLossTest, Examples) {
  Matrix a(1, 2), s(1, 2);
  a << 0.5, 0.5;
  s << 0.91, 0.01;
  EXPECT_NEAR(alignment_loss(a, s), 2 * std::log(2.0), 1e-12);

  std::mt19937_64 rng(2);
  Matrix p(3, 4);
  for (int t = 0; t < 3; ++t)
    p.row(t) = random_distribution(rng, 4).transpose();
  double entropy = 0;
  for (long i = 0; i < p.size(); ++i)
    entropy -= p(i) * std::log(p(i)) + (1 - p(i)) * std::log(1 - p(i));
  EXPECT_NEAR(alignment_loss(p, p), entropy / 3, 1e-12);
  // Any other target gives a larger cross-entropy.
  Matrix q = p;
  q(0, 0) = std::min(1.0, q(0, 0) + 0.1);
  EXPECT_GT(alignment_loss(p, q) - alignment_loss(p, p), -1e-15);
  double cross = 0;
  for (long i = 0; i < p.size(); ++i)
    cross -= q(i) * std::log(p(i)) + (1 - q(i)) * std::log(1 - p(i));
  EXPECT_NEAR(alignment_loss(p, q), cross / 3, 1e-12);

  Matrix p2(6, 4), q2(6, 4);
  p2 << p, p;
  q2 << q, q;
  EXPECT_NEAR(alignment_loss(p2, q2), alignment_loss(p, q), 1e-12);
  EXPECT_THROW(alignment_loss(p, Matrix::Zero(2, 4)), Error);
}

TEST(CombineLossesTest, Linearity) {
  LossBreakdown b = combine_losses(1.7, 0.4, 2.5, 0.1, 0.1);
  EXPECT_NEAR(b.total - b.lm, 0.1 * (b.sa + b.ci), 1e-12);
  EXPECT_EQ(combine_losses(1.7, 0.4, 2.5, 0, 0).total, 1.7);
}

// ---- tape ops against central differences ----

using Builder = std::function<Var(Tape &, std::vector<Var> &)>;

double tape_fd_error(std::vector<Tensor> &inputs, const Builder &build) {
  for (Tensor &t: inputs)
    t.zero_grad();
  {
    Tape tape;
    std::vector<Var> vars;
    for (Tensor &t: inputs)
      vars.push_back(tape.parameter(t));
    tape.backward(build(tape, vars));
  }
  auto value = [&] {
    Tape tape;
    std::vector<Var> vars;
    for (Tensor &t: inputs)
      vars.push_back(tape.parameter(t));
    return tape.scalar(build(tape, vars));
  };
  double worst = 0;
  const double h = 1e-6;
  for (Tensor &t: inputs)
    for (long i = 0; i < t.value.size(); ++i) {
      const double orig = t.value(i);
      t.value(i) = orig + h;
      const double up = value();
      t.value(i) = orig - h;
      const double down = value();
      t.value(i) = orig;
      const double num = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(num - t.grad(i)) / std::max({ 1e-6, std::abs(num),
                                                                     std::abs(t.grad(i)) }));
    }
  return worst;
}

// Reduces any matrix to a scalar with fixed random weights.
Var project(Tape &tape, Var x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix &v = tape.value(x);
  Var w = tape.constant(random_matrix(rng, static_cast<int>(v.cols()), 1));
  Var s = tape.matmul(x, w);
  Var ones = tape.constant(Matrix::Ones(1, tape.value(s).rows()));
  return tape.matmul(ones, s);
}

TEST(TapeTest, OpsMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  auto t = [&](int r, int c, double lo = -1, double hi = 1) {
    return Tensor { "x", random_matrix(rng, r, c, lo, hi), Matrix() };
  };
  struct Case {
    const char *name;
    std::vector<Tensor> in;
    Builder build;
  };
  const std::vector<int> ids { 2, 0, 2, 1 };
  const std::vector<int> targets { 1, 3, 0 };
  std::vector<Case> cases;
  cases.push_back({ "matmul", { t(3, 4), t(4, 2) },
                    [](Tape &tp, auto &v) { return project(tp, tp.matmul(v[0], v[1]), 1); } });
  cases.push_back({ "matmul_nt", { t(3, 4), t(2, 4) },
                    [](Tape &tp, auto &v) { return project(tp, tp.matmul_nt(v[0], v[1]), 2); } });
  cases.push_back({ "add_row", { t(3, 4), t(1, 4) },
                    [](Tape &tp, auto &v) { return project(tp, tp.add_row(v[0], v[1]), 3); } });
  cases.push_back({ "gelu", { t(3, 4, -3, 3) },
                    [](Tape &tp, auto &v) { return project(tp, tp.gelu(v[0]), 4); } });
  cases.push_back({ "sigmoid", { t(3, 2, -3, 3) },
                    [](Tape &tp, auto &v) { return project(tp, tp.sigmoid(v[0]), 5); } });
  cases.push_back({ "layer_norm", { t(3, 5), t(1, 5), t(1, 5) },
                    [](Tape &tp, auto &v) {
                      return project(tp, tp.layer_norm(v[0], v[1], v[2]), 6);
                    } });
  cases.push_back({ "softmax", { t(3, 4, -2, 2) },
                    [](Tape &tp, auto &v) { return project(tp, tp.softmax_rows(v[0]), 7); } });
  cases.push_back({ "causal_softmax", { t(4, 4, -2, 2) },
                    [](Tape &tp, auto &v) {
                      return project(tp, tp.softmax_rows(v[0], true), 8);
                    } });
  cases.push_back({ "columns_hcat", { t(3, 6) },
                    [](Tape &tp, auto &v) {
                      std::vector<Var> parts { tp.columns(v[0], 4, 2), tp.columns(v[0], 0, 3) };
                      return project(tp, tp.hcat(parts), 9);
                    } });
  cases.push_back({ "gather_rows", { t(3, 4) },
                    [&ids](Tape &tp, auto &v) { return project(tp, tp.gather_rows(v[0], ids), 10); } });
  cases.push_back({ "gate_mix", { t(3, 1, 0.1, 0.9), t(3, 4), t(3, 4) },
                    [](Tape &tp, auto &v) {
                      return project(tp, tp.gate_mix(v[0], v[1], v[2]), 11);
                    } });
  cases.push_back({ "nll", { t(3, 4, 0.05, 1) },
                    [&targets](Tape &tp, auto &v) { return tp.nll(v[0], targets); } });
  cases.push_back({ "bce", { t(3, 4, 0.05, 0.95) },
                    [](Tape &tp, auto &v) {
                      std::mt19937_64 r(12);
                      return tp.bce(v[0], random_matrix(r, 3, 4, 0, 1), 0.7);
                    } });
  cases.push_back({ "symmetric_kl", { t(3, 4, 0.05, 1), t(3, 4, 0.05, 1) },
                    [](Tape &tp, auto &v) { return tp.symmetric_kl(v[0], v[1]); } });
  cases.push_back({ "weighted_sum_scale_mask", { t(2, 3), t(2, 3) },
                    [](Tape &tp, auto &v) {
                      Matrix m(2, 3);
                      m << 1, 0, 2, 0.5, 1, 0;
                      const std::pair<double, Var> parts[] = {
                        { 0.3, project(tp, tp.scale(v[0], -1.5), 13) },
                        { 2.0, project(tp, tp.mask(tp.add(v[0], v[1]), m), 14) },
                      };
                      return tp.weighted_sum(parts);
                    } });
  for (Case &c: cases)
    EXPECT_LT(tape_fd_error(c.in, c.build), 1e-6) << c.name;
}

TEST(TapeTest, ForcedRowsPassNoGradient) {
  Tensor g { "g", Matrix::Constant(3, 1, 0.4), Matrix() };
  Tape tape;
  Var v = tape.parameter(g);
  Vector y(3);
  y << 1, 0, 1;
  Var f = tape.force_rows(v, { true, false, true }, y);
  EXPECT_EQ(tape.value(f)(0, 0), 1.0);
  EXPECT_EQ(tape.value(f)(1, 0), 0.4);
  tape.backward(tape.matmul(tape.constant(Matrix::Ones(1, 3)), f));
  EXPECT_EQ(g.grad(0, 0), 0.0);
  EXPECT_EQ(g.grad(1, 0), 1.0);
  EXPECT_EQ(g.grad(2, 0), 0.0);
}

// ---- model ----

ModelConfig tiny_config(int vocab, int d = 8) {
  ModelConfig c;
  c.num_layers = 2;
  c.num_heads = 2;
  c.d_model = d;
  c.d_ff = 2 * d;
  c.dropout = 0.0;
  c.vocab_size = vocab;
  c.max_len = 32;
  return c;
}

Example small_example() {
  Example ex;
  ex.source = { 4, 5, 6, 4, 7 };
  ex.target = { 5, 4, 8, 6 };
  ex.sam = align::AlignmentMap(4, 5);
  ex.sam.at(0, 1) = 1;
  ex.sam.at(1, 0) = 1;
  ex.sam.at(3, 2) = 1;
  return ex;
}

TEST(ModelConfigTest, Validation) {
  ModelConfig c = tiny_config(10);
  EXPECT_NO_THROW(c.validate());
  c.num_heads = 3;
  EXPECT_THROW(c.validate(), Error);
  c = tiny_config(10);
  c.align_head = 2;
  EXPECT_THROW(c.validate(), Error);
  c = tiny_config(10);
  c.align_layer = 2;
  EXPECT_THROW(c.validate(), Error);
}

TEST(EncodeTest, ShapeAndDeterminism) {
  Model m(tiny_config(10), 1);
  const std::vector<int> src { 4, 5, 6, 7, 8 };
  Matrix a = m.encode(src), b = m.encode(src);
  EXPECT_EQ(a.rows(), 5);
  EXPECT_EQ(a.cols(), 8);
  EXPECT_TRUE((a.array() == b.array()).all());
}

TEST(EncodeTest, Errors) {
  Model m(tiny_config(10), 1);
  try {
    m.encode(std::vector<int>(33, 4));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kSequenceTooLong);
  }
  try {
    m.encode(std::vector<int> { 4, 10 });
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownId);
  }
}

TEST(EncodeTest, ConstantInputsGiveEqualRows) {
  Model m(tiny_config(10), 1);
  for (Tensor &t: m.params().tensors())
    if (t.name == "embed")
      t.value.setZero();
    else if (t.value.rows() == t.value.cols() && t.name.find(".w") != std::string::npos)
      t.value.setIdentity();
  std::mt19937_64 rng(4);
  RowVector row = random_matrix(rng, 1, 8).row(0);
  Matrix x = row.replicate(5, 1);
  Matrix h = m.encode_inputs(x);
  // Attention over identical keys is uniform, so every row equals the
  // single-row computation.
  Matrix one = m.encode_inputs(row);
  for (int r = 0; r < 5; ++r)
    EXPECT_TRUE(h.row(r).isApprox(one.row(0), 1e-12));
}

TEST(DecodeStepTest, MatchesTapeForward) {
  Model m(tiny_config(10), 2);
  Example ex = small_example();
  Tape tape;
  ForwardPass fp = m.forward(tape, ex.source, ex.target, {}, nullptr);
  const Matrix &mixed = tape.value(fp.mixed), &attn = tape.value(fp.attention);
  DecoderState st = m.start(ex.source);
  std::vector<int> inputs { codec::Vocabulary::kSos };
  inputs.insert(inputs.end(), ex.target.begin(), ex.target.end());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    DecoderStep step = m.decode_step(st, inputs[t]);
    EXPECT_TRUE(step.mixed.isApprox(mixed.row(t).transpose(), 1e-10)) << t;
    EXPECT_TRUE(step.attention[0].isApprox(attn.row(t).transpose(), 1e-10)) << t;
    EXPECT_NEAR(step.p_gen, tape.value(fp.p_gen)(t, 0), 1e-10);
    EXPECT_NEAR(step.mixed.sum(), 1.0, 1e-6);
    EXPECT_GT(step.p_gen, 0.0);
    EXPECT_LT(step.p_gen, 1.0);
    ASSERT_EQ(step.attention.size(), 2u);
    for (const Vector &a: step.attention)
      EXPECT_NEAR(a.sum(), 1.0, 1e-6);
    // h* recomputed from the head weights and encoder rows.
    for (int c = 0; c < 8; ++c) {
      double v = 0;
      for (int i = 0; i < 5; ++i)
        v += step.attention[0][i] * st.encoder_out(i, c);
      EXPECT_NEAR(step.context[c], v, 1e-12);
    }
  }
  EXPECT_THROW(m.decode_step(st, 99), Error);
}

TEST(DecodeStepTest, ConfiguredHeadFeedsContext) {
  ModelConfig c = tiny_config(10);
  c.align_layer = 0;
  c.align_head = 1;
  Model m(c, 3);
  Example ex = small_example();
  DecoderState st = m.start(ex.source);
  DecoderStep step = m.decode_step(st, codec::Vocabulary::kSos);
  EXPECT_TRUE(step.context.isApprox(st.encoder_out.transpose() * step.attention[1], 1e-12));
  Tape tape;
  ForwardPass fp = m.forward(tape, ex.source, ex.target, {}, nullptr);
  EXPECT_TRUE(tape.value(fp.attention).row(0).transpose().isApprox(step.attention[1], 1e-10));
}

TEST(ForwardTest, DistributionsNormalized) {
  ModelConfig c = tiny_config(10);
  c.dropout = 0.3;
  Model m(c, 4);
  Example ex = small_example();
  std::mt19937_64 rng(1);
  Tape tape;
  ForwardOptions opt;
  opt.dropout = true;
  ForwardPass fp = m.forward(tape, ex.source, ex.target, opt, &rng);
  for (Var v: { fp.mixed, fp.p_vocab, fp.attention }) {
    const Matrix &x = tape.value(v);
    for (long r = 0; r < x.rows(); ++r)
      EXPECT_NEAR(x.row(r).sum(), 1.0, 1e-6);
  }
}

// ---- objective ----

TEST(TotalLossTest, Weights) {
  Model m(tiny_config(10), 5);
  Example ex = small_example();
  TrainingConfig cfg;
  {
    Tape tape;
    cfg.lambda_sa = cfg.lambda_ci = 0;
    ExampleLoss l = example_loss(tape, m, ex, cfg, objective_weights(cfg), 0, false, nullptr);
    EXPECT_EQ(l.terms.total, l.terms.lm);
  }
  {
    Tape tape;
    cfg.lambda_sa = cfg.lambda_ci = 0.1;
    ExampleLoss l = example_loss(tape, m, ex, cfg, objective_weights(cfg), 0, false, nullptr);
    EXPECT_GT(l.terms.lm, 0);
    EXPECT_GT(l.terms.sa, 0);
    EXPECT_GT(l.terms.ci, 0);
    EXPECT_NEAR(l.terms.total - l.terms.lm, 0.1 * (l.terms.sa + l.terms.ci), 1e-9);
  }
  {
    Tape tape;
    cfg.enable_sa = false;
    cfg.enable_ci = false;
    ExampleLoss l = example_loss(tape, m, ex, cfg, objective_weights(cfg), 0, false, nullptr);
    EXPECT_EQ(l.terms.total, l.terms.lm);
  }
}

TEST(TotalLossTest, PlainFunctionsAgree) {
  Model m(tiny_config(10), 6);
  Example ex = small_example();
  TrainingConfig cfg;
  Tape tape;
  ExampleLoss l = example_loss(tape, m, ex, cfg, objective_weights(cfg), 0, false, nullptr);
  Tape t2;
  ForwardPass fp = m.forward(t2, ex.source, ex.target, {}, nullptr);
  std::vector<int> targets = ex.target;
  targets.push_back(codec::Vocabulary::kEos);
  EXPECT_NEAR(l.terms.lm, lm_loss(t2.value(fp.mixed), targets), 1e-12);
  align::AlignmentMap full(5, 5);
  std::copy(ex.sam.cells.begin(), ex.sam.cells.end(), full.cells.begin());
  const auto smoothed = align::smooth(full, cfg.epsilon_smooth);
  Matrix s(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      s(i, j) = smoothed.at(i, j);
  EXPECT_NEAR(l.terms.sa, alignment_loss(t2.value(fp.attention), s), 1e-12);
  std::vector<double> pg;
  for (int t = 0; t < 5; ++t)
    pg.push_back(t2.value(fp.p_gen)(t, 0));
  EXPECT_NEAR(l.terms.ci, copy_index_loss(pg, align::copy_labels(full)), 1e-12);
}

TEST(TotalLossTest, CopyDisabledIsVocabDistribution) {
  Model m(tiny_config(10), 7);
  Example ex = small_example();
  Tape tape;
  ForwardOptions opt;
  opt.enable_copy = false;
  ForwardPass fp = m.forward(tape, ex.source, ex.target, opt, nullptr);
  EXPECT_TRUE((tape.value(fp.mixed).array() == tape.value(fp.p_vocab).array()).all());
  DecoderState st = m.start(ex.source);
  DecoderStep step = m.decode_step(st, codec::Vocabulary::kSos, false);
  EXPECT_TRUE((step.mixed.array() == step.p_vocab.array()).all());
}

TEST(TotalLossTest, ShapeMismatch) {
  Model m(tiny_config(10), 5);
  Example ex = small_example();
  ex.sam = align::AlignmentMap(3, 5);
  Tape tape;
  try {
    example_loss(tape, m, ex, {}, {}, 0, false, nullptr);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

// ---- gradients ----

TEST(GradCheckTest, AllTermsTinyModel) {
  Model m(tiny_config(10), 8);
  Example a = small_example(), b;
  b.source = { 7, 8, 9 };
  b.target = { 9, 8 };
  b.sam = align::AlignmentMap(2, 3);
  b.sam.at(0, 2) = 1;
  TrainingConfig cfg;
  GradCheckReport r = grad_check(m, { a, b }, cfg);
  ASSERT_EQ(r.terms.size(), 4u);
  for (const GradCheckTerm &t: r.terms) {
    EXPECT_LT(t.max_rel_error, 1e-3) << t.name << " " << t.worst_parameter;
    EXPECT_EQ(static_cast<std::size_t>(t.checked), m.params().scalar_count());
  }
}

TEST(GradCheckTest, CopyBiasClosedForm) {
  // Zero copy head: p_gen = 0.5 everywhere; with an all-zero SAM every
  // label is 1, so dL_CI/db = -(y - p_gen) = -0.5 per step.
  Model m(tiny_config(10), 9);
  for (const char *n: { "copy.w_h", "copy.w_s", "copy.w_x", "copy.b" })
    m.params()[n].value.setZero();
  Example ex = small_example();
  ex.sam = align::AlignmentMap(4, 5);
  m.params().zero_grad();
  Tape tape;
  ExampleLoss l = example_loss(tape, m, ex, {}, { 0, 0, 1 }, 0, false, nullptr);
  tape.backward(l.total);
  EXPECT_NEAR(m.params()["copy.b"].grad(0, 0), -0.5 * 5, 1e-12);
  GradCheckOptions opt;
  opt.tensors = { "copy.b" };
  EXPECT_NO_THROW(grad_check(m, { ex }, {}, opt));
}

TEST(GradCheckTest, ReportsMismatch) {
  // A step this large spoils the numeric estimate; the failure must name
  // the tensor.
  Model m(tiny_config(10), 10);
  GradCheckOptions opt;
  opt.step = 5.0;
  opt.tensors = { "enc.0.attn.wq" };
  try {
    grad_check(m, { small_example() }, {}, opt);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kGradMismatch);
    EXPECT_NE(std::string(e.what()).find("enc.0.attn.wq"), std::string::npos);
  }
}

// ---- training ----

TEST(TrainTest, TeacherForcingSchedule) {
  TrainingConfig cfg;
  cfg.epochs = 10;
  EXPECT_DOUBLE_EQ(teacher_forcing_tau(cfg, 0), 1.0);
  EXPECT_NEAR(teacher_forcing_tau(cfg, 2), 1.0 - 0.9 * 2 / 5, 1e-15);
  EXPECT_DOUBLE_EQ(teacher_forcing_tau(cfg, 5), 0.1);
  EXPECT_DOUBLE_EQ(teacher_forcing_tau(cfg, 9), 0.1);
  cfg.epochs = 500;
  EXPECT_DOUBLE_EQ(teacher_forcing_tau(cfg, 250), 0.1);
  EXPECT_GT(teacher_forcing_tau(cfg, 249), 0.1);
}

TEST(TrainTest, Errors) {
  Model m(tiny_config(10), 1);
  TrainingConfig cfg;
  cfg.epochs = 1;
  try {
    train(m, std::vector<Example> {}, cfg);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDataset);
  }
  cfg.lr = -1;
  EXPECT_THROW(train(m, { small_example() }, cfg), Error);
  cfg.lr = 1e-3;
  m.params()["out.b"].value(0, 4) = std::nan("");
  try {
    train(m, { small_example() }, cfg);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivergedLoss);
  }
}

TEST(TrainTest, DeterministicAndDecreasing) {
  auto task = testing::identity_task(6, 16, 0, 21);
  ModelConfig mc = tiny_config(task.vocab_size, 16);
  mc.dropout = 0.1;
  TrainingConfig cfg;
  cfg.lr = 3e-3;
  cfg.batch_size = 4;
  cfg.epochs = 500;
  cfg.seed = 5;
  // First five epochs of the full schedule.
  auto stop = [](const EpochMetrics &m) { return m.epoch < 4; };
  Model a(mc, 5), b(mc, 5);
  TrainResult ra = train(a, task.train, cfg, stop), rb = train(b, task.train, cfg, stop);
  EXPECT_EQ(metrics_csv(ra.log), metrics_csv(rb.log));
  EXPECT_EQ(parameter_checksum(a.params()), parameter_checksum(b.params()));
  ASSERT_EQ(ra.log.size(), 5u);
  EXPECT_DOUBLE_EQ(ra.log[0].tf_tau, 1.0);
  EXPECT_LT(ra.log[4].tf_tau, ra.log[3].tf_tau);
  for (int e = 1; e < 5; ++e)
    EXPECT_LT(ra.log[e].lm, ra.log[e - 1].lm) << e;
}

TEST(TrainTest, EarlyStopCallback) {
  auto task = testing::identity_task(6, 4, 0, 3);
  Model m(tiny_config(task.vocab_size), 1);
  TrainingConfig cfg;
  cfg.epochs = 10;
  TrainResult r = train(m, task.train, cfg, [](const EpochMetrics &e) { return e.epoch < 2; });
  EXPECT_EQ(r.log.size(), 3u);
  EXPECT_EQ(metrics_csv(r.log).substr(0, 39), "epoch,lm,sa,ci,total,tf_tau,token_acc\n0");
}

TEST(TrainTest, RDropRuns) {
  auto task = testing::identity_task(6, 4, 0, 3);
  ModelConfig mc = tiny_config(task.vocab_size);
  mc.dropout = 0.2;
  Model m(mc, 1);
  TrainingConfig cfg;
  cfg.epochs = 2;
  cfg.rdrop_enabled = true;
  cfg.rdrop_alpha = 0.5;
  TrainResult r = train(m, task.train, cfg);
  EXPECT_TRUE(std::isfinite(r.log.back().total));
}

// ---- checkpoints ----

TEST(CheckpointTest, RoundTrip) {
  ModelConfig mc = tiny_config(10);
  mc.align_layer = 0;
  mc.align_head = 1;
  Model m(mc, 12);
  const std::vector<std::string> vocab { "<pad>", "<unk>", "<sos>", "<eos>", "C", "&",
                                         "(", ")", "=", "O" };
  const auto path = std::filesystem::temp_directory_path() / "csmiles_ckpt_test.bin";
  save_checkpoint(path.string(), m, vocab);
  {
    std::ifstream f(path, std::ios::binary);
    char magic[5];
    f.read(magic, 5);
    EXPECT_EQ(std::string(magic, 5), "CSMK1");
  }
  Checkpoint ck = load_checkpoint(path.string());
  EXPECT_EQ(ck.vocab, vocab);
  EXPECT_EQ(ck.config.d_model, 8);
  EXPECT_EQ(ck.config.align_layer, 0);
  EXPECT_EQ(ck.config.align_head, 1);
  EXPECT_EQ(parameter_checksum(ck.params), parameter_checksum(m.params()));
  for (const Tensor &t: m.params().tensors()) {
    const Matrix &back = ck.params[t.name].value;
    EXPECT_TRUE(back.isApprox(t.value.cast<float>().cast<double>(), 0.0)) << t.name;
  }
  Model restored(ck.config, std::move(ck.params));
  save_checkpoint(path.string() + ".2", restored, vocab);
  EXPECT_EQ(file_checksum(path.string()), file_checksum(path.string() + ".2"));

  std::ofstream(path, std::ios::binary) << "CSMK2junk";
  try {
    load_checkpoint(path.string());
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kCheckpoint);
  }
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".2");
}

// ---- copy gate responsiveness ----

TEST(CopyGateTest, IdentityAndGenerationTasks) {
  TrainingConfig cfg;
  cfg.lr = 3e-3;
  cfg.batch_size = 8;
  cfg.epochs = 30;
  cfg.seed = 1;
  auto copy = testing::identity_task(12, 64, 16, 31);
  Model mc(tiny_config(copy.vocab_size, 16), 2);
  train(mc, copy.train, cfg);
  EXPECT_LT(evaluate_teacher_forced(mc, copy.held_out, cfg).mean_p_gen, 0.5);

  auto gen = testing::generation_task(12, 64, 16, 32);
  Model mg(tiny_config(gen.vocab_size, 16), 2);
  train(mg, gen.train, cfg);
  EXPECT_GT(evaluate_teacher_forced(mg, gen.held_out, cfg).mean_p_gen, 0.5);
}

}  // namespace
}  // namespace csmiles::engine
