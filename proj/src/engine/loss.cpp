//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "csmiles/engine/loss.h"

#include <cmath>

#include "csmiles/error.h"

namespace csmiles::engine {
namespace {

double clip(double p) {
  return std::min(std::max(p, kProbClip), 1.0 - kProbClip);
}

}  // namespace

double gen_prob(const Vector &h_star, const Vector &s, const Vector &x, const CopyHead &head) {
  const double z = head.w_h.dot(h_star) + head.w_s.dot(s) + head.w_x.dot(x) + head.b;
  return 1.0 / (1.0 + std::exp(-z));
}

Vector mix_distribution(const Vector &p_vocab, const Vector &attention, double p_gen,
                        std::span<const int> source_ids) {
  if (attention.size() != static_cast<long>(source_ids.size()))
    throw Error(ErrorCode::kLengthMismatch, "attention and source lengths differ");
  Vector out = p_gen * p_vocab;
  for (std::size_t i = 0; i < source_ids.size(); ++i) {
    if (source_ids[i] < 0 || source_ids[i] >= out.size())
      throw Error(ErrorCode::kUnknownId, "source id out of range");
    out(source_ids[i]) += (1.0 - p_gen) * attention(static_cast<long>(i));
  }
  return out;
}

Vector attention_context(const Vector &attention, const Matrix &encoder_out) {
  if (attention.size() != encoder_out.rows())
    throw Error(ErrorCode::kShapeMismatch, "attention length differs from encoder rows");
  return encoder_out.transpose() * attention;
}

double lm_loss(const Matrix &probs, std::span<const int> targets) {
  if (probs.rows() != static_cast<long>(targets.size()))
    throw Error(ErrorCode::kLengthMismatch, "lm_loss: rows differ from targets");
  if (targets.empty())
    return 0;
  double sum = 0;
  for (long t = 0; t < probs.rows(); ++t)
    sum -= std::log(std::max(probs(t, targets[t]), kProbClip));
  return sum / static_cast<double>(targets.size());
}

double symmetric_kl(const Matrix &p, const Matrix &q) {
  if (p.rows() != q.rows() || p.cols() != q.cols())
    throw Error(ErrorCode::kShapeMismatch, "symmetric_kl: shapes differ");
  double sum = 0;
  for (long i = 0; i < p.size(); ++i) {
    const double a = std::max(p(i), kProbClip), b = std::max(q(i), kProbClip);
    sum += 0.5 * (a - b) * (std::log(a) - std::log(b));
  }
  return p.rows() ? sum / p.rows() : 0.0;
}

double lm_loss_rdrop(const Matrix &probs_a, const Matrix &probs_b,
                     std::span<const int> targets, double alpha) {
  return 0.5 * (lm_loss(probs_a, targets) + lm_loss(probs_b, targets))
         + alpha * symmetric_kl(probs_a, probs_b);
}

double copy_index_loss(std::span<const double> p_gen, std::span<const int> y) {
  if (p_gen.size() != y.size())
    throw Error(ErrorCode::kLengthMismatch, "copy_index_loss: lengths differ");
  double sum = 0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double p = clip(p_gen[t]);
    sum -= y[t] * std::log(p) + (1 - y[t]) * std::log(1.0 - p);
  }
  return sum;
}

double alignment_loss(const Matrix &attention, const Matrix &smoothed_sam) {
  if (attention.rows() != smoothed_sam.rows() || attention.cols() != smoothed_sam.cols())
    throw Error(ErrorCode::kShapeMismatch, "alignment_loss: shapes differ");
  if (attention.rows() == 0)
    return 0;
  double sum = 0;
  for (long i = 0; i < attention.size(); ++i) {
    const double a = clip(attention(i)), s = smoothed_sam(i);
    sum -= s * std::log(a) + (1.0 - s) * std::log(1.0 - a);
  }
  return sum / attention.rows();
}

LossBreakdown combine_losses(double lm, double sa, double ci, double lambda_sa,
                             double lambda_ci) {
  return { lm, sa, ci, lm + lambda_sa * sa + lambda_ci * ci };
}

}  // namespace csmiles::engine
