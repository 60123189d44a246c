//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CSMILES_ENGINE_LOSS_H_
#define CSMILES_ENGINE_LOSS_H_

#include <span>
#include <vector>

#include "csmiles/engine/tape.h"

namespace csmiles::engine {

struct CopyHead {
  Vector w_h, w_s, w_x;
  double b = 0;
};

// sigmoid(w_h.h + w_s.s + w_x.x + b)
double gen_prob(const Vector &h_star, const Vector &s, const Vector &x, const CopyHead &head);

// p_gen * p_vocab + (1 - p_gen) * (attention mass of source positions holding w).
Vector mix_distribution(const Vector &p_vocab, const Vector &attention, double p_gen,
                        std::span<const int> source_ids);

// h* = sum_i a_i H_i
Vector attention_context(const Vector &attention, const Matrix &encoder_out);

// Mean token cross-entropy; probs is T x V.
double lm_loss(const Matrix &probs, std::span<const int> targets);

// Mean CE of the two passes plus alpha times the symmetric KL between them.
double lm_loss_rdrop(const Matrix &probs_a, const Matrix &probs_b,
                     std::span<const int> targets, double alpha);

double symmetric_kl(const Matrix &p, const Matrix &q);

// Summed over steps.
double copy_index_loss(std::span<const double> p_gen, std::span<const int> y);

// attention and smoothed SAM are both T x |P|; mean over T.
double alignment_loss(const Matrix &attention, const Matrix &smoothed_sam);

struct LossBreakdown {
  double lm = 0;
  double sa = 0;
  double ci = 0;
  double total = 0;
};

LossBreakdown combine_losses(double lm, double sa, double ci, double lambda_sa,
                             double lambda_ci);

}  // namespace csmiles::engine

#endif  // CSMILES_ENGINE_LOSS_H_
