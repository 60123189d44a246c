//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CSMILES_ENGINE_TRAIN_H_
#define CSMILES_ENGINE_TRAIN_H_

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "csmiles/alignment.h"
#include "csmiles/engine/loss.h"
#include "csmiles/engine/model.h"

namespace csmiles::engine {

// One (product, reactants) pair as ids. sam rows follow target, columns
// follow source; the EOS row is added internally (all zero, label 1).
struct Example {
  std::vector<int> source;
  std::vector<int> target;
  align::AlignmentMap sam;
};

struct TrainingConfig {
  double lambda_sa = 0.1;
  double lambda_ci = 0.1;
  double epsilon_smooth = 0.1;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double adam_eps = 1e-9;
  int batch_size = 32;
  int epochs = 100;
  double tf_start = 1.0;
  double tf_end = 0.1;
  double tf_fraction = 0.5;
  bool rdrop_enabled = false;
  double rdrop_alpha = 1.0;
  bool enable_copy = true;
  bool enable_sa = true;
  bool enable_ci = true;
  std::uint64_t seed = 0;

  void validate() const;
};

// Gate-substitution probability for an epoch (0-based).
double teacher_forcing_tau(const TrainingConfig &cfg, int epoch);

// Per-term weights; the usual objective is {1, lambda_sa, lambda_ci} with
// ablation switches applied.
struct LossWeights {
  double lm = 1;
  double sa = 0;
  double ci = 0;
};

LossWeights objective_weights(const TrainingConfig &cfg);

struct ExampleLoss {
  Var total;
  LossBreakdown terms;  // unweighted lm/sa/ci plus weighted total
  int tokens = 0;
  int correct = 0;      // argmax of the mixed distribution == target
  double p_gen_sum = 0;
};

// Builds the per-example objective on the tape. tau is the gate-forcing
// probability; rng may be null when dropout and forcing are off.
ExampleLoss example_loss(Tape &tape, const Model &model, const Example &ex,
                         const TrainingConfig &cfg, const LossWeights &weights, double tau,
                         bool dropout, std::mt19937_64 *rng);

struct EpochMetrics {
  int epoch = 0;
  double lm = 0;
  double sa = 0;
  double ci = 0;
  double total = 0;
  double tf_tau = 0;
  double token_acc = 0;
};

class Adam {
public:
  explicit Adam(const TrainingConfig &cfg) : cfg_(cfg) { }
  void step(ParameterSet &params);

private:
  TrainingConfig cfg_;
  std::vector<Matrix> m_, v_;
  long t_ = 0;
};

using EpochSource = std::function<std::vector<Example>(int epoch)>;
// Return false to stop after this epoch.
using EpochCallback = std::function<bool(const EpochMetrics &)>;

struct TrainResult {
  std::vector<EpochMetrics> log;
};

// EmptyDataset; DivergedLoss on a non-finite loss.
TrainResult train(Model &model, const EpochSource &source, const TrainingConfig &cfg,
                  const EpochCallback &on_epoch = {});
TrainResult train(Model &model, const std::vector<Example> &data, const TrainingConfig &cfg,
                  const EpochCallback &on_epoch = {});

std::string metrics_csv(const std::vector<EpochMetrics> &log);

// Dropout and gate forcing off.
struct TeacherForcedEval {
  LossBreakdown loss;  // means over examples
  double token_acc = 0;
  double mean_p_gen = 0;
};
TeacherForcedEval evaluate_teacher_forced(const Model &model, const std::vector<Example> &data,
                                          const TrainingConfig &cfg);

// Alignment-head attention of a teacher-forced pass, T x |P| (T includes EOS).
Matrix alignment_attention(const Model &model, const Example &ex);

struct GradCheckOptions {
  double step = 1e-4;
  double tolerance = 1e-3;
  // Denominator floor for the relative error of near-zero gradients.
  double floor = 1e-6;
  // Empty = every tensor. Entries per tensor, 0 = all.
  std::vector<std::string> tensors;
  int max_entries = 0;
  std::uint64_t seed = 0;
};

struct GradCheckTerm {
  std::string name;  // lm, sa, ci, total
  double max_rel_error = 0;
  std::string worst_parameter;
  int checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckTerm> terms;
};

// Checks lm, sa, ci alone and the weighted total. GradMismatch names the
// worst parameter entry when the tolerance is exceeded.
GradCheckReport grad_check(Model &model, const std::vector<Example> &batch,
                           const TrainingConfig &cfg, const GradCheckOptions &options = {});

}  // namespace csmiles::engine

#endif  // CSMILES_ENGINE_TRAIN_H_
