//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "csmiles/engine/train.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "csmiles/csmiles.h"
#include "csmiles/error.h"

namespace csmiles::engine {
namespace {

using codec::Vocabulary;

// SAM with the EOS row appended.
align::AlignmentMap with_eos_row(const Example &ex) {
  if (ex.sam.rows != static_cast<int>(ex.target.size())
      || ex.sam.cols != static_cast<int>(ex.source.size()))
    throw Error(ErrorCode::kShapeMismatch,
                "SAM is " + std::to_string(ex.sam.rows) + "x" + std::to_string(ex.sam.cols)
                  + ", expected " + std::to_string(ex.target.size()) + "x"
                  + std::to_string(ex.source.size()));
  align::AlignmentMap m(ex.sam.rows + 1, ex.sam.cols);
  std::copy(ex.sam.cells.begin(), ex.sam.cells.end(), m.cells.begin());
  return m;
}

}  // namespace

void TrainingConfig::validate() const {
  if (lambda_sa < 0 || lambda_ci < 0 || epsilon_smooth < 0 || epsilon_smooth > 1 || lr < 0
      || rdrop_alpha < 0 || batch_size <= 0 || epochs < 0 || tf_start < 0 || tf_end < 0
      || tf_fraction < 0)
    throw Error(ErrorCode::kInvalidConfig, "training rates and weights must be non-negative");
}

double teacher_forcing_tau(const TrainingConfig &cfg, int epoch) {
  const double span = cfg.tf_fraction * cfg.epochs;
  if (epoch >= span)
    return cfg.tf_end;
  return cfg.tf_start + (cfg.tf_end - cfg.tf_start) * epoch / span;
}

LossWeights objective_weights(const TrainingConfig &cfg) {
  return { 1.0, cfg.enable_sa ? cfg.lambda_sa : 0.0, cfg.enable_ci ? cfg.lambda_ci : 0.0 };
}

ExampleLoss example_loss(Tape &tape, const Model &model, const Example &ex,
                         const TrainingConfig &cfg, const LossWeights &weights, double tau,
                         bool dropout, std::mt19937_64 *rng) {
  const align::AlignmentMap sam = with_eos_row(ex);
  const int steps = sam.rows, np = sam.cols;
  std::vector<int> targets = ex.target;
  targets.push_back(Vocabulary::kEos);
  const std::vector<int> labels = align::copy_labels(sam);

  ForwardOptions opt;
  opt.dropout = dropout;
  opt.enable_copy = cfg.enable_copy;
  Vector y(steps);
  for (int t = 0; t < steps; ++t)
    y(t) = labels[t];
  if (cfg.enable_copy && tau > 0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    opt.forced_gate.resize(steps);
    for (int t = 0; t < steps; ++t)
      opt.forced_gate[t] = u(*rng) < tau;
    opt.gate_labels = y;
  }

  ForwardPass fp = model.forward(tape, ex.source, ex.target, opt, rng);
  Var lm = tape.nll(fp.mixed, targets);
  if (cfg.rdrop_enabled && dropout) {
    ForwardPass second = model.forward(tape, ex.source, ex.target, opt, rng);
    Var lm2 = tape.nll(second.mixed, targets);
    const std::pair<double, Var> parts[] = { { 0.5, lm },
                                             { 0.5, lm2 },
                                             { cfg.rdrop_alpha,
                                               tape.symmetric_kl(fp.mixed, second.mixed) } };
    lm = tape.weighted_sum(parts);
  }

  const align::SmoothedAlignment smoothed = align::smooth(sam, cfg.epsilon_smooth);
  Matrix target_attn(steps, np);
  for (int t = 0; t < steps; ++t)
    for (int j = 0; j < np; ++j)
      target_attn(t, j) = smoothed.at(t, j);
  Var sa = tape.bce(fp.attention, target_attn, 1.0 / steps);
  Var ci = tape.bce(fp.p_gen, y, 1.0);

  const std::pair<double, Var> terms[] = { { weights.lm, lm },
                                           { weights.sa, sa },
                                           { weights.ci, ci } };
  ExampleLoss out;
  out.total = tape.weighted_sum(terms);
  out.terms = { tape.scalar(lm), tape.scalar(sa), tape.scalar(ci), tape.scalar(out.total) };
  const Matrix &mixed = tape.value(fp.mixed);
  for (int t = 0; t < steps; ++t) {
    Eigen::Index arg;
    mixed.row(t).maxCoeff(&arg);
    out.correct += arg == targets[t];
  }
  out.tokens = steps;
  out.p_gen_sum = tape.value(fp.p_gen).sum();
  return out;
}

void Adam::step(ParameterSet &params) {
  auto &ts = params.tensors();
  if (m_.empty())
    for (const Tensor &t: ts) {
      m_.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
      v_.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
    }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < ts.size(); ++k) {
    Tensor &t = ts[k];
    if (t.grad.size() == 0)
      continue;
    m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * t.grad;
    v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * t.grad.cwiseAbs2();
    t.value.array() -= cfg_.lr * (m_[k].array() / c1)
                       / ((v_[k].array() / c2).sqrt() + cfg_.adam_eps);
  }
}

TrainResult train(Model &model, const EpochSource &source, const TrainingConfig &cfg,
                  const EpochCallback &on_epoch) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  Adam adam(cfg);
  const LossWeights weights = objective_weights(cfg);
  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<Example> data = source(epoch);
    if (data.empty())
      throw Error(ErrorCode::kEmptyDataset, "no training examples");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const double tau = teacher_forcing_tau(cfg, epoch);

    EpochMetrics m;
    m.epoch = epoch;
    m.tf_tau = tau;
    long tokens = 0, correct = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      model.params().zero_grad();
      for (std::size_t k = b; k < e; ++k) {
        Tape tape;
        ExampleLoss el = example_loss(tape, model, data[order[k]], cfg, weights, tau, true, &rng);
        if (!std::isfinite(el.terms.total))
          throw Error(ErrorCode::kDivergedLoss,
                      "non-finite loss at epoch " + std::to_string(epoch));
        tape.backward(el.total, 1.0 / static_cast<double>(e - b));
        m.lm += el.terms.lm;
        m.sa += el.terms.sa;
        m.ci += el.terms.ci;
        m.total += el.terms.total;
        tokens += el.tokens;
        correct += el.correct;
      }
      adam.step(model.params());
    }
    const double n = static_cast<double>(data.size());
    m.lm /= n;
    m.sa /= n;
    m.ci /= n;
    m.total /= n;
    m.token_acc = tokens ? static_cast<double>(correct) / tokens : 0.0;
    result.log.push_back(m);
    if (on_epoch && !on_epoch(m))
      break;
  }
  return result;
}

TrainResult train(Model &model, const std::vector<Example> &data, const TrainingConfig &cfg,
                  const EpochCallback &on_epoch) {
  if (data.empty())
    throw Error(ErrorCode::kEmptyDataset, "no training examples");
  return train(model, [&data](int) { return data; }, cfg, on_epoch);
}

std::string metrics_csv(const std::vector<EpochMetrics> &log) {
  std::string out = "epoch,lm,sa,ci,total,tf_tau,token_acc\n";
  char buf[256];
  for (const EpochMetrics &m: log) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", m.epoch, m.lm, m.sa,
                  m.ci, m.total, m.tf_tau, m.token_acc);
    out += buf;
  }
  return out;
}

TeacherForcedEval evaluate_teacher_forced(const Model &model, const std::vector<Example> &data,
                                          const TrainingConfig &cfg) {
  TeacherForcedEval out;
  long tokens = 0, correct = 0;
  double p_gen = 0;
  const LossWeights weights = objective_weights(cfg);
  for (const Example &ex: data) {
    Tape tape;
    ExampleLoss el = example_loss(tape, model, ex, cfg, weights, 0.0, false, nullptr);
    out.loss.lm += el.terms.lm;
    out.loss.sa += el.terms.sa;
    out.loss.ci += el.terms.ci;
    out.loss.total += el.terms.total;
    tokens += el.tokens;
    correct += el.correct;
    p_gen += el.p_gen_sum;
  }
  if (!data.empty()) {
    const double n = static_cast<double>(data.size());
    out.loss.lm /= n;
    out.loss.sa /= n;
    out.loss.ci /= n;
    out.loss.total /= n;
  }
  out.token_acc = tokens ? static_cast<double>(correct) / tokens : 0.0;
  out.mean_p_gen = tokens ? p_gen / tokens : 0.0;
  return out;
}

Matrix alignment_attention(const Model &model, const Example &ex) {
  Tape tape;
  ForwardPass fp = model.forward(tape, ex.source, ex.target, {}, nullptr);
  return tape.value(fp.attention);
}

GradCheckReport grad_check(Model &model, const std::vector<Example> &batch,
                           const TrainingConfig &cfg, const GradCheckOptions &options) {
  if (batch.empty())
    throw Error(ErrorCode::kEmptyDataset, "grad_check needs a batch");
  const double n = static_cast<double>(batch.size());
  auto loss_value = [&](const LossWeights &w) {
    double sum = 0;
    for (const Example &ex: batch) {
      Tape tape;
      sum += example_loss(tape, model, ex, cfg, w, 0.0, false, nullptr).terms.total;
    }
    return sum / n;
  };

  std::vector<Tensor *> selected;
  for (Tensor &t: model.params().tensors())
    if (options.tensors.empty()
        || std::find(options.tensors.begin(), options.tensors.end(), t.name)
             != options.tensors.end())
      selected.push_back(&t);

  std::mt19937_64 rng(options.seed);
  std::vector<std::vector<long>> entries;
  for (Tensor *t: selected) {
    std::vector<long> idx(static_cast<std::size_t>(t->value.size()));
    std::iota(idx.begin(), idx.end(), 0L);
    if (options.max_entries > 0 && static_cast<long>(idx.size()) > options.max_entries) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(options.max_entries);
      std::sort(idx.begin(), idx.end());
    }
    entries.push_back(std::move(idx));
  }

  const std::pair<const char *, LossWeights> terms[] = {
    { "lm", { 1, 0, 0 } },
    { "sa", { 0, 1, 0 } },
    { "ci", { 0, 0, 1 } },
    { "total", objective_weights(cfg) },
  };
  GradCheckReport report;
  for (const auto &[name, w]: terms) {
    model.params().zero_grad();
    for (const Example &ex: batch) {
      Tape tape;
      ExampleLoss el = example_loss(tape, model, ex, cfg, w, 0.0, false, nullptr);
      tape.backward(el.total, 1.0 / n);
    }
    GradCheckTerm term;
    term.name = name;
    for (std::size_t s = 0; s < selected.size(); ++s) {
      Tensor &t = *selected[s];
      const Matrix analytic = t.grad;
      for (long i: entries[s]) {
        const double orig = t.value(i);
        t.value(i) = orig + options.step;
        const double up = loss_value(w);
        t.value(i) = orig - options.step;
        const double down = loss_value(w);
        t.value(i) = orig;
        const double numeric = (up - down) / (2 * options.step);
        const double a = analytic(i);
        const double rel = std::abs(a - numeric)
                           / std::max({ std::abs(a), std::abs(numeric), options.floor });
        ++term.checked;
        if (rel > term.max_rel_error) {
          term.max_rel_error = rel;
          term.worst_parameter = t.name + "[" + std::to_string(i) + "]";
        }
        if (rel > options.tolerance) {
          char buf[160];
          std::snprintf(buf, sizeof buf, " analytic %.9g numeric %.9g rel %.3g", a, numeric, rel);
          throw Error(ErrorCode::kGradMismatch,
                      std::string(name) + ": " + t.name + "[" + std::to_string(i) + "]" + buf);
        }
      }
    }
    report.terms.push_back(term);
  }
  model.params().zero_grad();
  return report;
}

}  // namespace csmiles::engine
