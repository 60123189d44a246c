//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "csmiles/engine/tape.h"

#include <cmath>

#include "csmiles/error.h"

namespace csmiles::engine {
namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

double clip(double p) {
  return std::min(std::max(p, kProbClip), 1.0 - kProbClip);
}

void check_same_shape(const Matrix &a, const Matrix &b, const char *op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::kShapeMismatch, std::string(op) + ": operand shapes differ");
}

}  // namespace

Var Tape::push(Matrix value, bool requires_grad,
               std::function<void(Tape &, const Matrix &)> back) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad)
    n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return { static_cast<int>(nodes_.size()) - 1 };
}

void Tape::accumulate(Var v, const Matrix &g) {
  Node &n = nodes_[v.id];
  if (!n.requires_grad)
    return;
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

Var Tape::constant(Matrix value) {
  return push(std::move(value), false, nullptr);
}

Var Tape::parameter(Tensor &t) {
  Var v = push(t.value, true, nullptr);
  nodes_[v.id].param = &t;
  return v;
}

void Tape::backward(Var loss, double seed) {
  if (nodes_[loss.id].value.size() != 1)
    throw Error(ErrorCode::kShapeMismatch, "backward needs a scalar");
  nodes_[loss.id].grad = Matrix::Constant(1, 1, seed);
  for (int i = loss.id; i >= 0; --i) {
    Node &n = nodes_[i];
    if (n.grad.size() == 0)
      continue;
    if (n.param) {
      if (n.param->grad.size() == 0)
        n.param->zero_grad();
      n.param->grad += n.grad;
    } else if (n.back) {
      Matrix g = std::move(n.grad);
      n.back(*this, g);
      n.grad = std::move(g);
    }
  }
}

Var Tape::matmul(Var a, Var b) {
  return push(value(a) * value(b), needs(a) || needs(b), [a, b](Tape &t, const Matrix &g) {
    if (t.needs(a))
      t.accumulate(a, g * t.value(b).transpose());
    if (t.needs(b))
      t.accumulate(b, t.value(a).transpose() * g);
  });
}

Var Tape::matmul_nt(Var a, Var b) {
  return push(value(a) * value(b).transpose(), needs(a) || needs(b),
              [a, b](Tape &t, const Matrix &g) {
                if (t.needs(a))
                  t.accumulate(a, g * t.value(b));
                if (t.needs(b))
                  t.accumulate(b, g.transpose() * t.value(a));
              });
}

Var Tape::add(Var a, Var b) {
  check_same_shape(value(a), value(b), "add");
  return push(value(a) + value(b), needs(a) || needs(b), [a, b](Tape &t, const Matrix &g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var Tape::add_row(Var a, Var row) {
  if (value(row).rows() != 1 || value(row).cols() != value(a).cols())
    throw Error(ErrorCode::kShapeMismatch, "add_row: bad row shape");
  Matrix out = value(a).rowwise() + value(row).row(0);
  return push(std::move(out), needs(a) || needs(row), [a, row](Tape &t, const Matrix &g) {
    t.accumulate(a, g);
    if (t.needs(row))
      t.accumulate(row, g.colwise().sum());
  });
}

Var Tape::scale(Var a, double s) {
  return push(value(a) * s, needs(a),
              [a, s](Tape &t, const Matrix &g) { t.accumulate(a, g * s); });
}

Var Tape::mask(Var a, const Matrix &m) {
  check_same_shape(value(a), m, "mask");
  return push(value(a).cwiseProduct(m), needs(a),
              [a, m](Tape &t, const Matrix &g) { t.accumulate(a, g.cwiseProduct(m)); });
}

Var Tape::gelu(Var a) {
  const Matrix &x = value(a);
  Matrix y = x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
  });
  return push(std::move(y), needs(a), [a](Tape &t, const Matrix &g) {
    Matrix d = t.value(a).unaryExpr([](double v) {
      const double th = std::tanh(kGeluC * (v + kGeluA * v * v * v));
      return 0.5 * (1.0 + th)
             + 0.5 * v * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
    });
    t.accumulate(a, g.cwiseProduct(d));
  });
}

Var Tape::sigmoid(Var a) {
  Matrix y = value(a).unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  Var out = push(std::move(y), needs(a), nullptr);
  if (needs(a))
    nodes_[out.id].back = [a, out](Tape &t, const Matrix &g) {
      const Matrix &s = t.value(out);
      t.accumulate(a, g.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix())));
    };
  return out;
}

Var Tape::layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Matrix &in = value(x);
  const long n = in.cols();
  Matrix xhat(in.rows(), n);
  Vector inv_std(in.rows());
  for (long r = 0; r < in.rows(); ++r) {
    const double mu = in.row(r).mean();
    const double var = (in.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (in.row(r).array() - mu) * inv_std(r);
  }
  Matrix y = (xhat.array().rowwise() * value(gamma).row(0).array()).matrix();
  y.rowwise() += value(beta).row(0);
  return push(std::move(y), needs(x) || needs(gamma) || needs(beta),
              [x, gamma, beta, xhat, inv_std, n](Tape &t, const Matrix &g) {
                if (t.needs(gamma))
                  t.accumulate(gamma, g.cwiseProduct(xhat).colwise().sum());
                if (t.needs(beta))
                  t.accumulate(beta, g.colwise().sum());
                if (!t.needs(x))
                  return;
                Matrix dxhat = (g.array().rowwise() * t.value(gamma).row(0).array()).matrix();
                Matrix dx(dxhat.rows(), n);
                for (long r = 0; r < dxhat.rows(); ++r) {
                  const double m1 = dxhat.row(r).mean();
                  const double m2 = dxhat.row(r).dot(xhat.row(r)) / n;
                  dx.row(r) = (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2)
                              * inv_std(r);
                }
                t.accumulate(x, dx);
              });
}

Var Tape::softmax_rows(Var a, bool causal) {
  const Matrix &x = value(a);
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (long r = 0; r < x.rows(); ++r) {
    const long n = causal ? std::min<long>(r + 1, x.cols()) : x.cols();
    const double m = x.row(r).head(n).maxCoeff();
    double z = 0;
    for (long c = 0; c < n; ++c) {
      y(r, c) = std::exp(x(r, c) - m);
      z += y(r, c);
    }
    y.row(r).head(n) /= z;
  }
  Var out = push(std::move(y), needs(a), nullptr);
  if (needs(a))
    nodes_[out.id].back = [a, out](Tape &t, const Matrix &g) {
      const Matrix &s = t.value(out);
      Vector dot = g.cwiseProduct(s).rowwise().sum();
      Matrix d = s.cwiseProduct((g.colwise() - dot));
      t.accumulate(a, d);
    };
  return out;
}

Var Tape::columns(Var a, int start, int count) {
  const long rows = value(a).rows(), cols = value(a).cols();
  return push(value(a).middleCols(start, count), needs(a),
              [a, start, count, rows, cols](Tape &t, const Matrix &g) {
                Matrix d = Matrix::Zero(rows, cols);
                d.middleCols(start, count) = g;
                t.accumulate(a, d);
              });
}

Var Tape::hcat(std::span<const Var> parts) {
  long rows = value(parts[0]).rows(), cols = 0;
  bool req = false;
  for (Var p: parts) {
    if (value(p).rows() != rows)
      throw Error(ErrorCode::kShapeMismatch, "hcat: row counts differ");
    cols += value(p).cols();
    req |= needs(p);
  }
  Matrix out(rows, cols);
  long c = 0;
  for (Var p: parts) {
    out.middleCols(c, value(p).cols()) = value(p);
    c += value(p).cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return push(std::move(out), req, [ps](Tape &t, const Matrix &g) {
    long c = 0;
    for (Var p: ps) {
      const long w = t.value(p).cols();
      if (t.needs(p))
        t.accumulate(p, g.middleCols(c, w));
      c += w;
    }
  });
}

Var Tape::gather_rows(Var table, std::span<const int> ids) {
  const Matrix &tab = value(table);
  Matrix out(static_cast<long>(ids.size()), tab.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tab.rows())
      throw Error(ErrorCode::kUnknownId, "id " + std::to_string(ids[i]) + " out of range");
    out.row(static_cast<long>(i)) = tab.row(ids[i]);
  }
  std::vector<int> idv(ids.begin(), ids.end());
  const long rows = tab.rows(), cols = tab.cols();
  return push(std::move(out), needs(table), [table, idv, rows, cols](Tape &t, const Matrix &g) {
    Matrix d = Matrix::Zero(rows, cols);
    for (std::size_t i = 0; i < idv.size(); ++i)
      d.row(idv[i]) += g.row(static_cast<long>(i));
    t.accumulate(table, d);
  });
}

Var Tape::gate_mix(Var g, Var p, Var q) {
  check_same_shape(value(p), value(q), "gate_mix");
  const Matrix &gv = value(g);
  if (gv.cols() != 1 || gv.rows() != value(p).rows())
    throw Error(ErrorCode::kShapeMismatch, "gate_mix: gate must be a column");
  Matrix out = (value(p).array().colwise() * gv.col(0).array()
                + value(q).array().colwise() * (1.0 - gv.col(0).array()))
                 .matrix();
  return push(std::move(out), needs(g) || needs(p) || needs(q),
              [g, p, q](Tape &t, const Matrix &d) {
                const auto gate = t.value(g).col(0).array();
                if (t.needs(g))
                  t.accumulate(g, (d.cwiseProduct(t.value(p) - t.value(q))).rowwise().sum());
                if (t.needs(p))
                  t.accumulate(p, (d.array().colwise() * gate).matrix());
                if (t.needs(q))
                  t.accumulate(q, (d.array().colwise() * (1.0 - gate)).matrix());
              });
}

Var Tape::force_rows(Var g, const std::vector<bool> &forced, const Vector &y) {
  Matrix out = value(g);
  Matrix pass = Matrix::Ones(out.rows(), out.cols());
  for (long r = 0; r < out.rows(); ++r)
    if (forced[r]) {
      out.row(r).setConstant(y(r));
      pass.row(r).setZero();
    }
  return push(std::move(out), needs(g),
              [g, pass](Tape &t, const Matrix &d) { t.accumulate(g, d.cwiseProduct(pass)); });
}

Var Tape::nll(Var probs, std::span<const int> targets) {
  const Matrix &p = value(probs);
  if (static_cast<long>(targets.size()) != p.rows())
    throw Error(ErrorCode::kLengthMismatch, "nll: target count differs from rows");
  const double n = static_cast<double>(targets.size());
  double loss = 0;
  for (long r = 0; r < p.rows(); ++r)
    loss -= std::log(std::max(p(r, targets[r]), kProbClip));
  std::vector<int> tv(targets.begin(), targets.end());
  return push(Matrix::Constant(1, 1, loss / n), needs(probs),
              [probs, tv, n](Tape &t, const Matrix &g) {
                const Matrix &p = t.value(probs);
                Matrix d = Matrix::Zero(p.rows(), p.cols());
                for (long r = 0; r < p.rows(); ++r) {
                  const double v = p(r, tv[r]);
                  if (v > kProbClip)
                    d(r, tv[r]) = -g(0, 0) / (n * v);
                }
                t.accumulate(probs, d);
              });
}

Var Tape::bce(Var p, const Matrix &y, double scale) {
  const Matrix &pv = value(p);
  check_same_shape(pv, y, "bce");
  double loss = 0;
  for (long i = 0; i < pv.size(); ++i) {
    const double c = clip(pv(i));
    loss -= y(i) * std::log(c) + (1.0 - y(i)) * std::log(1.0 - c);
  }
  return push(Matrix::Constant(1, 1, scale * loss), needs(p),
              [p, y, scale](Tape &t, const Matrix &g) {
                const Matrix &pv = t.value(p);
                Matrix d = Matrix::Zero(pv.rows(), pv.cols());
                for (long i = 0; i < pv.size(); ++i) {
                  const double v = pv(i);
                  if (v <= kProbClip || v >= 1.0 - kProbClip)
                    continue;
                  d(i) = -g(0, 0) * scale * (y(i) / v - (1.0 - y(i)) / (1.0 - v));
                }
                t.accumulate(p, d);
              });
}

Var Tape::symmetric_kl(Var p, Var q) {
  check_same_shape(value(p), value(q), "symmetric_kl");
  const Matrix a = value(p).unaryExpr([](double v) { return std::max(v, kProbClip); });
  const Matrix b = value(q).unaryExpr([](double v) { return std::max(v, kProbClip); });
  const Matrix la = a.array().log().matrix(), lb = b.array().log().matrix();
  const double n = static_cast<double>(a.rows());
  const double kl = 0.5 * ((a - b).cwiseProduct(la - lb)).sum() / n;
  return push(Matrix::Constant(1, 1, kl), needs(p) || needs(q),
              [p, q, a, b, la, lb, n](Tape &t, const Matrix &g) {
                // d/da of (a - b)(log a - log b) = (log a - log b) + (a - b) / a
                const double s = 0.5 * g(0, 0) / n;
                auto clipped = [&t](Var v) {
                  return t.value(v).unaryExpr([](double x) { return x > kProbClip ? 1.0 : 0.0; });
                };
                if (t.needs(p)) {
                  Matrix d = (la - lb) + (a - b).cwiseQuotient(a);
                  t.accumulate(p, (s * d).cwiseProduct(clipped(p)));
                }
                if (t.needs(q)) {
                  Matrix d = (lb - la) + (b - a).cwiseQuotient(b);
                  t.accumulate(q, (s * d).cwiseProduct(clipped(q)));
                }
              });
}

Var Tape::weighted_sum(std::span<const std::pair<double, Var>> terms) {
  double total = 0;
  bool req = false;
  for (auto [w, v]: terms) {
    total += w * scalar(v);
    req |= needs(v);
  }
  std::vector<std::pair<double, Var>> tv(terms.begin(), terms.end());
  return push(Matrix::Constant(1, 1, total), req, [tv](Tape &t, const Matrix &g) {
    for (auto [w, v]: tv)
      if (t.needs(v))
        t.accumulate(v, Matrix::Constant(1, 1, w * g(0, 0)));
  });
}

}  // namespace csmiles::engine
