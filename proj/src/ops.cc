/*
 * Copyright 2026 The RankLab Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ranklab/ops.h"

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ranklab/errors.h"
#include "ranklab/numerics.h"

namespace ranklab::ad {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap AsMatrix(const Tensor& t) {
  return ConstMap(t.raw(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap AsMatrix(Tensor& t) {
  return MutMap(t.raw(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

void RequireRank(const Var& v, std::size_t rank, const char* op) {
  if (v.value().rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " +
                         std::to_string(rank) + ", got " +
                         ShapeToString(v.shape()));
  }
}

Tape& TapeOf(const Var& v) {
  if (!v.valid()) throw ArgumentError("operation on an unbound Var");
  return *v.tape();
}

// Applies f elementwise; df(x, y) is the local derivative given input x and
// output y.
template <typename F, typename DF>
Var Unary(const Var& a, F f, DF df) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return TapeOf(a).Record(
      std::move(y), {a}, [a, df](Tape& t, const Tensor& out, const Tensor& g) {
        Tensor& ga = t.GradBuffer(a);
        const Tensor& xv = a.value();
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * df(xv[i], out[i]);
        }
      });
}

enum class BinaryKind { kAdd, kSub, kMul };

Var Binary(const Var& a, const Var& b, BinaryKind kind) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const bool same = x.shape() == y.shape();
  const bool a_scalar = x.is_scalar() && !same;
  const bool b_scalar = y.is_scalar() && !same;
  if (!same && !a_scalar && !b_scalar) {
    throw DimensionError("elementwise shapes " + ShapeToString(x.shape()) +
                         " and " + ShapeToString(y.shape()) +
                         " do not broadcast");
  }
  Tensor out(a_scalar ? y.shape() : x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double u = a_scalar ? x[0] : x[i];
    const double v = b_scalar ? y[0] : y[i];
    switch (kind) {
      case BinaryKind::kAdd: out[i] = u + v; break;
      case BinaryKind::kSub: out[i] = u - v; break;
      case BinaryKind::kMul: out[i] = u * v; break;
    }
  }
  return TapeOf(a).Record(
      std::move(out), {a, b},
      [a, b, kind, a_scalar, b_scalar](Tape& t, const Tensor&, const Tensor& g) {
        const Tensor& xv = a.value();
        const Tensor& yv = b.value();
        if (t.RequiresGrad(a)) {
          Tensor& ga = t.GradBuffer(a);
          for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = b_scalar ? yv[0] : yv[i];
            const double d = kind == BinaryKind::kMul ? v : 1.0;
            ga[a_scalar ? 0 : i] += g[i] * d;
          }
        }
        if (t.RequiresGrad(b)) {
          Tensor& gb = t.GradBuffer(b);
          for (std::size_t i = 0; i < g.size(); ++i) {
            const double u = a_scalar ? xv[0] : xv[i];
            const double d = kind == BinaryKind::kMul   ? u
                             : kind == BinaryKind::kSub ? -1.0
                                                        : 1.0;
            gb[b_scalar ? 0 : i] += g[i] * d;
          }
        }
      });
}

}  // namespace

Var MatMul(const Var& a, const Var& b) {
  RequireRank(a, 2, "matmul");
  RequireRank(b, 2, "matmul");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.cols() != y.rows()) {
    throw DimensionError("matmul inner dimensions differ: " +
                         ShapeToString(x.shape()) + " x " +
                         ShapeToString(y.shape()));
  }
  Tensor out({x.rows(), y.cols()});
  AsMatrix(out).noalias() = AsMatrix(x) * AsMatrix(y);
  return TapeOf(a).Record(std::move(out), {a, b},
                          [a, b](Tape& t, const Tensor&, const Tensor& g) {
                            if (t.RequiresGrad(a)) {
                              AsMatrix(t.GradBuffer(a)).noalias() +=
                                  AsMatrix(g) * AsMatrix(b.value()).transpose();
                            }
                            if (t.RequiresGrad(b)) {
                              AsMatrix(t.GradBuffer(b)).noalias() +=
                                  AsMatrix(a.value()).transpose() * AsMatrix(g);
                            }
                          });
}

Var MatMulNT(const Var& a, const Var& b) {
  RequireRank(a, 2, "matmul_nt");
  RequireRank(b, 2, "matmul_nt");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.cols() != y.cols()) {
    throw DimensionError("matmul_nt inner dimensions differ: " +
                         ShapeToString(x.shape()) + " x " +
                         ShapeToString(y.shape()) + "^T");
  }
  Tensor out({x.rows(), y.rows()});
  AsMatrix(out).noalias() = AsMatrix(x) * AsMatrix(y).transpose();
  return TapeOf(a).Record(std::move(out), {a, b},
                          [a, b](Tape& t, const Tensor&, const Tensor& g) {
                            if (t.RequiresGrad(a)) {
                              AsMatrix(t.GradBuffer(a)).noalias() +=
                                  AsMatrix(g) * AsMatrix(b.value());
                            }
                            if (t.RequiresGrad(b)) {
                              AsMatrix(t.GradBuffer(b)).noalias() +=
                                  AsMatrix(g).transpose() * AsMatrix(a.value());
                            }
                          });
}

Var Add(const Var& a, const Var& b) { return Binary(a, b, BinaryKind::kAdd); }
Var Sub(const Var& a, const Var& b) { return Binary(a, b, BinaryKind::kSub); }
Var Mul(const Var& a, const Var& b) { return Binary(a, b, BinaryKind::kMul); }

Var Scale(const Var& a, double factor) {
  return Unary(
      a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Var AddScalar(const Var& a, double offset) {
  return Unary(
      a, [offset](double x) { return x + offset; },
      [](double, double) { return 1.0; });
}

Var Sigmoid(const Var& a) {
  return Unary(
      a, [](double x) { return ranklab::Sigmoid(x); },
      [](double, double y) { return y * (1.0 - y); });
}

Var Tanh(const Var& a) {
  return Unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var Exp(const Var& a) {
  return Unary(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var Log(const Var& a) {
  for (double v : a.value().data()) {
    if (!(v > 0)) {
      throw DomainError("log of non-positive value " + std::to_string(v));
    }
  }
  return Unary(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var Softplus(const Var& a) {
  return Unary(
      a, [](double x) { return ranklab::Softplus(x); },
      [](double x, double) { return ranklab::Sigmoid(x); });
}

Var Sum(const Var& a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return TapeOf(a).Record(Tensor::Scalar(total), {a},
                          [a](Tape& t, const Tensor&, const Tensor& g) {
                            Tensor& ga = t.GradBuffer(a);
                            for (std::size_t i = 0; i < ga.size(); ++i) {
                              ga[i] += g[0];
                            }
                          });
}

Var Mean(const Var& a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ArgumentError("mean of an empty tensor");
  return Scale(Sum(a), 1.0 / static_cast<double>(n));
}

Var RowSum(const Var& a) {
  RequireRank(a, 2, "row_sum");
  const Tensor& x = a.value();
  Tensor out({x.rows()});
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double total = 0.0;
    for (double v : x.row(r)) total += v;
    out[r] = total;
  }
  return TapeOf(a).Record(std::move(out), {a},
                          [a](Tape& t, const Tensor&, const Tensor& g) {
                            Tensor& ga = t.GradBuffer(a);
                            const std::size_t cols = ga.cols();
                            for (std::size_t r = 0; r < ga.rows(); ++r) {
                              for (std::size_t c = 0; c < cols; ++c) {
                                ga[r * cols + c] += g[r];
                              }
                            }
                          });
}

Var LogSumExp(const Var& x, std::span<const double> weights) {
  RequireRank(x, 1, "log_sum_exp");
  const double lse = ranklab::LogSumExp(x.value().data(), weights);
  std::vector<double> w(weights.begin(), weights.end());
  return TapeOf(x).Record(Tensor::Scalar(lse), {x},
                          [x, w, lse](Tape& t, const Tensor&, const Tensor& g) {
                            Tensor& gx = t.GradBuffer(x);
                            const Tensor& xv = x.value();
                            for (std::size_t i = 0; i < xv.size(); ++i) {
                              const double wi = w.empty() ? 1.0 : w[i];
                              if (wi > 0) {
                                gx[i] += g[0] * wi * std::exp(xv[i] - lse);
                              }
                            }
                          });
}

Var RowLogSumExp(const Var& x, const Tensor* weights) {
  RequireRank(x, 2, "row_log_sum_exp");
  const Tensor& xv = x.value();
  if (weights != nullptr && weights->shape() != xv.shape()) {
    throw DimensionError("row_log_sum_exp weights shape " +
                         ShapeToString(weights->shape()) + " vs " +
                         ShapeToString(xv.shape()));
  }
  Tensor out({xv.rows()});
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    out[r] = ranklab::LogSumExp(
        xv.row(r),
        weights != nullptr ? weights->row(r) : std::span<const double>());
  }
  Tensor w = weights != nullptr ? *weights : Tensor();
  const bool weighted = weights != nullptr;
  return TapeOf(x).Record(
      std::move(out), {x},
      [x, w = std::move(w), weighted](Tape& t, const Tensor& lse,
                                      const Tensor& g) {
        Tensor& gx = t.GradBuffer(x);
        const Tensor& xv = x.value();
        const std::size_t cols = xv.cols();
        for (std::size_t r = 0; r < xv.rows(); ++r) {
          for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            const double wi = weighted ? w[i] : 1.0;
            if (wi > 0) gx[i] += g[r] * wi * std::exp(xv[i] - lse[r]);
          }
        }
      });
}

Var GatherRows(const Var& table, std::span<const std::size_t> ids) {
  RequireRank(table, 2, "gather_rows");
  const Tensor& tv = table.value();
  const std::size_t d = tv.cols();
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= tv.rows()) {
      throw IndexError("gather_rows: id " + std::to_string(ids[i]) +
                       " outside [0, " + std::to_string(tv.rows()) + ")");
    }
    const auto src = tv.row(ids[i]);
    std::copy(src.begin(), src.end(), out.raw() + i * d);
  }
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  return TapeOf(table).Record(std::move(out), {table},
                              [table, idx, d](Tape& t, const Tensor&, const Tensor& g) {
                                Tensor& gt = t.GradBuffer(table);
                                for (std::size_t i = 0; i < idx.size(); ++i) {
                                  double* dst = gt.raw() + idx[i] * d;
                                  const double* src = g.raw() + i * d;
                                  for (std::size_t c = 0; c < d; ++c) {
                                    dst[c] += src[c];
                                  }
                                }
                              });
}

Var SegmentMean(const Var& rows, std::span<const std::size_t> offsets) {
  RequireRank(rows, 2, "segment_mean");
  const Tensor& xv = rows.value();
  if (offsets.size() < 2 || offsets.front() != 0 ||
      offsets.back() != xv.rows()) {
    throw ArgumentError("segment_mean offsets must run from 0 to row count");
  }
  const std::size_t segments = offsets.size() - 1;
  const std::size_t d = xv.cols();
  Tensor out({segments, d});
  for (std::size_t s = 0; s < segments; ++s) {
    if (offsets[s + 1] <= offsets[s]) {
      throw ArgumentError("segment_mean: empty or decreasing segment");
    }
    const double inv = 1.0 / static_cast<double>(offsets[s + 1] - offsets[s]);
    double* dst = out.raw() + s * d;
    for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r) {
      const double* src = xv.raw() + r * d;
      for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
    }
    for (std::size_t c = 0; c < d; ++c) dst[c] *= inv;
  }
  std::vector<std::size_t> off(offsets.begin(), offsets.end());
  return TapeOf(rows).Record(
      std::move(out), {rows}, [rows, off, d](Tape& t, const Tensor&, const Tensor& g) {
        Tensor& gx = t.GradBuffer(rows);
        for (std::size_t s = 0; s + 1 < off.size(); ++s) {
          const double inv = 1.0 / static_cast<double>(off[s + 1] - off[s]);
          const double* src = g.raw() + s * d;
          for (std::size_t r = off[s]; r < off[s + 1]; ++r) {
            double* dst = gx.raw() + r * d;
            for (std::size_t c = 0; c < d; ++c) dst[c] += inv * src[c];
          }
        }
      });
}

Var PickColumns(const Var& x, std::span<const std::size_t> cols) {
  RequireRank(x, 2, "pick_columns");
  const Tensor& xv = x.value();
  if (cols.size() != xv.rows()) {
    throw DimensionError("pick_columns needs one column per row");
  }
  Tensor out({xv.rows()});
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    if (cols[r] >= xv.cols()) {
      throw IndexError("pick_columns: column " + std::to_string(cols[r]) +
                       " outside [0, " + std::to_string(xv.cols()) + ")");
    }
    out[r] = xv.at(r, cols[r]);
  }
  std::vector<std::size_t> c(cols.begin(), cols.end());
  return TapeOf(x).Record(std::move(out), {x}, [x, c](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& gx = t.GradBuffer(x);
    const std::size_t width = gx.cols();
    for (std::size_t r = 0; r < c.size(); ++r) gx[r * width + c[r]] += g[r];
  });
}

Var GroupedDot(const Var& queries, const Var& rows) {
  RequireRank(queries, 2, "grouped_dot");
  RequireRank(rows, 2, "grouped_dot");
  const Tensor& q = queries.value();
  const Tensor& e = rows.value();
  if (q.cols() != e.cols()) {
    throw DimensionError("grouped_dot: embedding widths differ");
  }
  const std::size_t batch = q.rows();
  if (batch == 0 || e.rows() % batch != 0) {
    throw DimensionError("grouped_dot: row count " + std::to_string(e.rows()) +
                         " is not a multiple of batch " +
                         std::to_string(batch));
  }
  const std::size_t group = e.rows() / batch;
  const std::size_t d = q.cols();
  Tensor out({batch, group});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* qb = q.raw() + b * d;
    for (std::size_t j = 0; j < group; ++j) {
      const double* ej = e.raw() + (b * group + j) * d;
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += qb[c] * ej[c];
      out[b * group + j] = dot;
    }
  }
  return TapeOf(queries).Record(
      std::move(out), {queries, rows},
      [queries, rows, group, d](Tape& t, const Tensor&, const Tensor& g) {
        const Tensor& q = queries.value();
        const Tensor& e = rows.value();
        const std::size_t batch = q.rows();
        const bool need_q = t.RequiresGrad(queries);
        const bool need_e = t.RequiresGrad(rows);
        double* gq = need_q ? t.GradBuffer(queries).raw() : nullptr;
        double* ge = need_e ? t.GradBuffer(rows).raw() : nullptr;
        const double* qv = q.raw();
        const double* ev = e.raw();
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t j = 0; j < group; ++j) {
            const double gv = g[b * group + j];
            const std::size_t row = b * group + j;
            if (need_q) {
              for (std::size_t c = 0; c < d; ++c) gq[b * d + c] += gv * ev[row * d + c];
            }
            if (need_e) {
              for (std::size_t c = 0; c < d; ++c) ge[row * d + c] += gv * qv[b * d + c];
            }
          }
        }
      });
}

Var AddBias(const Var& x, const Var& bias) {
  RequireRank(x, 2, "add_bias");
  RequireRank(bias, 1, "add_bias");
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (bv.size() != xv.cols()) {
    throw DimensionError("add_bias: bias length " + std::to_string(bv.size()) +
                         " vs width " + std::to_string(xv.cols()));
  }
  Tensor out = xv;
  const std::size_t d = xv.cols();
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] += bv[c];
  }
  return TapeOf(x).Record(std::move(out), {x, bias},
                          [x, bias, d](Tape& t, const Tensor&, const Tensor& g) {
                            if (t.RequiresGrad(x)) {
                              Tensor& gx = t.GradBuffer(x);
                              for (std::size_t i = 0; i < g.size(); ++i) {
                                gx[i] += g[i];
                              }
                            }
                            if (t.RequiresGrad(bias)) {
                              Tensor& gb = t.GradBuffer(bias);
                              for (std::size_t i = 0; i < g.size(); ++i) {
                                gb[i % d] += g[i];
                              }
                            }
                          });
}

Var GatheredDot(const Var& queries, const Var& table,
                std::span<const std::size_t> ids) {
  RequireRank(queries, 2, "gathered_dot");
  RequireRank(table, 2, "gathered_dot");
  const Tensor& q = queries.value();
  const Tensor& e = table.value();
  if (q.cols() != e.cols()) {
    throw DimensionError("gathered_dot: embedding widths differ");
  }
  const std::size_t batch = q.rows();
  if (batch == 0 || ids.size() % batch != 0) {
    throw DimensionError("gathered_dot: id count " + std::to_string(ids.size()) +
                         " is not a multiple of batch " + std::to_string(batch));
  }
  const std::size_t group = ids.size() / batch;
  const std::size_t d = q.cols();
  for (std::size_t id : ids) {
    if (id >= e.rows()) {
      throw IndexError("gathered_dot: id " + std::to_string(id) +
                       " outside [0, " + std::to_string(e.rows()) + ")");
    }
  }
  Tensor out({batch, group});
  double* o = out.raw();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* qb = q.raw() + b * d;
    for (std::size_t j = 0; j < group; ++j) {
      const double* ej = e.raw() + ids[b * group + j] * d;
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += qb[c] * ej[c];
      o[b * group + j] = dot;
    }
  }
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  return TapeOf(queries).Record(
      std::move(out), {queries, table},
      [queries, table, idx = std::move(idx), group, d](
          Tape& t, const Tensor&, const Tensor& g) {
        const double* q = queries.value().raw();
        const double* e = table.value().raw();
        const std::size_t batch = queries.value().rows();
        const double* gv = g.raw();
        if (t.RequiresGrad(queries)) {
          double* gq = t.GradBuffer(queries).raw();
          for (std::size_t b = 0; b < batch; ++b) {
            double* dst = gq + b * d;
            for (std::size_t j = 0; j < group; ++j) {
              const double w = gv[b * group + j];
              const double* ej = e + idx[b * group + j] * d;
              for (std::size_t c = 0; c < d; ++c) dst[c] += w * ej[c];
            }
          }
        }
        if (t.RequiresGrad(table)) {
          double* ge = t.GradBuffer(table).raw();
          for (std::size_t b = 0; b < batch; ++b) {
            const double* qb = q + b * d;
            for (std::size_t j = 0; j < group; ++j) {
              const double w = gv[b * group + j];
              double* dst = ge + idx[b * group + j] * d;
              for (std::size_t c = 0; c < d; ++c) dst[c] += w * qb[c];
            }
          }
        }
      });
}

Var StackRows(std::span<const Var> blocks) {
  if (blocks.empty()) throw ArgumentError("stack_rows needs at least one block");
  std::size_t rows = 0;
  const std::size_t d = blocks.front().value().rank() == 2
                            ? blocks.front().value().cols()
                            : 0;
  for (const Var& b : blocks) {
    RequireRank(b, 2, "stack_rows");
    if (b.value().cols() != d) {
      throw DimensionError("stack_rows: column counts differ");
    }
    rows += b.value().rows();
  }
  Tensor out({rows, d});
  std::size_t at = 0;
  for (const Var& b : blocks) {
    const auto src = b.value().data();
    std::copy(src.begin(), src.end(), out.raw() + at);
    at += src.size();
  }
  std::vector<Var> inputs(blocks.begin(), blocks.end());
  Tape& tape = TapeOf(blocks.front());
  return tape.Record(std::move(out), inputs,
                     [inputs](Tape& t, const Tensor&, const Tensor& g) {
                       std::size_t offset = 0;
                       for (const Var& b : inputs) {
                         const std::size_t n = b.value().size();
                         if (t.RequiresGrad(b)) {
                           double* dst = t.GradBuffer(b).raw();
                           for (std::size_t i = 0; i < n; ++i) {
                             dst[i] += g.raw()[offset + i];
                           }
                         }
                         offset += n;
                       }
                     });
}

}  // namespace ranklab::ad
