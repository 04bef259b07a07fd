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

#ifndef RANKLAB_OPS_H_
#define RANKLAB_OPS_H_

#include <cstddef>
#include <span>

#include "ranklab/tape.h"
#include "ranklab/tensor.h"

// Differentiable operations on tape Vars. Every op records a backward rule on
// the tape of its inputs. Binary elementwise ops accept either equal shapes
// or a rank-0 scalar on one side; nothing else broadcasts.
namespace ranklab::ad {

// [m x k] * [k x n] -> [m x n].
Var MatMul(const Var& a, const Var& b);
// [m x k] * [n x k]^T -> [m x n]. Scores a batch of queries against a table.
Var MatMulNT(const Var& a, const Var& b);

Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);  // Hadamard product.
Var Scale(const Var& a, double factor);
Var AddScalar(const Var& a, double offset);

Var Sigmoid(const Var& a);
Var Tanh(const Var& a);
Var Exp(const Var& a);
// Throws DomainError if any input is <= 0.
Var Log(const Var& a);
Var Softplus(const Var& a);

// Full reductions to a scalar.
Var Sum(const Var& a);
Var Mean(const Var& a);
// [B x M] -> [B].
Var RowSum(const Var& a);

// log sum_i w_i exp(x_i) for a vector x; `weights` are constants and an empty
// span means unit weights.
Var LogSumExp(const Var& x, std::span<const double> weights = {});
// Row-wise LogSumExp of a [B x M] matrix -> [B]. `weights`, when given, is a
// constant [B x M] tensor.
Var RowLogSumExp(const Var& x, const Tensor* weights = nullptr);

// Rows `ids` of a [N x d] table -> [|ids| x d]. Backward scatter-adds, so
// duplicate ids receive summed gradients. Throws IndexError on bad ids.
Var GatherRows(const Var& table, std::span<const std::size_t> ids);
// Mean of consecutive row blocks: segment s covers rows
// [offsets[s], offsets[s+1]). Empty segments throw ArgumentError.
Var SegmentMean(const Var& rows, std::span<const std::size_t> offsets);
// out[b] = x[b, cols[b]] for a [B x M] matrix.
Var PickColumns(const Var& x, std::span<const std::size_t> cols);
// queries [B x d], rows [B*M x d] -> [B x M] with
// out[b, j] = <queries[b], rows[b*M + j]>.
Var GroupedDot(const Var& queries, const Var& rows);
// out[b, j] = <queries[b], table[ids[b*M + j]]> without materializing the
// gathered rows.
Var GatheredDot(const Var& queries, const Var& table,
                std::span<const std::size_t> ids);
// x [B x d] plus a bias vector [d] added to every row.
Var AddBias(const Var& x, const Var& bias);
// Vertical concatenation of rank-2 blocks with equal column counts.
Var StackRows(std::span<const Var> blocks);

}  // namespace ranklab::ad

#endif  // RANKLAB_OPS_H_
