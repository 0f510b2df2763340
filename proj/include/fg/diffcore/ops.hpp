#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fg/diffcore/tensor.hpp"

namespace fg::diff {

// Axis convention for reductions and softmax: Axis::rows runs down a column
// (result is 1 x cols), Axis::cols runs along a row (result is rows x 1).
enum class Axis { rows = 0, cols = 1 };

// How gate_mask propagates gradient to its scores.
//   constant:         the mask is a constant in backward; scores receive nothing.
//   straight_through: upstream gradient passes to the scores on surviving entries.
enum class GateGradient { constant, straight_through };

// y = x * w (+ bias broadcast over rows).
Tensor linear_map(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& bias = {});
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor transpose(Tape& tape, const Tensor& x);

// Elementwise with broadcasting: each dimension of either operand must equal
// the output dimension or be 1.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor div(Tape& tape, const Tensor& a, const Tensor& b);

Tensor scale(Tape& tape, const Tensor& x, double c);
Tensor add_scalar(Tape& tape, const Tensor& x, double c);

Tensor leaky_relu(Tape& tape, const Tensor& x, double slope = 0.01);
Tensor relu(Tape& tape, const Tensor& x);
Tensor square(Tape& tape, const Tensor& x);
Tensor sqrt(Tape& tape, const Tensor& x);

// Numerically stable softmax; -inf entries map to exactly 0. Throws
// NumericError on NaN input or on a slice that is entirely -inf.
Tensor softmax_axis(Tape& tape, const Tensor& x, Axis axis);

// Replaces entries whose keep flag is 0 with `fill` (typically -inf).
// Gradient flows only through kept entries.
Tensor mask_fill(Tape& tape, const Tensor& x, std::span<const char> keep, double fill);

// Per-column z-score over rows with population std. Columns whose std is
// below 1e-12 come back as zeros. Requires at least two rows.
Tensor crosssec_norm(Tape& tape, const Tensor& x);

// 0/1 mask with mask = 1 where a >= threshold.
Tensor gate_mask(Tape& tape, const Tensor& a, double threshold,
                 GateGradient mode = GateGradient::constant);

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);
Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts);

Tensor sum(Tape& tape, const Tensor& x);
Tensor mean(Tape& tape, const Tensor& x);
Tensor sum_axis(Tape& tape, const Tensor& x, Axis axis);
Tensor mean_axis(Tape& tape, const Tensor& x, Axis axis);

// Euclidean norm over all entries, as a 1 x 1 tensor. Gradient at 0 is 0.
Tensor l2_norm(Tape& tape, const Tensor& x);

}  // namespace fg::diff
