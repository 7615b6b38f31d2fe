// Copyright (c) 2026 The mpfkansc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "core/tensor.hpp"

// Differentiable operations. None of them broadcast: operands must have
// exactly matching shapes unless the operation says otherwise. Use
// broadcast_to() to expand size-1 axes explicitly.
namespace mpk {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor silu(const Tensor& a);
Tensor log(const Tensor& a);
// Gradient at 0 is defined as 0 so that an exactly-zero residual stays finite.
Tensor sqrt(const Tensor& a);
// Gradient is passed through only strictly inside (lo, hi).
Tensor clamp(const Tensor& a, double lo, double hi);

// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);

// Concatenates along axis 0; all other axes must match.
Tensor concat_channels(const Tensor& a, const Tensor& b);
// Rows [begin, end) of axis 0.
Tensor slice_channels(const Tensor& a, std::size_t begin, std::size_t end);
// Stacks equally shaped tensors along a new leading axis.
Tensor stack(std::span<const Tensor> parts);

Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
// Reduces the listed axes away (no keepdim). Axes must be distinct.
Tensor mean_over(const Tensor& a, std::vector<std::size_t> axes);
// Backward routes to the first maximal element in row-major scan order.
Tensor max_over(const Tensor& a, std::vector<std::size_t> axes);
Tensor softmax(const Tensor& a, std::size_t axis);

Tensor permute_axes(const Tensor& a, const std::vector<std::size_t>& perm);
std::vector<std::size_t> inverse_permutation(const std::vector<std::size_t>& perm);
Tensor reshape(const Tensor& a, Shape shape);
// Repeats size-1 axes of `a` to reach `shape` (same rank required).
Tensor broadcast_to(const Tensor& a, const Shape& shape);
// Scalar view of one element.
Tensor select(const Tensor& a, std::size_t flat_index);

// input [C_in,D,H,W], weight [C_out,C_in,k,k,k], bias [C_out] or undefined.
Tensor conv3d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding);
// input [C,D,H,W]; floor semantics for trailing partial windows.
Tensor maxpool3d(const Tensor& input, std::size_t k = 2, std::size_t stride = 2);

// True when every value is finite.
bool all_finite(std::span<const double> values);

}  // namespace mpk
