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
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mpk {

class Rng;

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty means "no gradient yet"
  bool requires_grad = false;
  std::uint64_t tape_id = 0;  // 0 for leaves
  std::size_t node = 0;
};

using ImplPtr = std::shared_ptr<TensorImpl>;

}  // namespace detail

// Dense row-major N-d array of doubles. A Tensor is a cheap handle; copies
// share storage. Leaves with requires_grad accumulate gradients across
// backward passes until zero_grad().
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);
  explicit Tensor(detail::ImplPtr impl) : impl_(std::move(impl)) {}

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor uniform(Shape shape, double lo, double hi, Rng& rng);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return data().size(); }

  std::span<const double> data() const;
  // Writable view; only valid on leaves (tensors not produced on a tape).
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat) const { return data()[flat]; }

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);
  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  // Fresh leaf holding a copy of the values.
  Tensor detach() const;
  bool on_tape() const;

  const detail::ImplPtr& impl() const { return impl_; }

 private:
  detail::ImplPtr impl_;
};

// Records differentiable operations executed on the current thread while it
// is alive. Tapes nest: constructing a tape makes it active and the previous
// one is restored on destruction.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Propagates d(loss)/d(x) to every requires_grad tensor recorded before
  // `loss`. Intermediate gradients are reset first; leaf gradients
  // accumulate.
  void backward(const Tensor& loss);

  std::size_t size() const { return nodes_.size(); }
  std::uint64_t id() const { return id_; }
  static Tape* active();

  using BackwardFn = std::function<void(const std::vector<double>& out_grad)>;
  void push(const char* op, const detail::ImplPtr& output, BackwardFn fn);

 private:
  struct Node {
    const char* op;
    detail::ImplPtr output;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  std::uint64_t id_;
  Tape* previous_;
};

// Suspends recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Tape* saved_;
};

namespace detail {

bool any_requires_grad(std::initializer_list<const Tensor*> inputs);
// True when an op over `inputs` will be recorded.
bool will_record(std::initializer_list<const Tensor*> inputs);
// Records `out` as the product of `op` if will_record(inputs).
void record(Tensor& out, const char* op, std::initializer_list<const Tensor*> inputs,
            Tape::BackwardFn fn);
// Zero-initialized gradient buffer of `t`, or nullptr when `t` does not
// participate in differentiation.
double* grad_sink(const ImplPtr& t);

// Test hook: scales the upstream gradient handed to every backward rule of
// `op` by `factor`. Empty op disables the fault.
void set_backward_fault(const std::string& op, double factor);

}  // namespace detail

}  // namespace mpk
