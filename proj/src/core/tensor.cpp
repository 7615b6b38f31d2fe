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

#include "core/tensor.hpp"

#include <atomic>
#include <cstring>
#include <mutex>
#include <sstream>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace mpk {

namespace {

thread_local Tape* g_active_tape = nullptr;
std::atomic<std::uint64_t> g_next_tape_id{1};

struct Fault {
  std::mutex mu;
  std::string op;
  double factor = 1.0;
};

Fault& fault() {
  static Fault f;
  return f;
}

const detail::TensorImpl& checked(const detail::ImplPtr& impl) {
  if (!impl) throw UsageError("use of an undefined tensor");
  return *impl;
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
  }
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("shape " + shape_str(shape) + " holds " + std::to_string(shape_numel(shape)) +
                     " values but " + std::to_string(data.size()) + " were given");
  }
  impl_ = std::make_shared<detail::TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, {value}); }

Tensor Tensor::uniform(Shape shape, double lo, double hi, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v));
}

const Shape& Tensor::shape() const { return checked(impl_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(s));
  }
  return s[axis];
}

std::span<const double> Tensor::data() const { return checked(impl_).data; }

std::span<double> Tensor::mutable_data() {
  checked(impl_);
  if (impl_->tape_id != 0) throw UsageError("cannot mutate a tensor produced on a tape");
  return impl_->data;
}

double Tensor::item() const {
  const auto& d = checked(impl_).data;
  if (d.size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(impl_->shape));
  return d[0];
}

bool Tensor::requires_grad() const { return checked(impl_).requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  checked(impl_);
  impl_->requires_grad = on;
  return *this;
}

bool Tensor::has_grad() const { return !checked(impl_).grad.empty(); }

std::span<const double> Tensor::grad() const {
  const auto& impl = checked(impl_);
  if (impl.grad.empty()) throw UsageError("tensor has no gradient");
  return impl.grad;
}

void Tensor::zero_grad() {
  checked(impl_);
  impl_->grad.clear();
}

Tensor Tensor::detach() const { return Tensor(shape(), std::vector<double>(data().begin(), data().end())); }

bool Tensor::on_tape() const { return checked(impl_).tape_id != 0; }

// ---------------------------------------------------------------------------

Tape::Tape() : id_(g_next_tape_id.fetch_add(1)), previous_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() {
  if (g_active_tape == this) g_active_tape = previous_;
}

Tape* Tape::active() { return g_active_tape; }

void Tape::push(const char* op, const detail::ImplPtr& output, BackwardFn fn) {
  output->tape_id = id_;
  output->node = nodes_.size();
  output->requires_grad = true;
  nodes_.push_back(Node{op, output, std::move(fn)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.impl()->tape_id != id_) {
    throw UsageError("backward: tensor was not produced on this tape");
  }
  if (loss.numel() != 1) throw ShapeError("backward: loss must be a scalar, got " + shape_str(loss.shape()));

  for (auto& n : nodes_) n.output->grad.clear();
  loss.impl()->grad.assign(1, 1.0);

  std::string fault_op;
  double fault_factor = 1.0;
  {
    auto& f = fault();
    std::lock_guard<std::mutex> lock(f.mu);
    fault_op = f.op;
    fault_factor = f.factor;
  }

  for (std::size_t i = loss.impl()->node + 1; i-- > 0;) {
    auto& node = nodes_[i];
    const auto& g = node.output->grad;
    if (g.empty()) continue;
    if (!fault_op.empty() && fault_op == node.op) {
      std::vector<double> scaled(g);
      for (auto& x : scaled) x *= fault_factor;
      node.backward(scaled);
    } else {
      node.backward(g);
    }
  }
}

NoGradGuard::NoGradGuard() : saved_(g_active_tape) { g_active_tape = nullptr; }
NoGradGuard::~NoGradGuard() { g_active_tape = saved_; }

namespace detail {

bool any_requires_grad(std::initializer_list<const Tensor*> inputs) {
  for (const auto* t : inputs) {
    if (t && t->defined() && t->impl()->requires_grad) return true;
  }
  return false;
}

bool will_record(std::initializer_list<const Tensor*> inputs) {
  return g_active_tape != nullptr && any_requires_grad(inputs);
}

void record(Tensor& out, const char* op, std::initializer_list<const Tensor*> inputs,
            Tape::BackwardFn fn) {
  if (!will_record(inputs)) return;
  g_active_tape->push(op, out.impl(), std::move(fn));
}

double* grad_sink(const ImplPtr& t) {
  if (!t || !t->requires_grad) return nullptr;
  if (t->grad.empty()) t->grad.assign(t->data.size(), 0.0);
  return t->grad.data();
}

void set_backward_fault(const std::string& op, double factor) {
  auto& f = fault();
  std::lock_guard<std::mutex> lock(f.mu);
  f.op = op;
  f.factor = factor;
}

}  // namespace detail

}  // namespace mpk
