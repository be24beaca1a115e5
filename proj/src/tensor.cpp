// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssvt/tensor.hpp"

#include <sstream>
#include <utility>

namespace ssvt {

namespace {
thread_local ComputeGraph* t_current_graph = nullptr;
}  // namespace

Index shape_numel(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) {
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) {
      out << "x";
    }
    out << shape[i];
  }
  out << "]";
  return out.str();
}

Tensor Tensor::make(Shape shape, Array data, bool requires_grad) {
  for (Index d : shape) {
    if (d <= 0) {
      throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
    }
  }
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  Array data = Array::Zero(shape_numel(shape));
  return make(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Array data = Array::Constant(shape_numel(shape), value);
  return make(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> values, bool requires_grad) {
  Array data(static_cast<Index>(values.size()));
  for (Index i = 0; i < data.size(); ++i) {
    data[i] = values[static_cast<std::size_t>(i)];
  }
  return make(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::from_array(Shape shape, Array values, bool requires_grad) {
  return make(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return full({1}, value, requires_grad);
}

Tensor Tensor::identity(Index n) {
  Tensor t = zeros({n, n});
  for (Index i = 0; i < n; ++i) {
    t.node_->data[i * n + i] = 1.0;
  }
  return t;
}

const Shape& Tensor::shape() const {
  if (!node_) {
    throw ContractError("operation on an undefined tensor");
  }
  return node_->shape;
}

Index Tensor::rank() const { return static_cast<Index>(shape().size()); }

Index Tensor::dim(Index axis) const {
  const Shape& s = shape();
  if (axis < 0 || axis >= static_cast<Index>(s.size())) {
    throw ContractError("axis " + std::to_string(axis) + " out of range for " +
                        shape_str(s));
  }
  return s[static_cast<std::size_t>(axis)];
}

Index Tensor::size() const {
  if (!node_) {
    throw ContractError("operation on an undefined tensor");
  }
  return node_->data.size();
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool value) {
  if (!node_) {
    throw ContractError("operation on an undefined tensor");
  }
  node_->requires_grad = value;
}

Array& Tensor::array() {
  if (!node_) {
    throw ContractError("operation on an undefined tensor");
  }
  return node_->data;
}

const Array& Tensor::array() const {
  if (!node_) {
    throw ContractError("operation on an undefined tensor");
  }
  return node_->data;
}

double Tensor::value() const {
  if (size() != 1) {
    throw ContractError("value() requires a scalar tensor, got " + shape_str(shape()));
  }
  return node_->data[0];
}

double Tensor::at(std::initializer_list<Index> index) const {
  const Shape& s = shape();
  if (index.size() != s.size()) {
    throw ContractError("index rank does not match tensor rank");
  }
  Index flat = 0;
  std::size_t axis = 0;
  for (Index i : index) {
    if (i < 0 || i >= s[axis]) {
      throw ContractError("index out of bounds");
    }
    flat = flat * s[axis] + i;
    ++axis;
  }
  return node_->data[flat];
}

bool Tensor::has_grad() const { return node_ && node_->grad.size() != 0; }

const Array& Tensor::grad() const {
  if (!has_grad()) {
    throw ContractError("tensor has no gradient buffer");
  }
  return node_->grad;
}

Array Tensor::grad_or_zero() const {
  if (has_grad()) {
    return node_->grad;
  }
  return Array::Zero(size());
}

void Tensor::zero_grad() const {
  if (has_grad()) {
    node_->grad.setZero();
  }
}

Tensor Tensor::clone() const {
  if (!node_) {
    throw ContractError("operation on an undefined tensor");
  }
  return make(node_->shape, node_->data, node_->requires_grad);
}

bool TensorAccess::wants_grad(const Tensor& t) {
  return t.node_ && (t.node_->requires_grad || t.node_->tape_output);
}

void TensorAccess::mark_tape_output(Tensor& t) { t.node_->tape_output = true; }

Array& TensorAccess::grad_buffer(const Tensor& t) {
  if (t.node_->grad.size() == 0) {
    t.node_->grad = Array::Zero(t.node_->data.size());
  }
  return t.node_->grad;
}

bool TensorAccess::grad_present(const Tensor& t) {
  return t.node_ && t.node_->grad.size() != 0;
}

void TensorAccess::drop_grad(const Tensor& t) {
  if (t.node_) {
    t.node_->grad.resize(0);
  }
}

void ComputeGraph::record(std::vector<Tensor> inputs, Tensor output,
                          std::function<void()> backward_fn) {
  TensorAccess::mark_tape_output(output);
  entries_.push_back(Entry{std::move(inputs), std::move(output), std::move(backward_fn)});
}

void ComputeGraph::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward requires a scalar loss");
  }
  // Interior gradients are scratch: drop them so only entries on a path from
  // this loss fire. Leaf gradients persist and accumulate.
  for (Entry& entry : entries_) {
    TensorAccess::drop_grad(entry.output);
  }
  TensorAccess::grad_buffer(loss)[0] = 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (TensorAccess::grad_present(it->output)) {
      it->backward_fn();
    }
  }
}

ComputeGraph* ComputeGraph::current() { return t_current_graph; }

ComputeGraph::Scope::Scope(ComputeGraph& graph) : previous_(t_current_graph) {
  t_current_graph = &graph;
}

ComputeGraph::Scope::~Scope() { t_current_graph = previous_; }

NoGradGuard::NoGradGuard() : previous_(t_current_graph) { t_current_graph = nullptr; }

NoGradGuard::~NoGradGuard() { t_current_graph = previous_; }

}  // namespace ssvt
