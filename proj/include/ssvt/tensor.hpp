// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "ssvt/error.hpp"

namespace ssvt {

using Index = Eigen::Index;
using Shape = std::vector<Index>;
using Array = Eigen::ArrayXd;
using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Index shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense 64-bit tensor with flat row-major storage and an optional gradient
// buffer. Copying a Tensor is cheap: copies share the underlying node, so an
// operation's output written into a tape entry stays alive as long as the
// graph does. Use clone() for an independent deep copy.
//
// Data is immutable while a graph recorded from it is alive; the gradient
// buffer is the only field mutated by backward(). Mutating data through
// array() is reserved for initialization and optimizer updates between
// graphs.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> values,
                          bool requires_grad = false);
  static Tensor from_array(Shape shape, Array values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor identity(Index n);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  Index rank() const;
  Index dim(Index axis) const;
  Index size() const;
  bool requires_grad() const;
  void set_requires_grad(bool value);

  Array& array();
  const Array& array() const;
  double value() const;  // scalar tensors only
  double at(std::initializer_list<Index> index) const;

  bool has_grad() const;
  const Array& grad() const;     // throws ContractError when absent
  Array grad_or_zero() const;    // zeros when absent
  void zero_grad() const;        // zeroes the buffer when present

  // Deep copy of data (gradient buffer is not copied).
  Tensor clone() const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  struct Node {
    Shape shape;
    Array data;
    Array grad;  // size 0 means absent
    bool requires_grad = false;
    bool tape_output = false;
  };

  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  static Tensor make(Shape shape, Array data, bool requires_grad);

  std::shared_ptr<Node> node_;

  friend class ComputeGraph;
  friend struct TensorAccess;
};

// Internal hooks for operation implementations (ops.cpp, gradcheck).
struct TensorAccess {
  // True when gradients should flow into this tensor: it either tracks
  // gradients itself or was produced by a recorded operation.
  static bool wants_grad(const Tensor& t);
  static void mark_tape_output(Tensor& t);
  // Lazily allocates a zero gradient buffer and returns it for accumulation.
  static Array& grad_buffer(const Tensor& t);
  static bool grad_present(const Tensor& t);
  static void drop_grad(const Tensor& t);
};

// Reverse-mode tape. Operations append entries in execution order, which is a
// topological order of the data flow; backward() replays them once, in
// reverse. Gradients on leaf tensors accumulate across backward() calls;
// interior gradients are scratch and reset on every call.
//
// Single-threaded per graph. The active graph is a thread-local set by
// ComputeGraph::Scope; with no active graph, operations run eagerly without
// recording.
class ComputeGraph {
 public:
  ComputeGraph() = default;
  ComputeGraph(const ComputeGraph&) = delete;
  ComputeGraph& operator=(const ComputeGraph&) = delete;

  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

  void record(std::vector<Tensor> inputs, Tensor output,
              std::function<void()> backward_fn);

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse, accumulating
  // into every gradient-tracking input reached from the loss. Throws
  // ContractError when the loss is not a scalar.
  void backward(const Tensor& loss);

  static ComputeGraph* current();

  class Scope {
   public:
    explicit Scope(ComputeGraph& graph);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    ComputeGraph* previous_;
  };

 private:
  struct Entry {
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward_fn;
  };

  std::vector<Entry> entries_;
};

// Disables recording for its lifetime (teacher forward passes, evaluation).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  ComputeGraph* previous_;
};

inline bool grad_recording_enabled() { return ComputeGraph::current() != nullptr; }

}  // namespace ssvt
