////////////////////////////////////////////////////////////////////////////////
// autodiff.hpp
//
// Reverse-mode automatic differentiation over Eigen matrices. A Graph is a
// tape: operations evaluate eagerly and record how to push gradients back.
// Graphs are built per example and thrown away; Parameters live outside and
// collect gradients across graphs until zero_grad().
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cetag/util.hpp"

namespace cetag::ad {

// Learnable tensor. frozen_cols marks leading columns the optimizer must not
// touch (used to pin infused convolution kernels when the freeze flag is on);
// gradients are still computed for them so they stay inspectable.
struct Parameter {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  bool trainable = true;
  int frozen_cols = 0;

  Parameter() = default;
  Parameter(std::string n, Eigen::MatrixXd v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(Eigen::MatrixXd::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

using NodeId = int;

class Graph {
 public:
  NodeId constant(Eigen::MatrixXd v);
  // Borrows p for the lifetime of the graph; backward() accumulates into
  // p.grad.
  NodeId param(Parameter& p);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  // row is 1xC, broadcast-added to every row of a.
  NodeId add_rowvec(NodeId a, NodeId row);
  NodeId hadamard(NodeId a, NodeId b);
  NodeId scale(NodeId a, double s);
  NodeId matmul(NodeId a, NodeId b);
  // a * b.transpose()
  NodeId matmul_nt(NodeId a, NodeId b);
  NodeId relu(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId tanh(NodeId a);
  NodeId softmax_rows(NodeId a);
  NodeId concat_rows(const std::vector<NodeId>& parts);
  NodeId concat_cols(const std::vector<NodeId>& parts);
  NodeId slice_rows(NodeId a, int start, int count);
  NodeId slice_cols(NodeId a, int start, int count);
  // Output row j copies input row rows[j]; duplicate indices accumulate
  // gradient, which is what embedding lookups need.
  NodeId gather_rows(NodeId a, std::vector<int> rows);
  NodeId sum_all(NodeId a);
  // Inverted dropout: kept entries are scaled by 1/(1-rate). rate 0 is the
  // identity. Only call while building a training graph.
  NodeId dropout(NodeId a, double rate, Rng& rng);

  // Escape hatch for losses with hand-derived gradients. backward_fn receives
  // the upstream gradient, the input values, and the input gradient buffers
  // to accumulate into (entries are null for inputs that need no gradient).
  using CustomBackward =
      std::function<void(const Eigen::MatrixXd& upstream,
                         const std::vector<const Eigen::MatrixXd*>& in_values,
                         const std::vector<Eigen::MatrixXd*>& in_grads)>;
  NodeId custom(const std::vector<NodeId>& inputs, Eigen::MatrixXd value,
                CustomBackward backward_fn);

  const Eigen::MatrixXd& value(NodeId id) const;
  // Valid after backward(); zero for nodes the loss does not reach.
  const Eigen::MatrixXd& gradient(NodeId id) const;

  // root must be 1x1. Single use per graph.
  void backward(NodeId root);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    std::vector<NodeId> inputs;
    std::function<void(Graph&, NodeId)> back;
    Parameter* bound = nullptr;
  };

  NodeId push(Eigen::MatrixXd value, std::vector<NodeId> inputs,
              std::function<void(Graph&, NodeId)> back);
  Node& at(NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& at(NodeId id) const {
    return nodes_[static_cast<std::size_t>(id)];
  }
  void check_same_shape(const char* op, NodeId a, NodeId b) const;

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

}  // namespace cetag::ad
