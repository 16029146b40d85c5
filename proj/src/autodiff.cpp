////////////////////////////////////////////////////////////////////////////////
// autodiff.cpp
////////////////////////////////////////////////////////////////////////////////

#include "cetag/autodiff.hpp"

#include <cmath>
#include <utility>

namespace cetag::ad {

namespace {

std::string shape_of(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

NodeId Graph::push(Eigen::MatrixXd value, std::vector<NodeId> inputs,
                   std::function<void(Graph&, NodeId)> back) {
  Node node;
  node.value = std::move(value);
  node.inputs = std::move(inputs);
  node.back = std::move(back);
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

void Graph::check_same_shape(const char* op, NodeId a, NodeId b) const {
  const auto& va = at(a).value;
  const auto& vb = at(b).value;
  if (va.rows() != vb.rows() || va.cols() != vb.cols())
    throw ModelError(std::string(op) + ": shape mismatch " + shape_of(va) +
                     " vs " + shape_of(vb));
}

NodeId Graph::constant(Eigen::MatrixXd v) {
  return push(std::move(v), {}, nullptr);
}

NodeId Graph::param(Parameter& p) {
  NodeId id = push(p.value, {}, [](Graph& g, NodeId self) {
    Node& n = g.at(self);
    n.bound->grad += n.grad;
  });
  at(id).bound = &p;
  return id;
}

NodeId Graph::add(NodeId a, NodeId b) {
  check_same_shape("add", a, b);
  return push(at(a).value + at(b).value, {a, b}, [](Graph& g, NodeId self) {
    const Node& n = g.at(self);
    g.at(n.inputs[0]).grad += n.grad;
    g.at(n.inputs[1]).grad += n.grad;
  });
}

NodeId Graph::sub(NodeId a, NodeId b) {
  check_same_shape("sub", a, b);
  return push(at(a).value - at(b).value, {a, b}, [](Graph& g, NodeId self) {
    const Node& n = g.at(self);
    g.at(n.inputs[0]).grad += n.grad;
    g.at(n.inputs[1]).grad -= n.grad;
  });
}

NodeId Graph::add_rowvec(NodeId a, NodeId row) {
  const auto& va = at(a).value;
  const auto& vr = at(row).value;
  if (vr.rows() != 1 || vr.cols() != va.cols())
    throw ModelError("add_rowvec: bias " + shape_of(vr) + " does not fit " +
                     shape_of(va));
  Eigen::MatrixXd out = va.rowwise() + vr.row(0);
  return push(std::move(out), {a, row}, [](Graph& g, NodeId self) {
    const Node& n = g.at(self);
    g.at(n.inputs[0]).grad += n.grad;
    g.at(n.inputs[1]).grad += n.grad.colwise().sum();
  });
}

NodeId Graph::hadamard(NodeId a, NodeId b) {
  check_same_shape("hadamard", a, b);
  return push(at(a).value.cwiseProduct(at(b).value), {a, b},
              [](Graph& g, NodeId self) {
                const Node& n = g.at(self);
                g.at(n.inputs[0]).grad +=
                    n.grad.cwiseProduct(g.at(n.inputs[1]).value);
                g.at(n.inputs[1]).grad +=
                    n.grad.cwiseProduct(g.at(n.inputs[0]).value);
              });
}

NodeId Graph::scale(NodeId a, double s) {
  return push(at(a).value * s, {a}, [s](Graph& g, NodeId self) {
    const Node& n = g.at(self);
    g.at(n.inputs[0]).grad += n.grad * s;
  });
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const auto& va = at(a).value;
  const auto& vb = at(b).value;
  if (va.cols() != vb.rows())
    throw ModelError("matmul: inner dimensions disagree, " + shape_of(va) +
                     " * " + shape_of(vb));
  return push(va * vb, {a, b}, [](Graph& g, NodeId self) {
    const Node& n = g.at(self);
    g.at(n.inputs[0]).grad += n.grad * g.at(n.inputs[1]).value.transpose();
    g.at(n.inputs[1]).grad += g.at(n.inputs[0]).value.transpose() * n.grad;
  });
}

NodeId Graph::matmul_nt(NodeId a, NodeId b) {
  const auto& va = at(a).value;
  const auto& vb = at(b).value;
  if (va.cols() != vb.cols())
    throw ModelError("matmul_nt: inner dimensions disagree, " + shape_of(va) +
                     " * " + shape_of(vb) + "^T");
  return push(va * vb.transpose(), {a, b}, [](Graph& g, NodeId self) {
    const Node& n = g.at(self);
    g.at(n.inputs[0]).grad += n.grad * g.at(n.inputs[1]).value;
    g.at(n.inputs[1]).grad += n.grad.transpose() * g.at(n.inputs[0]).value;
  });
}

NodeId Graph::relu(NodeId a) {
  return push(at(a).value.cwiseMax(0.0), {a}, [](Graph& g, NodeId self) {
    const Node& n = g.at(self);
    g.at(n.inputs[0]).grad.array() +=
        n.grad.array() * (n.value.array() > 0.0).cast<double>();
  });
}

NodeId Graph::sigmoid(NodeId a) {
  Eigen::MatrixXd out =
      at(a).value.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return push(std::move(out), {a}, [](Graph& g, NodeId self) {
    const Node& n = g.at(self);
    g.at(n.inputs[0]).grad.array() +=
        n.grad.array() * n.value.array() * (1.0 - n.value.array());
  });
}

NodeId Graph::tanh(NodeId a) {
  Eigen::MatrixXd out = at(a).value.array().tanh();
  return push(std::move(out), {a}, [](Graph& g, NodeId self) {
    const Node& n = g.at(self);
    g.at(n.inputs[0]).grad.array() +=
        n.grad.array() * (1.0 - n.value.array().square());
  });
}

NodeId Graph::softmax_rows(NodeId a) {
  Eigen::MatrixXd out = at(a).value;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    double m = out.row(i).maxCoeff();
    out.row(i) = (out.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return push(std::move(out), {a}, [](Graph& g, NodeId self) {
    const Node& n = g.at(self);
    Eigen::MatrixXd& in_grad = g.at(n.inputs[0]).grad;
    for (Eigen::Index i = 0; i < n.value.rows(); ++i) {
      double dot = (n.grad.row(i).array() * n.value.row(i).array()).sum();
      in_grad.row(i).array() +=
          n.value.row(i).array() * (n.grad.row(i).array() - dot);
    }
  });
}

NodeId Graph::concat_rows(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw ModelError("concat_rows: no parts");
  Eigen::Index cols = at(parts[0]).value.cols();
  Eigen::Index rows = 0;
  for (NodeId p : parts) {
    if (at(p).value.cols() != cols)
      throw ModelError("concat_rows: column widths differ");
    rows += at(p).value.rows();
  }
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index r = 0;
  for (NodeId p : parts) {
    out.middleRows(r, at(p).value.rows()) = at(p).value;
    r += at(p).value.rows();
  }
  return push(std::move(out), parts, [](Graph& g, NodeId self) {
    const Node& n = g.at(self);
    Eigen::Index r = 0;
    for (NodeId p : n.inputs) {
      Eigen::Index pr = g.at(p).value.rows();
      g.at(p).grad += n.grad.middleRows(r, pr);
      r += pr;
    }
  });
}

NodeId Graph::concat_cols(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw ModelError("concat_cols: no parts");
  Eigen::Index rows = at(parts[0]).value.rows();
  Eigen::Index cols = 0;
  for (NodeId p : parts) {
    if (at(p).value.rows() != rows)
      throw ModelError("concat_cols: row counts differ");
    cols += at(p).value.cols();
  }
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index c = 0;
  for (NodeId p : parts) {
    out.middleCols(c, at(p).value.cols()) = at(p).value;
    c += at(p).value.cols();
  }
  return push(std::move(out), parts, [](Graph& g, NodeId self) {
    const Node& n = g.at(self);
    Eigen::Index c = 0;
    for (NodeId p : n.inputs) {
      Eigen::Index pc = g.at(p).value.cols();
      g.at(p).grad += n.grad.middleCols(c, pc);
      c += pc;
    }
  });
}

NodeId Graph::slice_rows(NodeId a, int start, int count) {
  const auto& va = at(a).value;
  if (start < 0 || count < 0 || start + count > va.rows())
    throw ModelError("slice_rows: [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " +
                     shape_of(va));
  return push(va.middleRows(start, count), {a},
              [start, count](Graph& g, NodeId self) {
                const Node& n = g.at(self);
                g.at(n.inputs[0]).grad.middleRows(start, count) += n.grad;
              });
}

NodeId Graph::slice_cols(NodeId a, int start, int count) {
  const auto& va = at(a).value;
  if (start < 0 || count < 0 || start + count > va.cols())
    throw ModelError("slice_cols: [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " +
                     shape_of(va));
  return push(va.middleCols(start, count), {a},
              [start, count](Graph& g, NodeId self) {
                const Node& n = g.at(self);
                g.at(n.inputs[0]).grad.middleCols(start, count) += n.grad;
              });
}

NodeId Graph::gather_rows(NodeId a, std::vector<int> rows) {
  const auto& va = at(a).value;
  for (int r : rows)
    if (r < 0 || r >= va.rows())
      throw ModelError("gather_rows: row " + std::to_string(r) + " outside " +
                       shape_of(va));
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), va.cols());
  for (std::size_t j = 0; j < rows.size(); ++j) out.row(static_cast<Eigen::Index>(j)) = va.row(rows[j]);
  return push(std::move(out), {a},
              [rows = std::move(rows)](Graph& g, NodeId self) {
                const Node& n = g.at(self);
                Eigen::MatrixXd& in_grad = g.at(n.inputs[0]).grad;
                for (std::size_t j = 0; j < rows.size(); ++j)
                  in_grad.row(rows[j]) +=
                      n.grad.row(static_cast<Eigen::Index>(j));
              });
}

NodeId Graph::sum_all(NodeId a) {
  Eigen::MatrixXd out(1, 1);
  out(0, 0) = at(a).value.sum();
  return push(std::move(out), {a}, [](Graph& g, NodeId self) {
    const Node& n = g.at(self);
    g.at(n.inputs[0]).grad.array() += n.grad(0, 0);
  });
}

NodeId Graph::dropout(NodeId a, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw ModelError("dropout: rate " + std::to_string(rate) +
                     " outside [0, 1)");
  if (rate == 0.0) return scale(a, 1.0);
  const auto& va = at(a).value;
  Eigen::MatrixXd mask(va.rows(), va.cols());
  double keep = 1.0 - rate;
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      mask(i, j) = rng.uniform() < rate ? 0.0 : 1.0 / keep;
  Eigen::MatrixXd out = va.cwiseProduct(mask);
  return push(std::move(out), {a},
              [mask = std::move(mask)](Graph& g, NodeId self) {
                const Node& n = g.at(self);
                g.at(n.inputs[0]).grad += n.grad.cwiseProduct(mask);
              });
}

NodeId Graph::custom(const std::vector<NodeId>& inputs, Eigen::MatrixXd value,
                     CustomBackward backward_fn) {
  return push(std::move(value), inputs,
              [fn = std::move(backward_fn)](Graph& g, NodeId self) {
                const Node& n = g.at(self);
                std::vector<const Eigen::MatrixXd*> in_values;
                std::vector<Eigen::MatrixXd*> in_grads;
                for (NodeId id : n.inputs) {
                  in_values.push_back(&g.at(id).value);
                  in_grads.push_back(&g.at(id).grad);
                }
                fn(n.grad, in_values, in_grads);
              });
}

const Eigen::MatrixXd& Graph::value(NodeId id) const { return at(id).value; }

const Eigen::MatrixXd& Graph::gradient(NodeId id) const {
  if (!ran_backward_) throw ModelError("gradient: backward has not run");
  return at(id).grad;
}

void Graph::backward(NodeId root) {
  if (ran_backward_) throw ModelError("backward: graph already consumed");
  ran_backward_ = true;
  const auto& rv = at(root).value;
  if (rv.rows() != 1 || rv.cols() != 1)
    throw ModelError("backward: root is " + shape_of(rv) + ", needs 1x1");
  for (Node& n : nodes_) n.grad = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
  at(root).grad(0, 0) = 1.0;
  for (NodeId id = root; id >= 0; --id) {
    Node& n = at(id);
    if (n.back) n.back(*this, id);
  }
}

}  // namespace cetag::ad
