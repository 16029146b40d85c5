////////////////////////////////////////////////////////////////////////////////
// test_autodiff.cpp
//
// Every operation is checked against central finite differences. The loss in
// each check is sum(out ⊙ C) for a fixed random C, so upstream gradients are
// non-uniform and transposition bugs cannot cancel out.
////////////////////////////////////////////////////////////////////////////////

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <functional>

#include "cetag/autodiff.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace cetag;
using ad::Graph;
using ad::NodeId;
using ad::Parameter;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int r, int c) {
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

// Checks d(loss)/d(p) for loss = sum(build(g) ⊙ weight) against finite
// differences, where build wires p into a fresh graph.
void check_param_grad(Parameter& p, const Eigen::MatrixXd& weight,
                      const std::function<NodeId(Graph&)>& build,
                      double tol = 1e-5) {
  auto loss_value = [&]() {
    Graph g;
    NodeId out = build(g);
    NodeId loss = g.sum_all(g.hadamard(out, g.constant(weight)));
    return g.value(loss)(0, 0);
  };
  Eigen::MatrixXd fd = oracle::finite_difference(p.value, loss_value, 1e-4);

  p.zero_grad();
  Graph g;
  NodeId out = build(g);
  NodeId loss = g.sum_all(g.hadamard(out, g.constant(weight)));
  g.backward(loss);
  CHECK(oracle::gradient_rel_error(p.grad, fd) <= tol);
}

}  // namespace

TEST_CASE("dense layer gradients match finite differences") {
  Rng rng(301);
  Parameter X("X", random_matrix(rng, 4, 3));
  Parameter W("W", random_matrix(rng, 3, 5));
  Parameter b("b", random_matrix(rng, 1, 5));
  Eigen::MatrixXd C = random_matrix(rng, 4, 5);

  auto build_with = [&](Graph& g) {
    return g.relu(g.add_rowvec(g.matmul(g.param(X), g.param(W)), g.param(b)));
  };
  check_param_grad(X, C, build_with);
  check_param_grad(W, C, build_with);
  check_param_grad(b, C, build_with);
}

TEST_CASE("elementwise op gradients match finite differences") {
  Rng rng(302);
  Parameter A("A", random_matrix(rng, 3, 4));
  Parameter B("B", random_matrix(rng, 3, 4));
  Eigen::MatrixXd C = random_matrix(rng, 3, 4);

  check_param_grad(A, C, [&](Graph& g) { return g.sigmoid(g.param(A)); });
  check_param_grad(A, C, [&](Graph& g) { return g.tanh(g.param(A)); });
  check_param_grad(A, C, [&](Graph& g) { return g.relu(g.param(A)); });
  check_param_grad(A, C, [&](Graph& g) { return g.scale(g.param(A), -2.5); });
  check_param_grad(
      A, C, [&](Graph& g) { return g.hadamard(g.param(A), g.param(B)); });
  check_param_grad(
      B, C, [&](Graph& g) { return g.hadamard(g.param(A), g.param(B)); });
  check_param_grad(A, C,
                   [&](Graph& g) { return g.sub(g.param(A), g.param(B)); });
  check_param_grad(B, C,
                   [&](Graph& g) { return g.sub(g.param(A), g.param(B)); });
}

TEST_CASE("softmax rows sum to one and gradients check out") {
  Rng rng(303);
  Parameter A("A", random_matrix(rng, 5, 4));
  Eigen::MatrixXd C = random_matrix(rng, 5, 4);

  Graph g;
  NodeId sm = g.softmax_rows(g.param(A));
  for (int i = 0; i < 5; ++i)
    CHECK(g.value(sm).row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));

  check_param_grad(A, C, [&](Graph& g2) { return g2.softmax_rows(g2.param(A)); });
}

TEST_CASE("matmul_nt equals matmul against the transpose") {
  Rng rng(304);
  Parameter A("A", random_matrix(rng, 4, 3));
  Parameter B("B", random_matrix(rng, 5, 3));
  Eigen::MatrixXd C = random_matrix(rng, 4, 5);

  Graph g;
  NodeId direct = g.matmul_nt(g.param(A), g.param(B));
  CHECK((g.value(direct) - A.value * B.value.transpose()).norm() <= 1e-12);

  check_param_grad(
      A, C, [&](Graph& g2) { return g2.matmul_nt(g2.param(A), g2.param(B)); });
  check_param_grad(
      B, C, [&](Graph& g2) { return g2.matmul_nt(g2.param(A), g2.param(B)); });
}

TEST_CASE("concat and slice route gradients to the right blocks") {
  Rng rng(305);
  Parameter A("A", random_matrix(rng, 3, 2));
  Parameter B("B", random_matrix(rng, 2, 2));
  Eigen::MatrixXd C = random_matrix(rng, 2, 4);

  // Stack A over B, carve a 2x2 window, then widen it again with a slice of A.
  auto build = [&](Graph& g) {
    NodeId stacked = g.concat_rows({g.param(A), g.param(B)});
    NodeId window = g.slice_rows(stacked, 2, 2);
    NodeId left = g.slice_cols(g.param(A), 0, 2);
    return g.concat_cols({window, g.slice_rows(left, 0, 2)});
  };
  check_param_grad(A, C, build);
  check_param_grad(B, C, build);
}

TEST_CASE("gather_rows accumulates gradient over duplicate indices") {
  Rng rng(306);
  Parameter E("E", random_matrix(rng, 4, 3));
  Eigen::MatrixXd C = random_matrix(rng, 5, 3);
  std::vector<int> idx{2, 0, 2, 3, 2};

  auto build = [&](Graph& g) { return g.gather_rows(g.param(E), idx); };
  check_param_grad(E, C, build);

  // Row 2 is pulled three times, so its gradient is the sum of those rows.
  E.zero_grad();
  Graph g;
  NodeId out = build(g);
  g.backward(g.sum_all(g.hadamard(out, g.constant(C))));
  Eigen::RowVectorXd expected = C.row(0) + C.row(2) + C.row(4);
  CHECK((E.grad.row(2) - expected).norm() <= 1e-12);
  CHECK(E.grad.row(1).norm() == 0.0);
}

TEST_CASE("dropout scales kept entries and masks gradients to match") {
  Rng rng(307);
  Parameter A("A", random_matrix(rng, 6, 6));

  Rng mask_rng(99);
  Graph g;
  NodeId in = g.param(A);
  NodeId out = g.dropout(in, 0.5, mask_rng);
  int zeros = 0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      double o = g.value(out)(i, j);
      if (o == 0.0) {
        ++zeros;
      } else {
        CHECK(o == doctest::Approx(2.0 * A.value(i, j)));
      }
    }
  CHECK(zeros > 0);
  CHECK(zeros < 36);

  g.backward(g.sum_all(out));
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      double expected = g.value(out)(i, j) == 0.0 ? 0.0 : 2.0;
      CHECK(A.grad(i, j) == doctest::Approx(expected));
    }

  // Rate zero passes everything through untouched.
  Graph g2;
  Rng r2(1);
  NodeId same = g2.dropout(g2.param(A), 0.0, r2);
  CHECK((g2.value(same) - A.value).norm() == 0.0);
}

TEST_CASE("custom node carries hand-written gradients") {
  Rng rng(308);
  Parameter A("A", random_matrix(rng, 3, 3));

  // 0.5 * squared Frobenius norm; gradient is the matrix itself.
  auto build = [&](Graph& g) -> NodeId {
    NodeId in = g.param(A);
    Eigen::MatrixXd v(1, 1);
    v(0, 0) = 0.5 * g.value(in).squaredNorm();
    return g.custom(
        {in}, v,
        [](const Eigen::MatrixXd& up,
           const std::vector<const Eigen::MatrixXd*>& vals,
           const std::vector<Eigen::MatrixXd*>& grads) {
          *grads[0] += up(0, 0) * *vals[0];
        });
  };

  auto loss_value = [&]() {
    Graph g;
    return g.value(build(g))(0, 0);
  };
  Eigen::MatrixXd fd = oracle::finite_difference(A.value, loss_value, 1e-4);

  A.zero_grad();
  Graph g;
  g.backward(build(g));
  CHECK(oracle::gradient_rel_error(A.grad, fd) <= 1e-5);
  CHECK(oracle::gradient_rel_error(A.grad, A.value) <= 1e-9);
}

TEST_CASE("parameter gradient accumulates across graphs until cleared") {
  Parameter A("A", Eigen::MatrixXd::Ones(2, 2));

  for (int pass = 0; pass < 2; ++pass) {
    Graph g;
    g.backward(g.sum_all(g.param(A)));
  }
  CHECK((A.grad - 2.0 * Eigen::MatrixXd::Ones(2, 2)).norm() == 0.0);
  A.zero_grad();
  CHECK(A.grad.norm() == 0.0);
}

TEST_CASE("shape violations and misuse are rejected") {
  Graph g;
  NodeId a = g.constant(Eigen::MatrixXd::Zero(2, 3));
  NodeId b = g.constant(Eigen::MatrixXd::Zero(3, 2));
  CHECK_THROWS_AS(g.add(a, b), ModelError);
  CHECK_THROWS_AS(g.matmul(a, a), ModelError);
  CHECK_THROWS_AS(g.add_rowvec(a, b), ModelError);
  CHECK_THROWS_AS(g.slice_rows(a, 1, 5), ModelError);
  CHECK_THROWS_AS(g.slice_cols(a, -1, 2), ModelError);
  CHECK_THROWS_AS(g.gather_rows(a, {0, 2}), ModelError);
  CHECK_THROWS_AS(g.concat_rows({}), ModelError);
  CHECK_THROWS_AS(g.backward(a), ModelError);  // not 1x1

  Graph g2;
  NodeId s = g2.sum_all(g2.constant(Eigen::MatrixXd::Ones(2, 2)));
  CHECK_THROWS_AS(g2.gradient(s), ModelError);  // before backward
  g2.backward(s);
  CHECK(g2.gradient(s)(0, 0) == 1.0);
  CHECK_THROWS_AS(g2.backward(s), ModelError);  // single use
}
