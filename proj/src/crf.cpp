////////////////////////////////////////////////////////////////////////////////
// crf.cpp
////////////////////////////////////////////////////////////////////////////////

#include "cetag/crf.hpp"

#include <cmath>
#include <limits>

#include "cetag/util.hpp"

namespace cetag {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_shapes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P) {
  int T = static_cast<int>(P.cols());
  if (P.rows() < 1) throw ModelError("crf: empty emission matrix");
  if (A.rows() != T + 2 || A.cols() != T + 2)
    throw ModelError("crf: transition matrix is " + std::to_string(A.rows()) +
                     "x" + std::to_string(A.cols()) + ", expected " +
                     std::to_string(T + 2) + " square for " +
                     std::to_string(T) + " tags");
  if (!P.allFinite()) throw ModelError("crf: non-finite emission scores");
}

// max-shifted log(sum(exp(v))); tolerates -inf entries.
double log_sum_exp(const Eigen::VectorXd& v) {
  double m = v.maxCoeff();
  if (m == kNegInf) return kNegInf;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

double crf_score(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P,
                 const std::vector<int>& path) {
  check_shapes(A, P);
  int T = static_cast<int>(P.cols());
  int l = static_cast<int>(P.rows());
  if (static_cast<int>(path.size()) != l)
    throw ModelError("crf_score: path length " + std::to_string(path.size()) +
                     " does not match " + std::to_string(l) + " positions");
  for (int y : path)
    if (y < 0 || y >= T)
      throw ModelError("crf_score: tag " + std::to_string(y) +
                       " outside the " + std::to_string(T) + "-tag set");

  double s = A(crf_start_state(T), path[0]) + P(0, path[0]);
  for (int i = 1; i < l; ++i) s += A(path[i - 1], path[i]) + P(i, path[i]);
  s += A(path[l - 1], crf_stop_state(T));
  return s;
}

double crf_log_partition(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P) {
  check_shapes(A, P);
  int T = static_cast<int>(P.cols());
  int l = static_cast<int>(P.rows());
  int start = crf_start_state(T), stop = crf_stop_state(T);

  Eigen::VectorXd alpha =
      A.row(start).head(T).transpose() + P.row(0).transpose();
  Eigen::VectorXd next(T), terms(T);
  for (int i = 1; i < l; ++i) {
    for (int t = 0; t < T; ++t) {
      terms = alpha + A.col(t).head(T);
      next(t) = log_sum_exp(terms) + P(i, t);
    }
    alpha = next;
  }
  terms = alpha + A.col(stop).head(T);
  return log_sum_exp(terms);
}

CrfNll crf_nll(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P,
               const std::vector<int>& gold) {
  check_shapes(A, P);
  int T = static_cast<int>(P.cols());
  int l = static_cast<int>(P.rows());
  int start = crf_start_state(T), stop = crf_stop_state(T);

  // Forward and backward log-sums. alpha(i,t) covers positions 0..i ending in
  // t; beta(i,t) covers the continuation from t at position i to stop.
  Eigen::MatrixXd alpha(l, T), beta(l, T);
  alpha.row(0) = A.row(start).head(T) + P.row(0);
  Eigen::VectorXd terms(T);
  for (int i = 1; i < l; ++i)
    for (int t = 0; t < T; ++t) {
      terms = alpha.row(i - 1).transpose() + A.col(t).head(T);
      alpha(i, t) = log_sum_exp(terms) + P(i, t);
    }
  beta.row(l - 1) = A.col(stop).head(T).transpose();
  for (int i = l - 2; i >= 0; --i)
    for (int t = 0; t < T; ++t) {
      terms = A.row(t).head(T).transpose() + P.row(i + 1).transpose() +
              beta.row(i + 1).transpose();
      beta(i, t) = log_sum_exp(terms);
    }
  terms = alpha.row(l - 1).transpose() + beta.row(l - 1).transpose();
  double log_z = log_sum_exp(terms);

  CrfNll out;
  out.loss = log_z - crf_score(A, P, gold);
  out.dA = Eigen::MatrixXd::Zero(T + 2, T + 2);
  out.dP = Eigen::MatrixXd::Zero(l, T);

  // Position marginals drive dP and the start/stop rows of dA.
  for (int i = 0; i < l; ++i)
    for (int t = 0; t < T; ++t) {
      double g = std::exp(alpha(i, t) + beta(i, t) - log_z);
      out.dP(i, t) = g;
      if (i == 0) out.dA(start, t) = g;
      if (i == l - 1) out.dA(t, stop) = g;
    }
  // Pairwise marginals drive the interior of dA.
  for (int i = 0; i + 1 < l; ++i)
    for (int t = 0; t < T; ++t) {
      if (alpha(i, t) == kNegInf) continue;
      for (int u = 0; u < T; ++u) {
        double e = alpha(i, t) + A(t, u) + P(i + 1, u) + beta(i + 1, u) - log_z;
        if (e == kNegInf) continue;
        out.dA(t, u) += std::exp(e);
      }
    }
  // Subtract the gold path's indicator counts.
  out.dA(start, gold[0]) -= 1.0;
  for (int i = 1; i < l; ++i) out.dA(gold[i - 1], gold[i]) -= 1.0;
  out.dA(gold[l - 1], stop) -= 1.0;
  for (int i = 0; i < l; ++i) out.dP(i, gold[i]) -= 1.0;
  return out;
}

ViterbiPath viterbi_decode(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P) {
  check_shapes(A, P);
  int T = static_cast<int>(P.cols());
  int l = static_cast<int>(P.rows());
  int start = crf_start_state(T), stop = crf_stop_state(T);

  // Suffix values: best(i,t) = P(i,t) + best continuation to stop. Computing
  // suffixes first lets the reconstruction walk forward and take the lowest
  // tag index whenever scores tie, which yields the first optimal path in
  // index order.
  Eigen::MatrixXd best(l, T);
  for (int t = 0; t < T; ++t) best(l - 1, t) = P(l - 1, t) + A(t, stop);
  for (int i = l - 2; i >= 0; --i)
    for (int t = 0; t < T; ++t) {
      double m = kNegInf;
      for (int u = 0; u < T; ++u)
        m = std::max(m, A(t, u) + best(i + 1, u));
      best(i, t) = P(i, t) + m;
    }

  ViterbiPath out;
  out.path.resize(static_cast<std::size_t>(l));
  int prev = -1;
  for (int i = 0; i < l; ++i) {
    int pick = 0;
    double pick_score = kNegInf;
    for (int t = 0; t < T; ++t) {
      double s = (i == 0 ? A(start, t) : A(prev, t)) + best(i, t);
      if (s > pick_score) {
        pick_score = s;
        pick = t;
      }
    }
    out.path[static_cast<std::size_t>(i)] = pick;
    prev = pick;
  }
  // Recompute through crf_score so the reported value matches the path bit
  // for bit.
  out.score = crf_score(A, P, out.path);
  return out;
}

ad::NodeId crf_nll_node(ad::Graph& g, ad::NodeId emissions,
                        ad::NodeId transitions, const std::vector<int>& gold) {
  CrfNll nll = crf_nll(g.value(transitions), g.value(emissions), gold);
  Eigen::MatrixXd loss(1, 1);
  loss(0, 0) = nll.loss;
  return g.custom(
      {emissions, transitions}, std::move(loss),
      [dP = std::move(nll.dP), dA = std::move(nll.dA)](
          const Eigen::MatrixXd& up,
          const std::vector<const Eigen::MatrixXd*>&,
          const std::vector<Eigen::MatrixXd*>& grads) {
        *grads[0] += up(0, 0) * dP;
        *grads[1] += up(0, 0) * dA;
      });
}

}  // namespace cetag
