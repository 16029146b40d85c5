////////////////////////////////////////////////////////////////////////////////
// crf.hpp
//
// Linear-chain CRF over an arbitrary tag count T. The transition matrix A is
// (T+2)x(T+2) with two extra states: start = T, stop = T+1. A[i][j] scores
// the move i -> j. Emissions P are l x T, one row per position. Paths are tag
// index sequences; start/stop are implicit and never appear in a path.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <Eigen/Dense>

#include <vector>

#include "cetag/autodiff.hpp"

namespace cetag {

constexpr int crf_start_state(int num_tags) { return num_tags; }
constexpr int crf_stop_state(int num_tags) { return num_tags + 1; }

// Path score: A[start][y0] + sum_i P[i][yi] + sum_i A[y_{i-1}][y_i]
// + A[y_last][stop].
double crf_score(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P,
                 const std::vector<int>& path);

// log of the summed exponentiated scores of all T^l paths, by the forward
// recursion in log space.
double crf_log_partition(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P);

struct CrfNll {
  double loss;         // log_partition - score(gold), always >= 0
  Eigen::MatrixXd dA;  // d loss / d A, same shape as A
  Eigen::MatrixXd dP;  // d loss / d P
};

// Negative log-likelihood of the gold path with analytic gradients from the
// forward-backward marginals.
CrfNll crf_nll(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P,
               const std::vector<int>& gold);

struct ViterbiPath {
  std::vector<int> path;
  double score;  // equals crf_score(A, P, path)
};

// Highest-scoring path. Among equally scoring paths, returns the one with the
// lowest tag index at the earliest position where they differ.
ViterbiPath viterbi_decode(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P);

// Tape node for the NLL: inputs are the emissions node (l x T) and the
// transitions node ((T+2)x(T+2), typically a bound Parameter). Produces a 1x1
// loss node whose backward pass applies the analytic CRF gradients.
ad::NodeId crf_nll_node(ad::Graph& g, ad::NodeId emissions,
                        ad::NodeId transitions, const std::vector<int>& gold);

}  // namespace cetag
