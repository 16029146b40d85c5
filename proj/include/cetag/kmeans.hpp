////////////////////////////////////////////////////////////////////////////////
// kmeans.hpp
// Lloyd's k-means with seeded farthest-point initialization
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "cetag/util.hpp"

namespace cetag {

struct KMeansResult {
  std::vector<Eigen::VectorXd> centroids;  // each the mean of its members
  std::vector<int> assignment;             // point -> centroid index
  std::vector<int> sizes;
  std::vector<double> inertia_history;     // after each assignment step
  int iterations = 0;
};

// Deterministic: the seed picks the first center, the rest follow by
// farthest-point traversal; assignment ties go to the lowest centroid index.
// Stops when the largest centroid movement drops below tol or at max_iter.
KMeansResult kmeans(const std::vector<Eigen::VectorXd>& points, int k,
                    std::uint64_t seed, int max_iter = 100, double tol = 1e-9);

}  // namespace cetag
