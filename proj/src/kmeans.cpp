////////////////////////////////////////////////////////////////////////////////
// kmeans.cpp
////////////////////////////////////////////////////////////////////////////////

#include "cetag/kmeans.hpp"

#include <algorithm>
#include <limits>

#include "cetag/util.hpp"

namespace cetag {

namespace {

double sq_dist(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).squaredNorm();
}

}  // namespace

KMeansResult kmeans(const std::vector<Eigen::VectorXd>& points, int k,
                    std::uint64_t seed, int max_iter, double tol) {
  if (k < 1) throw KnowledgeError("kmeans: k must be >= 1");
  if (points.size() < static_cast<std::size_t>(k))
    throw KnowledgeError("kmeans: " + std::to_string(points.size()) +
                         " points cannot fill " + std::to_string(k) + " clusters");

  std::size_t n = points.size();
  KMeansResult res;
  res.assignment.assign(n, 0);

  // Farthest-point init: seeded first pick, then greedy max-min distance.
  Rng rng(seed);
  std::vector<std::size_t> chosen{rng.bounded(n)};
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (chosen.size() < static_cast<std::size_t>(k)) {
    for (std::size_t i = 0; i < n; ++i)
      nearest[i] = std::min(nearest[i], sq_dist(points[i], points[chosen.back()]));
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n; ++i)
      if (nearest[i] > far_d) {
        far_d = nearest[i];
        far = i;
      }
    chosen.push_back(far);
  }
  for (std::size_t c = 0; c < chosen.size(); ++c)
    res.centroids.push_back(points[chosen[c]]);

  auto assign_all = [&]() {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double d = sq_dist(points[i], res.centroids[static_cast<std::size_t>(c)]);
        if (d < best_d) {  // strict: ties stay with the lowest index
          best_d = d;
          best = c;
        }
      }
      res.assignment[i] = best;
      inertia += best_d;
    }
    res.inertia_history.push_back(inertia);
  };

  auto recompute_means = [&]() {
    Eigen::Index dim = points[0].size();
    std::vector<Eigen::VectorXd> sums(static_cast<std::size_t>(k),
                                      Eigen::VectorXd::Zero(dim));
    res.sizes.assign(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[static_cast<std::size_t>(res.assignment[i])] += points[i];
      ++res.sizes[static_cast<std::size_t>(res.assignment[i])];
    }
    // An emptied cluster takes the point farthest from its own centroid.
    for (int c = 0; c < k; ++c) {
      if (res.sizes[static_cast<std::size_t>(c)] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (res.sizes[static_cast<std::size_t>(res.assignment[i])] <= 1) continue;
        double d = sq_dist(points[i],
                           res.centroids[static_cast<std::size_t>(res.assignment[i])]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      int old = res.assignment[far];
      sums[static_cast<std::size_t>(old)] -= points[far];
      --res.sizes[static_cast<std::size_t>(old)];
      res.assignment[far] = c;
      sums[static_cast<std::size_t>(c)] = points[far];
      res.sizes[static_cast<std::size_t>(c)] = 1;
    }
    double movement = 0.0;
    for (int c = 0; c < k; ++c) {
      Eigen::VectorXd mean =
          sums[static_cast<std::size_t>(c)] /
          static_cast<double>(res.sizes[static_cast<std::size_t>(c)]);
      movement = std::max(
          movement, (mean - res.centroids[static_cast<std::size_t>(c)]).norm());
      res.centroids[static_cast<std::size_t>(c)] = mean;
    }
    return movement;
  };

  for (int it = 0; it < max_iter; ++it) {
    assign_all();
    double movement = recompute_means();
    res.iterations = it + 1;
    if (movement < tol) break;
  }
  // Final assignment so centroids are exactly the means of their members.
  assign_all();
  recompute_means();
  return res;
}

}  // namespace cetag
