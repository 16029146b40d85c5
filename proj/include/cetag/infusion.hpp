////////////////////////////////////////////////////////////////////////////////
// infusion.hpp
//
// Turns mined n-grams into convolution kernels: embed the selected n-grams,
// cluster them per (window, role), plan which filter indices receive which
// centroids, and materialize the conv block. The bank and plan serialize to a
// JSON artifact so mining and training can run as separate invocations.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "cetag/corpus.hpp"
#include "cetag/encoder.hpp"
#include "cetag/layers.hpp"
#include "cetag/ngrams.hpp"

namespace cetag {

// Each n-gram becomes the concatenation of its token rows from encoding the
// n-gram as a standalone sequence; output dimension is n * encoder width.
// All n-grams must share one window size.
std::vector<Eigen::VectorXd> embed_ngrams(const std::vector<Ngram>& ngrams,
                                          const Encoder& encoder);

struct ClusterEntry {
  int window_size = 0;
  Role role = Role::cause;
  std::vector<Eigen::VectorXd> centroids;  // each window_size * e
  std::vector<int> sizes;                  // members per centroid
};

struct ClusterBank {
  int embedding_width = 0;  // e the centroids were built against
  std::vector<ClusterEntry> entries;

  const ClusterEntry* find(int window_size, Role role) const;
};

struct InfusedFilter {
  int filter_index = 0;
  Role role = Role::cause;
  int centroid_index = 0;  // into the (window, role) bank entry
};

struct WindowPlan {
  int window_size = 0;
  int filters = 0;  // F
  std::vector<InfusedFilter> infused;
};

struct FilterInitPlan {
  double rho = 0.0;
  std::uint64_t seed = 0;  // drives the non-infused random weights
  std::vector<WindowPlan> windows;
};

// Assigns round(rho * F) filter indices per window, filling indices 0..m-1.
// Assignments alternate cause, effect, cause, ... so an odd count leans
// cause. Within a role, centroids are taken largest cluster first (ties by
// centroid index). Errors name the pool that cannot supply enough centroids.
FilterInitPlan build_filter_init(const ClusterBank& bank, int filters,
                                 double rho, std::uint64_t seed);

// Builds the conv block for the plan: seeded random weights everywhere, then
// each infused kernel column overwritten by its centroid, rescaled to the
// random columns' expected response level (norm 1/sqrt(rows)). freeze pins
// the infused columns against optimizer updates.
ConvParams materialize_conv(const FilterInitPlan& plan, const ClusterBank& bank,
                            int embedding_width, bool freeze);

// ---------------------------------------------------------------------------
// Mining pipeline: count -> score -> select -> embed -> cluster -> plan.

struct MiningConfig {
  std::vector<int> windows{1, 2, 3};
  double fraction = 0.2;   // share of ranked n-grams kept per role
  double smoothing = 1.0;  // b
  int clusters = 100;      // k per (window, role)
  int filters = 100;       // F per window
  double rho = 0.5;
  std::uint64_t seed = 0;
};

struct SelectionSummary {
  int window_size = 0;
  int distinct_ngrams = 0;
  int cause_selected = 0;
  int effect_selected = 0;
};

struct MiningOutcome {
  ClusterBank bank;
  FilterInitPlan plan;
  std::vector<SelectionSummary> selections;
};

MiningOutcome mine_knowledge(const std::vector<AnnotatedSentence>& corpus,
                             const Encoder& encoder, const MiningConfig& cfg);

// ---------------------------------------------------------------------------
// Serialized artifact.

struct InfusionArtifact {
  int format_version = 1;
  int embedding_width = 0;
  int filters = 0;
  double rho = 0.0;
  std::uint64_t seed = 0;
  ClusterBank bank;
  FilterInitPlan plan;
};

void save_infusion_artifact(const std::string& path,
                            const InfusionArtifact& artifact);
InfusionArtifact load_infusion_artifact(const std::string& path);

}  // namespace cetag
