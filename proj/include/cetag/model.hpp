////////////////////////////////////////////////////////////////////////////////
// model.hpp
//
// The assembled tagger. One class owns the encoder, the conv block, the
// projection into model width, optional multi-head attention, the BiLSTM,
// the emission projection, and the CRF transition matrix, and builds a tape
// graph per sentence. Checkpoints reproduce inference bit for bit.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

#include "cetag/corpus.hpp"
#include "cetag/crf.hpp"
#include "cetag/encoder.hpp"
#include "cetag/infusion.hpp"
#include "cetag/layers.hpp"
#include "cetag/util.hpp"

namespace cetag {

struct ModelConfig {
  int embedding_width = 64;  // e
  int model_width = 128;     // d, attention operates here
  std::vector<int> windows{1, 2, 3};
  int filters = 100;  // per window
  double rho = 0.5;   // infused fraction of each window's filters
  int heads = 4;
  int hidden = 128;  // per direction
  double dropout = 0.5;
  int max_length = 100;
  std::uint64_t seed = 0;
};

// Throws ModelError listing every violated bound. Windows must be strictly
// increasing so conv column blocks line up with knowledge artifacts.
void validate_config(const ModelConfig& cfg);

// Stable fingerprint of a filter plan. Checkpoints carry it so a model can be
// matched against the knowledge artifact that shaped its kernels.
std::string plan_reference_hash(const FilterInitPlan& plan);

struct Extraction {
  std::vector<Span> cause_spans;
  std::vector<Span> effect_spans;
  TagSequence tags;
};

class Tagger {
 public:
  // Fresh model with a learned embedding table over `vocabulary`.
  Tagger(const ModelConfig& cfg, bool use_attention,
         const std::vector<std::string>& vocabulary);
  // Fresh model reading frozen token vectors; their width must equal the
  // configured embedding width.
  Tagger(const ModelConfig& cfg, bool use_attention, TokenVectors vectors);

  Tagger(Tagger&&) = default;
  Tagger& operator=(Tagger&&) = default;

  // Replaces the conv kernels with plan-shaped ones. The artifact must agree
  // with the config on windows, filter count, and embedding width. Call
  // before handing parameter pointers to an optimizer.
  void infuse(const InfusionArtifact& artifact, bool freeze);

  const ModelConfig& config() const { return cfg_; }
  bool use_attention() const { return use_attention_; }
  const std::string& plan_hash() const { return plan_hash_; }
  Encoder& encoder() { return *encoder_; }
  ConvParams& conv() { return conv_; }
  ad::Parameter& transitions() { return transitions_; }

  // Every parameter tensor, in an order stable across runs and reloads.
  std::vector<ad::Parameter*> parameters();

  // Emission scores, l x kTagCount. A null rng disables dropout (inference
  // path); training passes the rng that draws the dropout masks.
  ad::NodeId emissions_node(ad::Graph& g,
                            const std::vector<std::string>& tokens,
                            Rng* dropout_rng);
  Eigen::MatrixXd emissions(const std::vector<std::string>& tokens);

  // Batch-mean CRF negative log-likelihood, a 1 x 1 node.
  ad::NodeId loss_node(ad::Graph& g,
                       const std::vector<AnnotatedSentence>& batch,
                       Rng* dropout_rng);

  ViterbiPath decode(const std::vector<std::string>& tokens);
  // decode + BIO span reading with orphan I-* coerced to B-*.
  Extraction extract(const std::vector<std::string>& tokens);

  // Versioned container: config, every parameter matrix, the encoder table,
  // the plan hash, the attention flag. Loading reproduces inference exactly.
  void save(const std::string& path);
  static Tagger load(const std::string& path);

 private:
  Tagger(const ModelConfig& cfg, bool use_attention);
  void build_layers();

  ModelConfig cfg_;
  bool use_attention_ = true;
  std::string plan_hash_;
  std::unique_ptr<Encoder> encoder_;
  ConvParams conv_;
  LinearParams project_;
  AttentionParams attn_;
  LstmParams lstm_;
  LinearParams emit_;
  ad::Parameter transitions_;
};

}  // namespace cetag
