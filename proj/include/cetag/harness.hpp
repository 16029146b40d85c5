////////////////////////////////////////////////////////////////////////////////
// harness.hpp
//
// Training loop, span-F1 evaluation, ablation driver, and convergence
// logging. All randomness descends from TrainConfig::seed through named
// stages, so reruns with one seed are bit-reproducible.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cetag/model.hpp"
#include "cetag/synthetic.hpp"

namespace cetag {

struct TrainConfig {
  double learning_rate = 1e-5;  // fine-tuning rate; see trainable_rate()
  int batch_size = 8;
  int epochs = 100;
  double dropout = 0.5;
  int max_length = 100;
  std::uint64_t seed = 0;
  bool use_pretrained_encoder = true;
  bool use_infusion = true;
  bool use_attention = true;

  // A from-scratch embedding table cannot move at the fine-tuning rate
  // within the default epoch budget.
  static constexpr double trainable_rate() { return 1e-3; }
};

void validate_train_config(const TrainConfig& cfg);  // throws TrainError

struct RoleScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;  // micro over cause+effect exact span matches
  RoleScores cause;
  RoleScores effect;
  int epoch = -1;        // -1 outside a training run
  double seconds = 0.0;  // wall clock since the run started
};

// Exact-match micro-F1 over (role, start, end) triples; each gold span is
// matched at most once. predictions[i] is scored against gold[i]. Throws
// TrainError on an empty corpus or a length mismatch.
EvalReport score_predictions(const std::vector<DecodedSpans>& predictions,
                             const std::vector<AnnotatedSentence>& gold);

// Runs the model over every sentence and scores the predicted spans.
EvalReport evaluate(Tagger& model, const std::vector<AnnotatedSentence>& corpus);

// Copy of the corpus with over-length sentences cut to max_length. Spans that
// no longer fit are dropped. One warning line per affected corpus goes to
// *log when given.
std::vector<AnnotatedSentence> truncate_overlong(
    const std::vector<AnnotatedSentence>& corpus, int max_length,
    std::ostream* log);

struct ConvergenceRow {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-sentence NLL over the epoch
  double dev_precision = 0.0;
  double dev_recall = 0.0;
  double dev_f1 = 0.0;
  double seconds = 0.0;  // wall clock since the run started, measured
};

struct TrainResult {
  Tagger model;  // restored to the best-dev epoch's parameters
  std::vector<EvalReport> dev_reports;        // one per epoch
  std::vector<ConvergenceRow> convergence;    // same epochs
  int best_epoch = -1;                        // 1-based; -1 when epochs == 0
  double best_dev_f1 = 0.0;
};

// Adaptive-moment descent over the accumulated Parameter gradients.
// Non-trainable parameters and frozen leading columns never move.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<ad::Parameter*> params, double learning_rate,
                double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step();
  void zero_grad();

 private:
  struct Slot {
    ad::Parameter* p;
    Eigen::MatrixXd m, v;
  };
  std::vector<Slot> slots_;
  double lr_, beta1_, beta2_, eps_;
  long steps_ = 0;
};

// Minimizes batch-mean CRF NLL with Adam, shuffling per epoch from the
// config seed, evaluating on dev after every epoch, and restoring the
// parameters of the best dev-F1 epoch before returning. A non-finite loss
// aborts with TrainError naming the epoch and batch. Zero epochs return the
// model untouched with empty reports.
TrainResult train(Tagger model, const CorpusSplits& splits,
                  const TrainConfig& cfg, std::ostream* log = nullptr);

// Optional externally supplied pieces for prepare_model. Absent pieces are
// built from the training split: token vectors by PPMI+SVD over its text,
// the knowledge artifact by mining it with an encoder initialized exactly
// like the model's own.
struct PrepareInputs {
  const TokenVectors* vectors = nullptr;
  const InfusionArtifact* artifact = nullptr;
  const MiningConfig* mining = nullptr;
};

// Mining parameters implied by a model config: its windows, filters, rho and
// seed, with selection fraction 0.2, smoothing 1, and as many clusters as
// filters.
MiningConfig mining_defaults(const ModelConfig& cfg);

// Assembles the model a flag combination describes, mining knowledge and
// pretraining vectors on demand. cfg.dropout and cfg.max_length are aligned
// with the train config before construction.
Tagger prepare_model(ModelConfig cfg, const TrainConfig& flags,
                     const std::vector<AnnotatedSentence>& train_split,
                     const PrepareInputs& inputs = {});

struct AblationRow {
  std::string name;  // "full", "no-pretrained-encoder", "no-infusion", "no-attention"
  bool completed = false;
  std::string error;  // empty when completed
  int best_epoch = -1;
  EvalReport dev;   // best-dev numbers
  EvalReport test;  // test-split numbers of the best-dev model
};

struct AblationTable {
  std::vector<AblationRow> rows;
  bool complete = false;  // false when any run failed
};

// Trains the full model and each single-flag-off variant under identical
// seeds and data order. A failed run is recorded in its row and marks the
// table incomplete instead of aborting the rest.
AblationTable ablate(const ModelConfig& base, const TrainConfig& cfg,
                     const CorpusSplits& splits,
                     const PrepareInputs& inputs = {},
                     std::ostream* log = nullptr);

// CSV with header epoch,train_loss,dev_precision,dev_recall,dev_f1,seconds.
// Metric fields are written with %.17g so equal runs write equal bytes; the
// seconds field is a measured wall-clock value.
void write_convergence_csv(const std::string& path,
                           const std::vector<ConvergenceRow>& rows);

void write_eval_report_json(const std::string& path, const EvalReport& report);
void write_ablation_json(const std::string& path, const AblationTable& table);

}  // namespace cetag
