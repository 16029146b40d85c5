////////////////////////////////////////////////////////////////////////////////
// harness.cpp
////////////////////////////////////////////////////////////////////////////////

#include "cetag/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>
#include <ostream>
#include <set>

#include "json.hpp"

using json = nlohmann::json;

namespace cetag {

void validate_train_config(const TrainConfig& cfg) {
  std::vector<std::string> issues;
  if (!(cfg.learning_rate > 0.0))
    issues.push_back("learning rate must be positive");
  if (cfg.batch_size < 1) issues.push_back("batch size must be positive");
  if (cfg.epochs < 0) issues.push_back("epoch count cannot be negative");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0))
    issues.push_back("dropout must lie in [0, 1)");
  if (cfg.max_length < 1) issues.push_back("max length must be positive");
  if (issues.empty()) return;
  std::string msg = "train config:";
  for (const std::string& s : issues) msg += " " + s + ";";
  msg.pop_back();
  throw TrainError(msg);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

struct MatchCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
};

void match_spans(const std::vector<Span>& predicted,
                 const std::vector<Span>& gold, MatchCounts& counts) {
  std::multiset<Span> open(gold.begin(), gold.end());
  for (const Span& p : predicted) {
    auto it = open.find(p);
    if (it != open.end()) {
      open.erase(it);
      counts.tp += 1;
    } else {
      counts.fp += 1;
    }
  }
  counts.fn += static_cast<long>(open.size());
}

RoleScores scores_from(const MatchCounts& c) {
  RoleScores s;
  s.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
  s.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
  s.f1 = s.precision + s.recall > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

double elapsed_seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
      .count();
}

}  // namespace

EvalReport score_predictions(const std::vector<DecodedSpans>& predictions,
                             const std::vector<AnnotatedSentence>& gold) {
  if (gold.empty()) throw TrainError("evaluate: empty corpus");
  if (predictions.size() != gold.size())
    throw TrainError("evaluate: " + std::to_string(predictions.size()) +
                     " predictions against " + std::to_string(gold.size()) +
                     " gold sentences");
  MatchCounts cause, effect;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    match_spans(predictions[i].cause, gold[i].cause_spans, cause);
    match_spans(predictions[i].effect, gold[i].effect_spans, effect);
  }
  MatchCounts total{cause.tp + effect.tp, cause.fp + effect.fp,
                    cause.fn + effect.fn};
  RoleScores micro = scores_from(total);
  EvalReport report;
  report.precision = micro.precision;
  report.recall = micro.recall;
  report.f1 = micro.f1;
  report.cause = scores_from(cause);
  report.effect = scores_from(effect);
  return report;
}

EvalReport evaluate(Tagger& model,
                    const std::vector<AnnotatedSentence>& corpus) {
  if (corpus.empty()) throw TrainError("evaluate: empty corpus");
  std::vector<DecodedSpans> predictions;
  predictions.reserve(corpus.size());
  for (const AnnotatedSentence& s : corpus) {
    Extraction ex = model.extract(s.tokens);
    predictions.push_back({std::move(ex.cause_spans), std::move(ex.effect_spans)});
  }
  return score_predictions(predictions, corpus);
}

std::vector<AnnotatedSentence> truncate_overlong(
    const std::vector<AnnotatedSentence>& corpus, int max_length,
    std::ostream* log) {
  std::vector<AnnotatedSentence> out = corpus;
  std::size_t limit = static_cast<std::size_t>(max_length);
  std::size_t cut = 0, dropped = 0;
  for (AnnotatedSentence& s : out) {
    if (s.tokens.size() <= limit) continue;
    ++cut;
    s.tokens.resize(limit);
    auto drop_overhang = [&](std::vector<Span>& spans) {
      auto tail = std::remove_if(spans.begin(), spans.end(),
                                 [&](const Span& sp) { return sp.end > limit; });
      dropped += static_cast<std::size_t>(spans.end() - tail);
      spans.erase(tail, spans.end());
    };
    drop_overhang(s.cause_spans);
    drop_overhang(s.effect_spans);
  }
  if (cut > 0 && log)
    *log << "warning: truncated " << cut << " of " << corpus.size()
         << " sentences to " << max_length << " tokens, dropping " << dropped
         << " spans\n";
  return out;
}

// ---------------------------------------------------------------------------
// Optimizer

AdamOptimizer::AdamOptimizer(std::vector<ad::Parameter*> params,
                             double learning_rate, double beta1, double beta2,
                             double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (!(learning_rate > 0.0))
    throw TrainError("optimizer: learning rate must be positive");
  for (ad::Parameter* p : params) {
    Slot slot;
    slot.p = p;
    slot.m = Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols());
    slot.v = slot.m;
    slots_.push_back(std::move(slot));
  }
}

void AdamOptimizer::step() {
  ++steps_;
  double mc = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  double vc = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (Slot& slot : slots_) {
    ad::Parameter& p = *slot.p;
    if (!p.trainable) continue;
    Eigen::MatrixXd g = p.grad;
    if (p.frozen_cols > 0) g.leftCols(p.frozen_cols).setZero();
    slot.m = beta1_ * slot.m + (1.0 - beta1_) * g;
    slot.v = beta2_ * slot.v + (1.0 - beta2_) * g.cwiseProduct(g);
    Eigen::MatrixXd update =
        (lr_ / mc) * slot.m.cwiseQuotient(
                         ((slot.v / vc).cwiseSqrt().array() + eps_).matrix());
    p.value -= update;
  }
}

void AdamOptimizer::zero_grad() {
  for (Slot& slot : slots_) slot.p->zero_grad();
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult train(Tagger model, const CorpusSplits& splits,
                  const TrainConfig& cfg, std::ostream* log) {
  validate_train_config(cfg);
  if (splits.train.empty()) throw TrainError("train: empty training split");
  if (splits.dev.empty()) throw TrainError("train: empty dev split");

  TrainResult result{std::move(model), {}, {}, -1, 0.0};
  Tagger& net = result.model;
  auto train_data =
      truncate_overlong(splits.train, net.config().max_length, log);
  auto dev_data = truncate_overlong(splits.dev, net.config().max_length, log);
  if (cfg.epochs == 0) return result;

  std::vector<ad::Parameter*> params = net.parameters();
  AdamOptimizer opt(params, cfg.learning_rate);
  // The transition matrix carries a permanent -inf mask, so divergence is a
  // rise in the non-finite entry count, not its mere presence.
  std::vector<Eigen::Index> nonfinite_baseline;
  for (const ad::Parameter* p : params)
    nonfinite_baseline.push_back(
        (!p->value.array().isFinite()).count());
  std::vector<Eigen::MatrixXd> best_values;
  double best_f1 = -1.0;
  auto started = std::chrono::steady_clock::now();

  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t batch_size = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", epoch));
    shuffle_rng.shuffle(order);
    Rng dropout_rng(derive_seed(cfg.seed, "dropout", epoch));

    double loss_sum = 0.0;
    int batch_index = 0;
    for (std::size_t at = 0; at < order.size();
         at += batch_size, ++batch_index) {
      std::vector<AnnotatedSentence> batch;
      std::size_t stop = std::min(order.size(), at + batch_size);
      for (std::size_t i = at; i < stop; ++i)
        batch.push_back(train_data[order[i]]);

      opt.zero_grad();
      ad::Graph g;
      ad::NodeId loss = net.loss_node(g, batch, &dropout_rng);
      double value = g.value(loss)(0, 0);
      if (!std::isfinite(value))
        throw TrainError("train: loss diverged at epoch " +
                         std::to_string(epoch) + ", batch " +
                         std::to_string(batch_index));
      g.backward(loss);
      opt.step();
      // A runaway step corrupts the weights before the next forward pass
      // can surface a non-finite loss, so check them here. Weights past
      // 1e100 overflow the very next matrix product.
      for (std::size_t i = 0; i < params.size(); ++i) {
        const auto arr = params[i]->value.array();
        Eigen::Index bad = (!arr.isFinite()).count();
        bool runaway = bad == 0 && nonfinite_baseline[i] == 0 &&
                       arr.abs().maxCoeff() > 1e100;
        if (bad > nonfinite_baseline[i] || runaway)
          throw TrainError("train: parameter " + params[i]->name +
                           " diverged at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_index));
      }
      loss_sum += value * static_cast<double>(batch.size());
    }

    EvalReport dev = evaluate(net, dev_data);
    dev.epoch = epoch;
    dev.seconds = elapsed_seconds(started);
    double train_loss = loss_sum / static_cast<double>(train_data.size());
    result.dev_reports.push_back(dev);
    result.convergence.push_back({epoch, train_loss, dev.precision, dev.recall,
                                  dev.f1, dev.seconds});
    if (dev.f1 > best_f1) {
      best_f1 = dev.f1;
      result.best_epoch = epoch;
      best_values.clear();
      for (ad::Parameter* p : params) best_values.push_back(p->value);
    }
    if (log)
      *log << "epoch " << epoch << ": loss " << train_loss << ", dev F1 "
           << dev.f1 << " (" << dev.seconds << "s)\n";
  }

  for (std::size_t i = 0; i < params.size(); ++i)
    params[i]->value = best_values[i];
  result.best_dev_f1 = best_f1;
  return result;
}

// ---------------------------------------------------------------------------
// Model assembly

MiningConfig mining_defaults(const ModelConfig& cfg) {
  MiningConfig m;
  m.windows = cfg.windows;
  m.fraction = 0.2;
  m.smoothing = 1.0;
  m.clusters = cfg.filters;
  m.filters = cfg.filters;
  m.rho = cfg.rho;
  m.seed = cfg.seed;
  return m;
}

Tagger prepare_model(ModelConfig cfg, const TrainConfig& flags,
                     const std::vector<AnnotatedSentence>& train_split,
                     const PrepareInputs& inputs) {
  cfg.dropout = flags.dropout;
  cfg.max_length = flags.max_length;
  validate_config(cfg);
  validate_train_config(flags);
  if (train_split.empty()) throw TrainError("prepare: empty training split");

  std::vector<std::string> vocab;
  for (const AnnotatedSentence& s : train_split)
    vocab.insert(vocab.end(), s.tokens.begin(), s.tokens.end());

  Tagger model = [&]() -> Tagger {
    if (!flags.use_pretrained_encoder)
      return Tagger(cfg, flags.use_attention, vocab);
    if (inputs.vectors)
      return Tagger(cfg, flags.use_attention, *inputs.vectors);
    std::vector<std::vector<std::string>> texts;
    for (const AnnotatedSentence& s : train_split) texts.push_back(s.tokens);
    return Tagger(cfg, flags.use_attention,
                  ppmi_svd_vectors(texts, cfg.embedding_width, 2));
  }();

  if (!flags.use_infusion) return model;
  if (inputs.artifact) {
    model.infuse(*inputs.artifact, false);
    return model;
  }

  // Mining embeds n-grams with an encoder initialized exactly like the
  // model's own, so centroids live in the space the kernels multiply.
  MiningConfig mc = inputs.mining ? *inputs.mining : mining_defaults(cfg);
  std::unique_ptr<Encoder> mining_encoder;
  if (flags.use_pretrained_encoder) {
    auto* pre = dynamic_cast<PretrainedVectorsEncoder*>(&model.encoder());
    if (!pre)
      throw TrainError("prepare: pretrained flag set on encoder '" +
                       model.encoder().id() + "'");
    mining_encoder = std::make_unique<PretrainedVectorsEncoder>(
        pre->table(), cfg.max_length);
  } else {
    mining_encoder = std::make_unique<TrainableEmbedder>(
        vocab, cfg.embedding_width, cfg.max_length,
        derive_seed(cfg.seed, "embedding"));
  }
  MiningOutcome mined = mine_knowledge(train_split, *mining_encoder, mc);

  InfusionArtifact artifact;
  artifact.embedding_width = cfg.embedding_width;
  artifact.filters = mc.filters;
  artifact.rho = mc.rho;
  artifact.seed = mc.seed;
  artifact.bank = std::move(mined.bank);
  artifact.plan = std::move(mined.plan);
  model.infuse(artifact, false);
  return model;
}

// ---------------------------------------------------------------------------
// Ablations

AblationTable ablate(const ModelConfig& base, const TrainConfig& cfg,
                     const CorpusSplits& splits, const PrepareInputs& inputs,
                     std::ostream* log) {
  TrainConfig full = cfg;
  full.use_pretrained_encoder = true;
  full.use_infusion = true;
  full.use_attention = true;

  std::vector<std::pair<std::string, TrainConfig>> variants;
  variants.emplace_back("full", full);
  TrainConfig no_pre = full;
  no_pre.use_pretrained_encoder = false;
  variants.emplace_back("no-pretrained-encoder", no_pre);
  TrainConfig no_inf = full;
  no_inf.use_infusion = false;
  variants.emplace_back("no-infusion", no_inf);
  TrainConfig no_attn = full;
  no_attn.use_attention = false;
  variants.emplace_back("no-attention", no_attn);

  AblationTable table;
  table.complete = true;
  for (auto& [name, vcfg] : variants) {
    AblationRow row;
    row.name = name;
    if (log) *log << "ablation run: " << name << "\n";
    try {
      Tagger model = prepare_model(base, vcfg, splits.train, inputs);
      TrainResult r = train(std::move(model), splits, vcfg, log);
      row.best_epoch = r.best_epoch;
      if (r.best_epoch > 0)
        row.dev = r.dev_reports[static_cast<std::size_t>(r.best_epoch - 1)];
      auto test_data =
          truncate_overlong(splits.test, vcfg.max_length, log);
      row.test = evaluate(r.model, test_data);
      row.completed = true;
    } catch (const Error& e) {
      row.error = e.what();
      table.complete = false;
      if (log) *log << "ablation run " << name << " failed: " << e.what() << "\n";
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Reports

void write_convergence_csv(const std::string& path,
                           const std::vector<ConvergenceRow>& rows) {
  std::ofstream out(path);
  if (!out) throw TrainError("convergence csv: cannot write " + path);
  out << "epoch,train_loss,dev_precision,dev_recall,dev_f1,seconds\n";
  char buf[256];
  for (const ConvergenceRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.epoch, r.train_loss, r.dev_precision, r.dev_recall,
                  r.dev_f1, r.seconds);
    out << buf;
  }
  if (!out) throw TrainError("convergence csv: write failed for " + path);
}

namespace {

json role_json(const RoleScores& r) {
  return {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
}

json report_json(const EvalReport& r) {
  return {{"precision", r.precision}, {"recall", r.recall},
          {"f1", r.f1},               {"cause", role_json(r.cause)},
          {"effect", role_json(r.effect)}, {"epoch", r.epoch},
          {"seconds", r.seconds}};
}

void write_json_file(const std::string& path, const json& doc,
                     const char* what) {
  std::ofstream out(path);
  if (!out) throw TrainError(std::string(what) + ": cannot write " + path);
  out << doc.dump(1, '\t') << '\n';
  if (!out) throw TrainError(std::string(what) + ": write failed for " + path);
}

}  // namespace

void write_eval_report_json(const std::string& path,
                            const EvalReport& report) {
  json doc = report_json(report);
  doc["schema_version"] = 1;
  write_json_file(path, doc, "eval report");
}

void write_ablation_json(const std::string& path, const AblationTable& table) {
  json rows = json::array();
  for (const AblationRow& r : table.rows)
    rows.push_back({{"name", r.name},
                    {"completed", r.completed},
                    {"error", r.error},
                    {"best_epoch", r.best_epoch},
                    {"dev", report_json(r.dev)},
                    {"test", report_json(r.test)}});
  json doc = {{"schema_version", 1},
              {"complete", table.complete},
              {"rows", std::move(rows)}};
  write_json_file(path, doc, "ablation table");
}

}  // namespace cetag
