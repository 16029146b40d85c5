////////////////////////////////////////////////////////////////////////////////
// model.cpp
////////////////////////////////////////////////////////////////////////////////

#include "cetag/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"

using json = nlohmann::json;

namespace cetag {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// JSON numbers cannot carry infinities, and the transition matrix holds the
// -inf mask. Non-finite entries travel as strings.
json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double v = m(r, c);
      if (std::isfinite(v))
        row.push_back(v);
      else if (std::isnan(v))
        row.push_back("nan");
      else
        row.push_back(v > 0 ? "inf" : "-inf");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty())
    throw CheckpointError(what + ": expected a non-empty array of rows");
  Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Eigen::MatrixXd m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array())
      throw CheckpointError(what + ": row " + std::to_string(r) +
                            " is not an array");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      if (cols == 0) throw CheckpointError(what + ": empty rows");
      m.resize(rows, cols);
    }
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw CheckpointError(what + ": ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& cell = row[static_cast<std::size_t>(c)];
      if (cell.is_number()) {
        m(r, c) = cell.get<double>();
      } else if (cell.is_string()) {
        const std::string s = cell.get<std::string>();
        if (s == "-inf")
          m(r, c) = kNegInf;
        else if (s == "inf")
          m(r, c) = -kNegInf;
        else if (s == "nan")
          m(r, c) = std::numeric_limits<double>::quiet_NaN();
        else
          throw CheckpointError(what + ": unreadable cell '" + s + "'");
      } else {
        throw CheckpointError(what + ": cell is neither number nor marker");
      }
    }
  }
  return m;
}

std::vector<int> to_int_path(const TagSequence& tags) {
  std::vector<int> path;
  path.reserve(tags.size());
  for (Tag t : tags) path.push_back(static_cast<int>(t));
  return path;
}

}  // namespace

void validate_config(const ModelConfig& cfg) {
  std::vector<std::string> issues;
  if (cfg.embedding_width < 1) issues.push_back("embedding width must be positive");
  if (cfg.model_width < 1) issues.push_back("model width must be positive");
  if (cfg.windows.empty()) issues.push_back("at least one window size");
  for (std::size_t i = 0; i < cfg.windows.size(); ++i) {
    if (cfg.windows[i] < 1) {
      issues.push_back("window sizes must be positive");
      break;
    }
    if (i > 0 && cfg.windows[i] <= cfg.windows[i - 1]) {
      issues.push_back("window sizes must be strictly increasing");
      break;
    }
  }
  if (cfg.filters < 1) issues.push_back("filter count must be positive");
  if (cfg.rho < 0.0 || cfg.rho > 1.0) issues.push_back("rho must lie in [0, 1]");
  if (cfg.heads < 1) issues.push_back("head count must be positive");
  if (cfg.heads >= 1 && cfg.model_width >= 1 && cfg.model_width % cfg.heads != 0)
    issues.push_back("head count must divide model width");
  if (cfg.hidden < 1) issues.push_back("hidden size must be positive");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0))
    issues.push_back("dropout must lie in [0, 1)");
  if (cfg.max_length < 1) issues.push_back("max length must be positive");
  if (issues.empty()) return;
  std::string msg = "model config:";
  for (const std::string& s : issues) msg += " " + s + ";";
  msg.pop_back();
  throw ModelError(msg);
}

std::string plan_reference_hash(const FilterInitPlan& plan) {
  std::ostringstream os;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", plan.rho);
  os << "rho=" << buf << ";seed=" << plan.seed;
  for (const WindowPlan& w : plan.windows) {
    os << ";w" << w.window_size << ":F" << w.filters;
    for (const InfusedFilter& f : w.infused)
      os << ':' << f.filter_index << (f.role == Role::cause ? 'c' : 'e')
         << f.centroid_index;
  }
  return to_hex64(fnv1a64(os.str()));
}

// ---------------------------------------------------------------------------
// Construction

Tagger::Tagger(const ModelConfig& cfg, bool use_attention)
    : cfg_(cfg), use_attention_(use_attention) {
  validate_config(cfg);
}

Tagger::Tagger(const ModelConfig& cfg, bool use_attention,
               const std::vector<std::string>& vocabulary)
    : Tagger(cfg, use_attention) {
  encoder_ = std::make_unique<TrainableEmbedder>(
      vocabulary, cfg_.embedding_width, cfg_.max_length,
      derive_seed(cfg_.seed, "embedding"));
  build_layers();
}

Tagger::Tagger(const ModelConfig& cfg, bool use_attention, TokenVectors vectors)
    : Tagger(cfg, use_attention) {
  if (static_cast<int>(vectors.vectors.cols()) != cfg_.embedding_width)
    throw ModelError("tagger: token vectors are " +
                     std::to_string(vectors.vectors.cols()) +
                     " wide, config expects " +
                     std::to_string(cfg_.embedding_width));
  encoder_ = std::make_unique<PretrainedVectorsEncoder>(std::move(vectors),
                                                        cfg_.max_length);
  build_layers();
}

void Tagger::build_layers() {
  conv_ = ConvParams::random(cfg_.windows, cfg_.filters, cfg_.embedding_width,
                             derive_seed(cfg_.seed, "conv"));
  project_ = LinearParams::random(conv_.output_width(), cfg_.model_width,
                                  derive_seed(cfg_.seed, "project"), "project");
  if (use_attention_)
    attn_ = AttentionParams::random(cfg_.model_width, cfg_.heads,
                                    derive_seed(cfg_.seed, "attention"));
  int z_width = use_attention_ ? 2 * cfg_.model_width : cfg_.model_width;
  lstm_ = LstmParams::random(z_width, cfg_.hidden,
                             derive_seed(cfg_.seed, "lstm"));
  emit_ = LinearParams::random(2 * cfg_.hidden, kTagCount,
                               derive_seed(cfg_.seed, "emit"), "emit");

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(kTagCount + 2, kTagCount + 2);
  a.col(crf_start_state(kTagCount)).setConstant(kNegInf);
  a.row(crf_stop_state(kTagCount)).setConstant(kNegInf);
  transitions_ = ad::Parameter("crf.transitions", std::move(a));
}

void Tagger::infuse(const InfusionArtifact& artifact, bool freeze) {
  if (artifact.embedding_width != cfg_.embedding_width)
    throw ModelError("infuse: artifact embeds " +
                     std::to_string(artifact.embedding_width) +
                     " wide, model expects " +
                     std::to_string(cfg_.embedding_width));
  std::vector<int> plan_windows;
  for (const WindowPlan& w : artifact.plan.windows) {
    plan_windows.push_back(w.window_size);
    if (w.filters != cfg_.filters)
      throw ModelError("infuse: plan window " + std::to_string(w.window_size) +
                       " carries " + std::to_string(w.filters) +
                       " filters, model expects " +
                       std::to_string(cfg_.filters));
  }
  if (plan_windows != cfg_.windows)
    throw ModelError("infuse: plan windows do not match the model windows");

  conv_ = materialize_conv(artifact.plan, artifact.bank, cfg_.embedding_width,
                           freeze);
  plan_hash_ = plan_reference_hash(artifact.plan);
}

std::vector<ad::Parameter*> Tagger::parameters() {
  std::vector<ad::Parameter*> out;
  for (ad::Parameter* p : encoder_->parameters()) out.push_back(p);
  for (ad::Parameter* p : conv_.parameters()) out.push_back(p);
  for (ad::Parameter* p : project_.parameters()) out.push_back(p);
  if (use_attention_)
    for (ad::Parameter* p : attn_.parameters()) out.push_back(p);
  for (ad::Parameter* p : lstm_.parameters()) out.push_back(p);
  for (ad::Parameter* p : emit_.parameters()) out.push_back(p);
  out.push_back(&transitions_);
  return out;
}

// ---------------------------------------------------------------------------
// Forward passes

ad::NodeId Tagger::emissions_node(ad::Graph& g,
                                  const std::vector<std::string>& tokens,
                                  Rng* dropout_rng) {
  ad::NodeId h = encoder_->encode_node(g, tokens);
  ad::NodeId c = multiscale_conv(g, conv_, h);
  ad::NodeId proj = linear(g, project_, c);
  ad::NodeId z = proj;
  if (use_attention_) z = fuse(g, proj, multihead_attention(g, attn_, proj));
  bool drop = dropout_rng != nullptr && cfg_.dropout > 0.0;
  if (drop) z = g.dropout(z, cfg_.dropout, *dropout_rng);
  ad::NodeId r = bilstm(g, lstm_, z);
  if (drop) r = g.dropout(r, cfg_.dropout, *dropout_rng);
  return linear(g, emit_, r);
}

Eigen::MatrixXd Tagger::emissions(const std::vector<std::string>& tokens) {
  ad::Graph g;
  return g.value(emissions_node(g, tokens, nullptr));
}

ad::NodeId Tagger::loss_node(ad::Graph& g,
                             const std::vector<AnnotatedSentence>& batch,
                             Rng* dropout_rng) {
  if (batch.empty()) throw ModelError("loss: empty batch");
  ad::NodeId total = -1;
  for (const AnnotatedSentence& s : batch) {
    std::vector<int> gold = to_int_path(encode_bio(s));
    ad::NodeId p = emissions_node(g, s.tokens, dropout_rng);
    ad::NodeId nll = crf_nll_node(g, p, g.param(transitions_), gold);
    total = total < 0 ? nll : g.add(total, nll);
  }
  return g.scale(total, 1.0 / static_cast<double>(batch.size()));
}

ViterbiPath Tagger::decode(const std::vector<std::string>& tokens) {
  return viterbi_decode(transitions_.value, emissions(tokens));
}

Extraction Tagger::extract(const std::vector<std::string>& tokens) {
  ViterbiPath best;
  try {
    best = decode(tokens);
  } catch (const Error& e) {
    throw ModelError(std::string("extract: ") + e.what());
  }
  Extraction out;
  out.tags.reserve(best.path.size());
  for (int t : best.path) out.tags.push_back(static_cast<Tag>(t));
  DecodedSpans spans = decode_bio(out.tags, Repair::coerce);
  out.cause_spans = std::move(spans.cause);
  out.effect_spans = std::move(spans.effect);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

void Tagger::save(const std::string& path) {
  json doc;
  doc["format_version"] = 1;
  doc["config"] = {{"embedding_width", cfg_.embedding_width},
                   {"model_width", cfg_.model_width},
                   {"windows", cfg_.windows},
                   {"filters", cfg_.filters},
                   {"rho", cfg_.rho},
                   {"heads", cfg_.heads},
                   {"hidden", cfg_.hidden},
                   {"dropout", cfg_.dropout},
                   {"max_length", cfg_.max_length},
                   {"seed", cfg_.seed}};
  doc["use_attention"] = use_attention_;
  doc["plan_hash"] = plan_hash_;

  json enc;
  if (auto* emb = dynamic_cast<TrainableEmbedder*>(encoder_.get())) {
    enc["kind"] = "trainable";
    enc["tokens"] = emb->vocabulary();
  } else if (auto* pre = dynamic_cast<PretrainedVectorsEncoder*>(encoder_.get())) {
    TokenVectors tv = pre->table();
    enc["kind"] = "pretrained";
    enc["tokens"] = tv.tokens;
    enc["vectors"] = matrix_to_json(tv.vectors);
  } else {
    throw CheckpointError("save: encoder '" + encoder_->id() +
                          "' has no checkpoint form");
  }
  doc["encoder"] = enc;

  json params = json::object();
  json frozen = json::object();
  for (ad::Parameter* p : parameters()) {
    params[p->name] = matrix_to_json(p->value);
    if (p->frozen_cols > 0) frozen[p->name] = p->frozen_cols;
  }
  doc["parameters"] = std::move(params);
  doc["frozen"] = std::move(frozen);

  std::ofstream out(path);
  if (!out) throw CheckpointError("save: cannot write " + path);
  out << doc.dump(1, '\t') << '\n';
  if (!out) throw CheckpointError("save: write failed for " + path);
}

Tagger Tagger::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("load: cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw CheckpointError("load: " + path + " is not valid JSON: " + e.what());
  }

  try {
    if (!doc.contains("format_version") ||
        doc["format_version"].get<int>() != 1)
      throw CheckpointError("load: " + path +
                            " has an unsupported format version");
    const json& c = doc.at("config");
    ModelConfig cfg;
    cfg.embedding_width = c.at("embedding_width").get<int>();
    cfg.model_width = c.at("model_width").get<int>();
    cfg.windows = c.at("windows").get<std::vector<int>>();
    cfg.filters = c.at("filters").get<int>();
    cfg.rho = c.at("rho").get<double>();
    cfg.heads = c.at("heads").get<int>();
    cfg.hidden = c.at("hidden").get<int>();
    cfg.dropout = c.at("dropout").get<double>();
    cfg.max_length = c.at("max_length").get<int>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    bool use_attention = doc.at("use_attention").get<bool>();

    const json& enc = doc.at("encoder");
    std::string kind = enc.at("kind").get<std::string>();
    Tagger t = [&]() -> Tagger {
      if (kind == "trainable")
        return Tagger(cfg, use_attention,
                      enc.at("tokens").get<std::vector<std::string>>());
      if (kind == "pretrained") {
        TokenVectors tv;
        tv.tokens = enc.at("tokens").get<std::vector<std::string>>();
        tv.vectors = matrix_from_json(enc.at("vectors"), "encoder vectors");
        return Tagger(cfg, use_attention, std::move(tv));
      }
      throw CheckpointError("load: unknown encoder kind '" + kind + "'");
    }();
    t.plan_hash_ = doc.at("plan_hash").get<std::string>();

    std::map<std::string, ad::Parameter*> by_name;
    for (ad::Parameter* p : t.parameters()) by_name[p->name] = p;

    const json& params = doc.at("parameters");
    for (auto& [name, p] : by_name) {
      if (!params.contains(name))
        throw CheckpointError("load: " + path + " is missing parameter '" +
                              name + "'");
      Eigen::MatrixXd m = matrix_from_json(params.at(name), name);
      if (m.rows() != p->value.rows() || m.cols() != p->value.cols())
        throw CheckpointError(
            "load: parameter '" + name + "' is " + std::to_string(m.rows()) +
            "x" + std::to_string(m.cols()) + ", model expects " +
            std::to_string(p->value.rows()) + "x" +
            std::to_string(p->value.cols()));
      p->value = std::move(m);
    }
    for (auto it = params.begin(); it != params.end(); ++it)
      if (!by_name.count(it.key()))
        throw CheckpointError("load: " + path +
                              " carries unexpected parameter '" + it.key() +
                              "'");

    for (const auto& [name, cols] : doc.at("frozen").items()) {
      auto it = by_name.find(name);
      if (it == by_name.end())
        throw CheckpointError("load: frozen entry for unknown parameter '" +
                              name + "'");
      int fc = cols.get<int>();
      if (fc < 0 || fc > it->second->value.cols())
        throw CheckpointError("load: frozen column count " +
                              std::to_string(fc) + " out of range for '" +
                              name + "'");
      it->second->frozen_cols = fc;
    }
    return t;
  } catch (const json::exception& e) {
    throw CheckpointError("load: " + path + " has an unexpected layout: " +
                          e.what());
  }
}

}  // namespace cetag
