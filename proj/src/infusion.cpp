////////////////////////////////////////////////////////////////////////////////
// infusion.cpp
////////////////////////////////////////////////////////////////////////////////

#include "cetag/infusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "json.hpp"

#include "cetag/kmeans.hpp"
#include "cetag/util.hpp"

using json = nlohmann::json;

namespace cetag {

std::vector<Eigen::VectorXd> embed_ngrams(const std::vector<Ngram>& ngrams,
                                          const Encoder& encoder) {
  std::vector<Eigen::VectorXd> out;
  if (ngrams.empty()) return out;

  std::size_t n = ngrams[0].size();
  if (n == 0) throw KnowledgeError("embed_ngrams: empty n-gram");
  for (const Ngram& g : ngrams)
    if (g.size() != n)
      throw KnowledgeError("embed_ngrams: mixed window sizes, " +
                           std::to_string(n) + " vs " +
                           std::to_string(g.size()) + " ('" + ngram_text(g) +
                           "')");

  int e = encoder.width();
  out.reserve(ngrams.size());
  for (const Ngram& g : ngrams) {
    Eigen::MatrixXd h;
    try {
      h = encoder.encode(g);
    } catch (const Error& err) {
      throw KnowledgeError("embed_ngrams: '" + ngram_text(g) +
                           "': " + err.what());
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(n) * e);
    for (std::size_t i = 0; i < n; ++i)
      v.segment(static_cast<Eigen::Index>(i) * e, e) =
          h.row(static_cast<Eigen::Index>(i)).transpose();
    out.push_back(std::move(v));
  }
  return out;
}

const ClusterEntry* ClusterBank::find(int window_size, Role role) const {
  for (const ClusterEntry& e : entries)
    if (e.window_size == window_size && e.role == role) return &e;
  return nullptr;
}

namespace {

// Pool order: largest cluster first, centroid index breaking ties.
std::vector<int> pool_order(const ClusterEntry& entry) {
  std::vector<int> order(entry.centroids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return entry.sizes[static_cast<std::size_t>(a)] >
           entry.sizes[static_cast<std::size_t>(b)];
  });
  return order;
}

}  // namespace

FilterInitPlan build_filter_init(const ClusterBank& bank, int filters,
                                 double rho, std::uint64_t seed) {
  if (filters < 1) throw KnowledgeError("filter plan: filter count must be positive");
  if (rho < 0.0 || rho > 1.0)
    throw KnowledgeError("filter plan: infusion fraction " +
                         std::to_string(rho) + " outside [0, 1]");
  if (bank.entries.empty())
    throw KnowledgeError("filter plan: empty cluster bank");

  std::set<int> window_sizes;
  for (const ClusterEntry& e : bank.entries) window_sizes.insert(e.window_size);

  int infused = static_cast<int>(std::lround(rho * filters));
  int need_cause = (infused + 1) / 2;
  int need_effect = infused / 2;

  FilterInitPlan plan;
  plan.rho = rho;
  plan.seed = seed;
  for (int n : window_sizes) {
    WindowPlan wp;
    wp.window_size = n;
    wp.filters = filters;
    if (infused > 0) {
      const ClusterEntry* cause = bank.find(n, Role::cause);
      const ClusterEntry* effect = bank.find(n, Role::effect);
      auto check = [&](const ClusterEntry* entry, Role role, int need) {
        if (!entry)
          throw KnowledgeError("filter plan: window " + std::to_string(n) +
                               " has no " + role_name(role) + " pool");
        if (static_cast<int>(entry->centroids.size()) < need)
          throw KnowledgeError("filter plan: window " + std::to_string(n) +
                               " " + role_name(role) + " pool holds " +
                               std::to_string(entry->centroids.size()) +
                               " centroids, plan needs " +
                               std::to_string(need));
      };
      check(cause, Role::cause, need_cause);
      check(effect, Role::effect, need_effect);

      std::vector<int> cause_pool = pool_order(*cause);
      std::vector<int> effect_pool = pool_order(*effect);
      for (int i = 0; i < infused; ++i) {
        InfusedFilter f;
        f.filter_index = i;
        f.role = (i % 2 == 0) ? Role::cause : Role::effect;
        const auto& pool = (i % 2 == 0) ? cause_pool : effect_pool;
        f.centroid_index = pool[static_cast<std::size_t>(i / 2)];
        wp.infused.push_back(f);
      }
    }
    plan.windows.push_back(std::move(wp));
  }
  return plan;
}

ConvParams materialize_conv(const FilterInitPlan& plan, const ClusterBank& bank,
                            int embedding_width, bool freeze) {
  if (plan.windows.empty())
    throw KnowledgeError("materialize: plan lists no windows");
  std::vector<int> windows;
  int filters = plan.windows[0].filters;
  for (const WindowPlan& wp : plan.windows) {
    windows.push_back(wp.window_size);
    if (wp.filters != filters)
      throw KnowledgeError("materialize: windows disagree on filter count");
  }

  ConvParams conv =
      ConvParams::random(windows, filters, embedding_width, plan.seed);
  for (std::size_t w = 0; w < plan.windows.size(); ++w) {
    const WindowPlan& wp = plan.windows[w];
    for (const InfusedFilter& f : wp.infused) {
      if (f.filter_index < 0 ||
          f.filter_index >= static_cast<int>(wp.infused.size()))
        throw KnowledgeError("materialize: infused filter index " +
                             std::to_string(f.filter_index) +
                             " is not in the leading block");
      const ClusterEntry* entry = bank.find(wp.window_size, f.role);
      if (!entry)
        throw KnowledgeError("materialize: bank lacks window " +
                             std::to_string(wp.window_size) + " " +
                             role_name(f.role) + " centroids");
      if (f.centroid_index < 0 ||
          f.centroid_index >= static_cast<int>(entry->centroids.size()))
        throw KnowledgeError("materialize: centroid index " +
                             std::to_string(f.centroid_index) +
                             " outside the pool");
      const Eigen::VectorXd& centroid =
          entry->centroids[static_cast<std::size_t>(f.centroid_index)];
      if (centroid.size() != conv.kernels[w].value.rows())
        throw KnowledgeError(
            "materialize: centroid dimension " +
            std::to_string(centroid.size()) + " does not fit a " +
            std::to_string(conv.kernels[w].value.rows()) + "-row kernel");
      double norm = centroid.norm();
      if (norm < 1e-12)
        throw KnowledgeError("materialize: zero centroid cannot seed window " +
                             std::to_string(wp.window_size) + " filter " +
                             std::to_string(f.filter_index));
      // Scaled so a matching input responds at the expected response
      // magnitude of the surrounding random columns, input norm over
      // sqrt(rows), instead of shouting at the full input norm.
      double level = 1.0 / std::sqrt(static_cast<double>(centroid.size()));
      conv.kernels[w].value.col(f.filter_index) = centroid * (level / norm);
    }
    if (freeze)
      conv.kernels[w].frozen_cols = static_cast<int>(wp.infused.size());
  }
  return conv;
}

MiningOutcome mine_knowledge(const std::vector<AnnotatedSentence>& corpus,
                             const Encoder& encoder, const MiningConfig& cfg) {
  if (cfg.windows.empty())
    throw KnowledgeError("mining: no window sizes configured");
  std::set<int> seen;
  for (int n : cfg.windows) {
    if (n < 1)
      throw KnowledgeError("mining: window size " + std::to_string(n));
    if (!seen.insert(n).second)
      throw KnowledgeError("mining: duplicate window size " +
                           std::to_string(n));
  }
  if (cfg.clusters < 1) throw KnowledgeError("mining: cluster count must be positive");

  MiningOutcome out;
  out.bank.embedding_width = encoder.width();
  for (int n : seen) {
    NgramTable table = count_ngrams(corpus, n);
    if (table.cause_total == 0)
      throw KnowledgeError("mining: window " + std::to_string(n) +
                           " finds no n-grams inside cause spans");
    if (table.effect_total == 0)
      throw KnowledgeError("mining: window " + std::to_string(n) +
                           " finds no n-grams inside effect spans");

    SelectionSummary summary;
    summary.window_size = n;
    summary.distinct_ngrams = static_cast<int>(table.entries.size());
    for (Role role : {Role::cause, Role::effect}) {
      RankedNgrams ranked =
          select_top(table, role, cfg.fraction, cfg.smoothing);
      int selected = static_cast<int>(ranked.items.size());
      (role == Role::cause ? summary.cause_selected
                           : summary.effect_selected) = selected;
      if (selected < cfg.clusters)
        throw KnowledgeError(
            "mining: window " + std::to_string(n) + " " + role_name(role) +
            " pool has " + std::to_string(selected) +
            " selected n-grams, cannot form " + std::to_string(cfg.clusters) +
            " clusters");

      std::vector<Ngram> grams;
      grams.reserve(ranked.items.size());
      for (const auto& item : ranked.items) grams.push_back(item.first);
      std::vector<Eigen::VectorXd> vectors = embed_ngrams(grams, encoder);

      KMeansResult km = kmeans(
          vectors, cfg.clusters,
          derive_seed(cfg.seed, role == Role::cause ? "cluster-cause"
                                                    : "cluster-effect",
                      static_cast<std::uint64_t>(n)));
      ClusterEntry entry;
      entry.window_size = n;
      entry.role = role;
      entry.centroids = std::move(km.centroids);
      entry.sizes = std::move(km.sizes);
      out.bank.entries.push_back(std::move(entry));
    }
    out.selections.push_back(summary);
  }
  out.plan = build_filter_init(out.bank, cfg.filters, cfg.rho,
                               derive_seed(cfg.seed, "conv-init"));
  return out;
}

// ---------------------------------------------------------------------------
// Artifact serialization

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = arr.at(i).get<double>();
  return v;
}

}  // namespace

void save_infusion_artifact(const std::string& path,
                            const InfusionArtifact& artifact) {
  json root;
  root["format_version"] = artifact.format_version;
  root["embedding_width"] = artifact.embedding_width;
  root["filters"] = artifact.filters;
  root["rho"] = artifact.rho;
  root["seed"] = artifact.seed;

  json bank = json::array();
  for (const ClusterEntry& e : artifact.bank.entries) {
    json entry;
    entry["window"] = e.window_size;
    entry["role"] = role_name(e.role);
    entry["sizes"] = e.sizes;
    json centroids = json::array();
    for (const auto& c : e.centroids) centroids.push_back(vector_to_json(c));
    entry["centroids"] = std::move(centroids);
    bank.push_back(std::move(entry));
  }
  root["bank"] = std::move(bank);

  json windows = json::array();
  for (const WindowPlan& wp : artifact.plan.windows) {
    json w;
    w["window"] = wp.window_size;
    w["filters"] = wp.filters;
    json infused = json::array();
    for (const InfusedFilter& f : wp.infused)
      infused.push_back({{"filter", f.filter_index},
                         {"role", role_name(f.role)},
                         {"centroid", f.centroid_index}});
    w["infused"] = std::move(infused);
    windows.push_back(std::move(w));
  }
  root["plan"] = {{"rho", artifact.plan.rho},
                  {"seed", artifact.plan.seed},
                  {"windows", std::move(windows)}};

  std::ofstream out(path);
  if (!out)
    throw KnowledgeError("infusion artifact: cannot write " + path);
  out << root.dump(1, '\t') << '\n';
  if (!out)
    throw KnowledgeError("infusion artifact: write failed for " + path);
}

InfusionArtifact load_infusion_artifact(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw KnowledgeError("infusion artifact: cannot open " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw KnowledgeError("infusion artifact: " + path +
                         " is not valid JSON: " + e.what());
  }

  InfusionArtifact artifact;
  try {
    artifact.format_version = root.at("format_version").get<int>();
    if (artifact.format_version != 1)
      throw KnowledgeError("infusion artifact: " + path + " uses version " +
                           std::to_string(artifact.format_version) +
                           ", this build reads version 1");
    artifact.embedding_width = root.at("embedding_width").get<int>();
    artifact.filters = root.at("filters").get<int>();
    artifact.rho = root.at("rho").get<double>();
    artifact.seed = root.at("seed").get<std::uint64_t>();

    for (const json& entry : root.at("bank")) {
      ClusterEntry e;
      e.window_size = entry.at("window").get<int>();
      e.role = role_from_name(entry.at("role").get<std::string>());
      e.sizes = entry.at("sizes").get<std::vector<int>>();
      for (const json& c : entry.at("centroids"))
        e.centroids.push_back(vector_from_json(c));
      if (e.centroids.size() != e.sizes.size())
        throw KnowledgeError("infusion artifact: centroid and size lists "
                             "disagree for window " +
                             std::to_string(e.window_size));
      artifact.bank.entries.push_back(std::move(e));
    }
    artifact.bank.embedding_width = artifact.embedding_width;

    const json& plan = root.at("plan");
    artifact.plan.rho = plan.at("rho").get<double>();
    artifact.plan.seed = plan.at("seed").get<std::uint64_t>();
    for (const json& w : plan.at("windows")) {
      WindowPlan wp;
      wp.window_size = w.at("window").get<int>();
      wp.filters = w.at("filters").get<int>();
      for (const json& f : w.at("infused")) {
        InfusedFilter inf;
        inf.filter_index = f.at("filter").get<int>();
        inf.role = role_from_name(f.at("role").get<std::string>());
        inf.centroid_index = f.at("centroid").get<int>();
        wp.infused.push_back(inf);
      }
      artifact.plan.windows.push_back(std::move(wp));
    }
  } catch (const json::exception& e) {
    throw KnowledgeError("infusion artifact: " + path +
                         " has an unexpected layout: " + e.what());
  } catch (const CorpusError& e) {
    throw KnowledgeError("infusion artifact: " + path + ": " + e.what());
  }
  return artifact;
}

}  // namespace cetag
