////////////////////////////////////////////////////////////////////////////////
// test_model.cpp
////////////////////////////////////////////////////////////////////////////////

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <functional>
#include <limits>
#include <set>

#include "cetag/model.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace cetag;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.embedding_width = 4;
  cfg.model_width = 6;
  cfg.windows = {1, 2};
  cfg.filters = 3;
  cfg.rho = 0.5;
  cfg.heads = 2;
  cfg.hidden = 3;
  cfg.dropout = 0.5;
  cfg.max_length = 16;
  cfg.seed = 3;
  return cfg;
}

std::vector<std::string> small_vocab() {
  return {"storm", "rain", "flood", "wind", "damage", "causes", "the", "a"};
}

AnnotatedSentence sentence(const std::string& id,
                           std::vector<std::string> tokens, Span cause,
                           Span effect) {
  AnnotatedSentence s;
  s.id = id;
  s.tokens = std::move(tokens);
  s.cause_spans.push_back(cause);
  s.effect_spans.push_back(effect);
  return s;
}

std::vector<AnnotatedSentence> small_batch() {
  return {
      sentence("s0", {"heavy", "rain", "causes", "the", "flood"}, {0, 2},
               {3, 5}),
      sentence("s1", {"wind", "causes", "damage"}, {0, 1}, {2, 3}),
  };
}

// Bank with one arbitrary nonzero centroid per (window, role); enough for a
// rho that needs one cause and one effect filter per window.
ClusterBank toy_bank(const std::vector<int>& windows, int e) {
  ClusterBank bank;
  bank.embedding_width = e;
  Rng rng(41);
  for (int w : windows)
    for (Role role : {Role::cause, Role::effect}) {
      ClusterEntry entry;
      entry.window_size = w;
      entry.role = role;
      Eigen::VectorXd c(w * e);
      for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = rng.normal();
      entry.centroids.push_back(c);
      entry.sizes.push_back(5);
      bank.entries.push_back(std::move(entry));
    }
  return bank;
}

InfusionArtifact toy_artifact(const ModelConfig& cfg) {
  InfusionArtifact artifact;
  artifact.embedding_width = cfg.embedding_width;
  artifact.filters = cfg.filters;
  artifact.rho = cfg.rho;
  artifact.seed = 77;
  artifact.bank = toy_bank(cfg.windows, cfg.embedding_width);
  artifact.plan = build_filter_init(artifact.bank, cfg.filters, cfg.rho, 77);
  return artifact;
}

bool bitwise_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return (a.array() == b.array()).all();
}

}  // namespace

TEST_CASE("config validation names every violation at once") {
  ModelConfig cfg = small_config();
  cfg.embedding_width = 0;
  cfg.dropout = 1.0;
  cfg.heads = 4;  // does not divide model_width 6
  cfg.rho = 1.5;
  cfg.windows = {2, 1};
  try {
    validate_config(cfg);
    FAIL("expected a ModelError");
  } catch (const ModelError& e) {
    std::string msg = e.what();
    CHECK(msg.find("embedding width") != std::string::npos);
    CHECK(msg.find("dropout") != std::string::npos);
    CHECK(msg.find("divide") != std::string::npos);
    CHECK(msg.find("rho") != std::string::npos);
    CHECK(msg.find("increasing") != std::string::npos);
  }
  CHECK_NOTHROW(validate_config(small_config()));
  CHECK_NOTHROW(validate_config(ModelConfig{}));
}

TEST_CASE("emissions carry one score row per token") {
  Tagger t(small_config(), true, small_vocab());
  Eigen::MatrixXd p = t.emissions({"storm", "causes", "the", "flood"});
  CHECK(p.rows() == 4);
  CHECK(p.cols() == kTagCount);
  CHECK(p.allFinite());

  Eigen::MatrixXd single = t.emissions({"storm"});
  CHECK(single.rows() == 1);
  CHECK(single.cols() == kTagCount);

  Tagger plain(small_config(), false, small_vocab());
  Eigen::MatrixXd q = plain.emissions({"storm", "causes", "the", "flood"});
  CHECK(q.rows() == 4);
  CHECK(q.cols() == kTagCount);

  std::vector<std::string> over(17, "rain");
  CHECK_THROWS_AS(t.emissions(over), ModelError);
  CHECK_THROWS_AS(t.emissions({}), ModelError);
}

TEST_CASE("attention flag decides which parameters exist") {
  Tagger with(small_config(), true, small_vocab());
  Tagger without(small_config(), false, small_vocab());
  auto names = [](Tagger& t) {
    std::set<std::string> out;
    for (ad::Parameter* p : t.parameters()) out.insert(p->name);
    return out;
  };
  std::set<std::string> w = names(with);
  std::set<std::string> wo = names(without);
  CHECK(w.count("attn.wq") == 1);
  CHECK(wo.count("attn.wq") == 0);
  CHECK(w.count("embedding") == 1);
  CHECK(w.count("crf.transitions") == 1);
  CHECK(w.count("conv.n2.kernel") == 1);
  // The recurrent input is twice as wide when attention is fused in.
  CHECK(with.parameters().size() == without.parameters().size() + 4);
}

TEST_CASE("inference repeats, dropout does not") {
  Tagger t(small_config(), true, small_vocab());
  std::vector<std::string> tokens{"rain", "causes", "flood"};
  CHECK(bitwise_equal(t.emissions(tokens), t.emissions(tokens)));

  auto batch = small_batch();
  auto loss_with = [&](Rng* rng) {
    ad::Graph g;
    return g.value(t.loss_node(g, batch, rng))(0, 0);
  };
  double plain = loss_with(nullptr);
  CHECK(plain >= 0.0);
  CHECK(std::isfinite(plain));
  CHECK(loss_with(nullptr) == plain);

  Rng a1(7), a2(7), b(8);
  double da1 = loss_with(&a1);
  CHECK(loss_with(&a2) == da1);
  CHECK(loss_with(&b) != da1);
}

TEST_CASE("extraction is total on arbitrary input") {
  Tagger t(small_config(), true, small_vocab());
  Rng rng(99);
  std::vector<std::string> pool{"storm", "rain",    "flood", "unseen",
                                "words", "another", "x"};
  for (int trial = 0; trial < 25; ++trial) {
    std::size_t l = 1 + rng.bounded(10);
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < l; ++i)
      tokens.push_back(pool[rng.bounded(pool.size())]);
    Extraction ex = t.extract(tokens);
    CHECK(ex.tags.size() == l);
    for (const Span& s : ex.cause_spans) {
      CHECK(s.start < s.end);
      CHECK(s.end <= l);
    }
    for (const Span& s : ex.effect_spans) {
      CHECK(s.start < s.end);
      CHECK(s.end <= l);
    }
  }

  std::vector<std::string> tokens{"storm", "words", "flood", "flood"};
  Extraction first = t.extract(tokens);
  Extraction second = t.extract(tokens);
  CHECK(first.tags == second.tags);
  CHECK(first.cause_spans == second.cause_spans);
  CHECK(first.effect_spans == second.effect_spans);

  ViterbiPath v = t.decode(tokens);
  CHECK(v.score == crf_score(t.transitions().value, t.emissions(tokens),
                             v.path));
}

TEST_CASE("backward reaches every parameter with finite gradients") {
  Tagger t(small_config(), true, small_vocab());
  auto batch = small_batch();
  for (ad::Parameter* p : t.parameters()) p->zero_grad();
  ad::Graph g;
  g.backward(t.loss_node(g, batch, nullptr));
  for (ad::Parameter* p : t.parameters()) {
    INFO(p->name);
    CHECK(p->grad.rows() == p->value.rows());
    CHECK(p->grad.cols() == p->value.cols());
    CHECK(p->grad.allFinite());
  }
  // The layers the loss flows through all see nonzero signal.
  for (ad::Parameter* p : t.parameters()) {
    if (p->name == "embedding" || p->name == "crf.transitions") continue;
    INFO(p->name);
    CHECK(p->grad.cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("analytic gradients match finite differences end to end") {
  ModelConfig cfg = small_config();
  Tagger t(cfg, true, small_vocab());
  t.infuse(toy_artifact(cfg), false);
  auto batch = small_batch();

  auto loss_value = [&]() {
    ad::Graph g;
    return g.value(t.loss_node(g, batch, nullptr))(0, 0);
  };

  std::set<std::string> checked{"conv.n1.kernel", "conv.n2.kernel",
                                "embedding",      "attn.wq",
                                "lstm.fwd.wx",    "emit.w",
                                "crf.transitions"};
  for (ad::Parameter* p : t.parameters()) {
    if (!checked.count(p->name)) continue;
    for (ad::Parameter* q : t.parameters()) q->zero_grad();
    {
      ad::Graph g;
      g.backward(t.loss_node(g, batch, nullptr));
    }
    Eigen::MatrixXd analytic = p->grad;
    Eigen::MatrixXd fd = oracle::finite_difference(p->value, loss_value, 1e-4);
    INFO(p->name);
    CHECK(oracle::gradient_rel_error(analytic, fd) <= 1e-3);
    // The infused leading kernel column is trainable and carries signal.
    if (p->name == "conv.n1.kernel")
      CHECK(analytic.col(0).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("infusion rewrites kernels and records the plan") {
  ModelConfig cfg = small_config();
  InfusionArtifact artifact = toy_artifact(cfg);

  Tagger t(cfg, true, small_vocab());
  CHECK(t.plan_hash().empty());
  t.infuse(artifact, false);
  CHECK(t.plan_hash() == plan_reference_hash(artifact.plan));
  CHECK(t.conv().kernels[0].frozen_cols == 0);

  for (std::size_t w = 0; w < artifact.plan.windows.size(); ++w)
    for (const InfusedFilter& f : artifact.plan.windows[w].infused) {
      const ClusterEntry* entry =
          artifact.bank.find(artifact.plan.windows[w].window_size, f.role);
      REQUIRE(entry != nullptr);
      Eigen::VectorXd kernel = t.conv().kernels[w].value.col(f.filter_index);
      const Eigen::VectorXd& centroid =
          entry->centroids[static_cast<std::size_t>(f.centroid_index)];
      double cos = kernel.dot(centroid) / (kernel.norm() * centroid.norm());
      CHECK(cos == doctest::Approx(1.0).epsilon(1e-6));
    }

  Tagger frozen(cfg, true, small_vocab());
  frozen.infuse(artifact, true);
  CHECK(frozen.conv().kernels[0].frozen_cols == 2);
  CHECK(frozen.conv().kernels[1].frozen_cols == 2);

  InfusionArtifact wrong_width = artifact;
  wrong_width.embedding_width = 5;
  Tagger u(cfg, true, small_vocab());
  CHECK_THROWS_AS(u.infuse(wrong_width, false), ModelError);

  InfusionArtifact wrong_windows = artifact;
  wrong_windows.plan.windows[1].window_size = 3;
  CHECK_THROWS_AS(u.infuse(wrong_windows, false), ModelError);

  InfusionArtifact wrong_filters = artifact;
  wrong_filters.plan.windows[0].filters = 9;
  CHECK_THROWS_AS(u.infuse(wrong_filters, false), ModelError);
}

TEST_CASE("checkpoints reproduce the model bit for bit") {
  ModelConfig cfg = small_config();
  Tagger t(cfg, true, small_vocab());
  t.infuse(toy_artifact(cfg), true);

  std::vector<std::string> tokens{"storm", "causes", "flood", "later"};
  Eigen::MatrixXd before = t.emissions(tokens);
  ViterbiPath path_before = t.decode(tokens);

  std::string path = testsup::tmp_path("model_roundtrip.json");
  t.save(path);
  Tagger loaded = Tagger::load(path);

  CHECK(loaded.config().embedding_width == cfg.embedding_width);
  CHECK(loaded.config().windows == cfg.windows);
  CHECK(loaded.config().seed == cfg.seed);
  CHECK(loaded.use_attention());
  CHECK(loaded.plan_hash() == t.plan_hash());
  CHECK(loaded.conv().kernels[0].frozen_cols == 2);

  auto originals = t.parameters();
  auto restored = loaded.parameters();
  REQUIRE(originals.size() == restored.size());
  for (std::size_t i = 0; i < originals.size(); ++i) {
    INFO(originals[i]->name);
    CHECK(originals[i]->name == restored[i]->name);
    CHECK(bitwise_equal(originals[i]->value, restored[i]->value));
  }

  Eigen::MatrixXd after = loaded.emissions(tokens);
  CHECK(bitwise_equal(before, after));
  ViterbiPath path_after = loaded.decode(tokens);
  CHECK(path_before.path == path_after.path);
  CHECK(path_before.score == path_after.score);

  // The transition mask survives the trip.
  int start = crf_start_state(kTagCount);
  int stop = crf_stop_state(kTagCount);
  for (int i = 0; i < kTagCount + 2; ++i) {
    CHECK(loaded.transitions().value(i, start) ==
          -std::numeric_limits<double>::infinity());
    CHECK(loaded.transitions().value(stop, i) ==
          -std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("pretrained checkpoints carry their vector table") {
  ModelConfig cfg = small_config();
  TokenVectors tv;
  tv.tokens = {"storm", "rain", "flood", "wind", "causes"};
  Rng rng(15);
  tv.vectors.resize(5, cfg.embedding_width);
  for (Eigen::Index r = 0; r < tv.vectors.rows(); ++r)
    for (Eigen::Index c = 0; c < tv.vectors.cols(); ++c)
      tv.vectors(r, c) = rng.normal();

  Tagger t(cfg, false, tv);
  std::vector<std::string> tokens{"rain", "causes", "mystery"};
  Eigen::MatrixXd before = t.emissions(tokens);

  std::string path = testsup::tmp_path("model_pretrained.json");
  t.save(path);
  Tagger loaded = Tagger::load(path);
  CHECK(loaded.encoder().id() == "pretrained-adapter");
  CHECK_FALSE(loaded.use_attention());
  CHECK(bitwise_equal(before, loaded.emissions(tokens)));

  TokenVectors narrow = tv;
  narrow.vectors = tv.vectors.leftCols(3);
  CHECK_THROWS_AS(Tagger(cfg, true, narrow), ModelError);
}

TEST_CASE("checkpoint loading rejects damage") {
  CHECK_THROWS_AS(Tagger::load("/no/such/checkpoint.json"), CheckpointError);

  std::string garbled = testsup::tmp_path("ckpt_garbled.json");
  testsup::write_file(garbled, "try me");
  CHECK_THROWS_AS(Tagger::load(garbled), CheckpointError);

  ModelConfig cfg = small_config();
  Tagger t(cfg, true, small_vocab());
  std::string good = testsup::tmp_path("ckpt_good.json");
  t.save(good);

  auto mutate = [&](const std::string& name,
                    const std::function<void(nlohmann::json&)>& fn) {
    std::ifstream in(good);
    nlohmann::json doc;
    in >> doc;
    fn(doc);
    std::string path = testsup::tmp_path(name);
    std::ofstream out(path);
    out << doc.dump();
    return path;
  };

  std::string versioned = mutate("ckpt_version.json", [](nlohmann::json& d) {
    d["format_version"] = 2;
  });
  CHECK_THROWS_AS(Tagger::load(versioned), CheckpointError);

  std::string missing = mutate("ckpt_missing.json", [](nlohmann::json& d) {
    d["parameters"].erase("emit.w");
  });
  try {
    Tagger::load(missing);
    FAIL("expected a CheckpointError");
  } catch (const CheckpointError& e) {
    CHECK(std::string(e.what()).find("emit.w") != std::string::npos);
  }

  std::string reshaped = mutate("ckpt_reshaped.json", [](nlohmann::json& d) {
    d["parameters"]["emit.b"] = {{1.0, 2.0}};
  });
  CHECK_THROWS_AS(Tagger::load(reshaped), CheckpointError);

  std::string extra = mutate("ckpt_extra.json", [](nlohmann::json& d) {
    d["parameters"]["bogus"] = {{0.0}};
  });
  try {
    Tagger::load(extra);
    FAIL("expected a CheckpointError");
  } catch (const CheckpointError& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }

  std::string odd_encoder = mutate("ckpt_encoder.json", [](nlohmann::json& d) {
    d["encoder"]["kind"] = "quantum";
  });
  CHECK_THROWS_AS(Tagger::load(odd_encoder), CheckpointError);
}
