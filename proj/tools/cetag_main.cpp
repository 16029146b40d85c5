////////////////////////////////////////////////////////////////////////////////
// cetag_main.cpp
//
// Command-line front end: stats, mine, train, eval, extract, ablate.
// One JSON config file plus flag overrides drives every run; flags win.
// Exit codes: 0 success, 2 input validation, 3 knowledge pipeline,
// 4 checkpoint or artifact mismatch, 1 unexpected.
////////////////////////////////////////////////////////////////////////////////

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cetag/corpus.hpp"
#include "cetag/encoder.hpp"
#include "cetag/harness.hpp"
#include "cetag/infusion.hpp"
#include "cetag/model.hpp"
#include "cetag/util.hpp"

namespace {

using nlohmann::json;
using namespace cetag;

// A stored artifact or checkpoint that contradicts the active config.
struct MismatchError : Error {
  using Error::Error;
};

////////////////////////////////////////////////////////////////////////////////
// Run configuration: the file's keys and every flag share these fields.

struct RunConfig {
  std::string corpus;      // data file; plain text for extract
  std::string format = "jsonl";
  std::string vectors;     // token-vector file, used when non-empty
  std::string artifact;    // mined artifact to reuse, used when non-empty
  std::string checkpoint;  // model file for eval and extract
  std::string out;         // output file, or directory for train
  double split_train = 0.8;
  double split_dev = 0.1;
  double split_test = 0.1;

  int embedding_width = 64;
  int model_width = 128;
  std::vector<int> windows{1, 2, 3};
  int filters = 100;
  double rho = 0.5;
  int heads = 4;
  int hidden = 128;
  double dropout = 0.5;
  int max_length = 100;

  double learning_rate = 0.0;  // 0: pick by encoder kind
  int batch_size = 8;
  int epochs = 100;
  bool use_pretrained_encoder = true;
  bool use_infusion = true;
  bool use_attention = true;

  double fraction = 0.2;
  double smoothing = 1.0;
  int clusters = -1;  // -1: as many as filters
  std::uint64_t seed = 0;

  ModelConfig model_config() const {
    ModelConfig cfg;
    cfg.embedding_width = embedding_width;
    cfg.model_width = model_width;
    cfg.windows = windows;
    cfg.filters = filters;
    cfg.rho = rho;
    cfg.heads = heads;
    cfg.hidden = hidden;
    cfg.dropout = dropout;
    cfg.max_length = max_length;
    cfg.seed = seed;
    return cfg;
  }

  TrainConfig train_config() const {
    TrainConfig cfg;
    cfg.learning_rate = learning_rate > 0.0 ? learning_rate
                        : use_pretrained_encoder
                            ? TrainConfig().learning_rate
                            : TrainConfig::trainable_rate();
    cfg.batch_size = batch_size;
    cfg.epochs = epochs;
    cfg.dropout = dropout;
    cfg.max_length = max_length;
    cfg.seed = seed;
    cfg.use_pretrained_encoder = use_pretrained_encoder;
    cfg.use_infusion = use_infusion;
    cfg.use_attention = use_attention;
    return cfg;
  }

  MiningConfig mining_config() const {
    MiningConfig cfg;
    cfg.windows = windows;
    cfg.fraction = fraction;
    cfg.smoothing = smoothing;
    cfg.clusters = clusters >= 0 ? clusters : filters;
    cfg.filters = filters;
    cfg.rho = rho;
    cfg.seed = seed;
    return cfg;
  }
};

enum class Kind { string, number, integer, unsigned_integer, boolean, int_array };

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::string: return "a string";
    case Kind::number: return "a number";
    case Kind::integer: return "an integer";
    case Kind::unsigned_integer: return "a non-negative integer";
    case Kind::boolean: return "a boolean";
    case Kind::int_array: return "an array of integers";
  }
  return "";
}

bool matches(const json& v, Kind k) {
  switch (k) {
    case Kind::string: return v.is_string();
    case Kind::number: return v.is_number();
    case Kind::integer: return v.is_number_integer();
    case Kind::unsigned_integer: return v.is_number_unsigned();
    case Kind::boolean: return v.is_boolean();
    case Kind::int_array:
      if (!v.is_array()) return false;
      for (const auto& e : v)
        if (!e.is_number_integer()) return false;
      return true;
  }
  return false;
}

// Every offending key is collected before failing so one pass over the
// diagnostics fixes the whole file.
RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError({"config file '" + path + "' is not valid JSON: " + e.what()});
  }
  if (!doc.is_object())
    throw ConfigError({"config file '" + path + "' must hold a JSON object"});

  struct Key {
    const char* name;
    Kind kind;
  };
  static const Key schema[] = {
      {"corpus", Kind::string},        {"format", Kind::string},
      {"vectors", Kind::string},       {"artifact", Kind::string},
      {"checkpoint", Kind::string},    {"out", Kind::string},
      {"split_train", Kind::number},   {"split_dev", Kind::number},
      {"split_test", Kind::number},    {"embedding_width", Kind::integer},
      {"model_width", Kind::integer},  {"windows", Kind::int_array},
      {"filters", Kind::integer},      {"rho", Kind::number},
      {"heads", Kind::integer},        {"hidden", Kind::integer},
      {"dropout", Kind::number},       {"max_length", Kind::integer},
      {"learning_rate", Kind::number}, {"batch_size", Kind::integer},
      {"epochs", Kind::integer},       {"use_pretrained_encoder", Kind::boolean},
      {"use_infusion", Kind::boolean}, {"use_attention", Kind::boolean},
      {"fraction", Kind::number},      {"smoothing", Kind::number},
      {"clusters", Kind::integer},     {"seed", Kind::unsigned_integer},
  };

  std::vector<std::string> issues;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const Key* found = nullptr;
    for (const Key& k : schema)
      if (it.key() == k.name) found = &k;
    if (!found) {
      issues.push_back("unknown key '" + it.key() + "'");
      continue;
    }
    if (!matches(it.value(), found->kind))
      issues.push_back("key '" + it.key() + "' must be " + kind_name(found->kind));
  }
  if (!issues.empty()) throw ConfigError(issues);

  RunConfig rc;
  auto str = [&](const char* k, std::string& out) {
    if (doc.contains(k)) out = doc[k].get<std::string>();
  };
  auto num = [&](const char* k, double& out) {
    if (doc.contains(k)) out = doc[k].get<double>();
  };
  auto intval = [&](const char* k, int& out) {
    if (doc.contains(k)) out = doc[k].get<int>();
  };
  auto boolean = [&](const char* k, bool& out) {
    if (doc.contains(k)) out = doc[k].get<bool>();
  };
  str("corpus", rc.corpus);
  str("format", rc.format);
  str("vectors", rc.vectors);
  str("artifact", rc.artifact);
  str("checkpoint", rc.checkpoint);
  str("out", rc.out);
  num("split_train", rc.split_train);
  num("split_dev", rc.split_dev);
  num("split_test", rc.split_test);
  intval("embedding_width", rc.embedding_width);
  intval("model_width", rc.model_width);
  if (doc.contains("windows")) rc.windows = doc["windows"].get<std::vector<int>>();
  intval("filters", rc.filters);
  num("rho", rc.rho);
  intval("heads", rc.heads);
  intval("hidden", rc.hidden);
  num("dropout", rc.dropout);
  intval("max_length", rc.max_length);
  num("learning_rate", rc.learning_rate);
  intval("batch_size", rc.batch_size);
  intval("epochs", rc.epochs);
  boolean("use_pretrained_encoder", rc.use_pretrained_encoder);
  boolean("use_infusion", rc.use_infusion);
  boolean("use_attention", rc.use_attention);
  num("fraction", rc.fraction);
  num("smoothing", rc.smoothing);
  intval("clusters", rc.clusters);
  if (doc.contains("seed")) rc.seed = doc["seed"].get<std::uint64_t>();
  return rc;
}

////////////////////////////////////////////////////////////////////////////////
// Shared helpers.

std::vector<AnnotatedSentence> load_data(const RunConfig& rc) {
  if (rc.corpus.empty()) throw ConfigError({"a corpus path is required"});
  CorpusFormat fmt = format_from_name(rc.format);
  LoadReport report;
  auto corpus = load_corpus(rc.corpus, fmt, &report);
  for (const auto& r : report.rejected)
    std::cerr << "warning: " << rc.corpus << " line " << r.line << " (" << r.id
              << ") rejected: " << r.reason << "\n";
  return corpus;
}

std::string out_or(const RunConfig& rc, const char* fallback) {
  return rc.out.empty() ? fallback : rc.out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot open '" + path + "' for writing");
  out << content;
}

json span_list_json(const std::vector<Span>& spans, const char* role) {
  json arr = json::array();
  for (const Span& s : spans)
    arr.push_back({{"role", role}, {"start", s.start}, {"end", s.end}});
  return arr;
}

void print_report(const EvalReport& r) {
  std::printf("micro  P %.4f  R %.4f  F1 %.4f\n", r.precision, r.recall, r.f1);
  std::printf("cause  P %.4f  R %.4f  F1 %.4f\n", r.cause.precision,
              r.cause.recall, r.cause.f1);
  std::printf("effect P %.4f  R %.4f  F1 %.4f\n", r.effect.precision,
              r.effect.recall, r.effect.f1);
}

// Mining for a standalone run embeds n-grams with the encoder a training run
// of this config would start from.
std::unique_ptr<Encoder> mining_encoder_for(const RunConfig& rc,
                                            const std::vector<AnnotatedSentence>& corpus) {
  if (!rc.vectors.empty())
    return std::make_unique<PretrainedVectorsEncoder>(rc.vectors, rc.max_length);
  std::vector<std::string> vocab;
  for (const AnnotatedSentence& s : corpus)
    vocab.insert(vocab.end(), s.tokens.begin(), s.tokens.end());
  return std::make_unique<TrainableEmbedder>(vocab, rc.embedding_width,
                                             rc.max_length,
                                             derive_seed(rc.seed, "embedding"));
}

// Loads the optional externally supplied pieces a training run may reuse.
struct LoadedInputs {
  std::optional<TokenVectors> vectors;
  std::optional<InfusionArtifact> artifact;
  MiningConfig mining;
  PrepareInputs view;
};

LoadedInputs gather_inputs(const RunConfig& rc) {
  LoadedInputs li;
  li.mining = rc.mining_config();
  li.view.mining = &li.mining;
  if (!rc.vectors.empty()) {
    li.vectors = PretrainedVectorsEncoder(rc.vectors, rc.max_length).table();
    li.view.vectors = &*li.vectors;
  }
  if (!rc.artifact.empty()) {
    li.artifact = load_infusion_artifact(rc.artifact);
    li.view.artifact = &*li.artifact;
  }
  return li;
}

Tagger prepare_from(const RunConfig& rc, const LoadedInputs& inputs,
                    const std::vector<AnnotatedSentence>& train_split) {
  validate_config(rc.model_config());
  try {
    return prepare_model(rc.model_config(), rc.train_config(), train_split,
                         inputs.view);
  } catch (const ModelError& e) {
    // The config itself validated above, so a ModelError here means the
    // stored artifact does not fit it.
    if (!rc.artifact.empty())
      throw MismatchError("artifact '" + rc.artifact + "': " + e.what());
    throw;
  }
}

////////////////////////////////////////////////////////////////////////////////
// Commands.

int cmd_stats(const RunConfig& rc) {
  auto corpus = load_data(rc);
  CorpusStats stats = compute_stats(corpus);
  std::printf("sentences             %zu\n", corpus.size());
  std::printf("avg sentence length   %.4f\n", stats.avg_sentence_length);
  std::printf("mean causal distance  %.4f\n", stats.mean_causal_distance);
  std::printf("cause length mode     %zu (%.4f)\n", stats.cause_length_mode.length,
              stats.cause_length_mode.proportion);
  std::printf("effect length mode    %zu (%.4f)\n", stats.effect_length_mode.length,
              stats.effect_length_mode.proportion);
  std::printf("avg cause length      %.4f\n", stats.avg_cause_length);
  std::printf("avg effect length     %.4f\n", stats.avg_effect_length);

  json doc{{"schema_version", 1},
           {"sentences", corpus.size()},
           {"avg_sentence_length", stats.avg_sentence_length},
           {"mean_causal_distance", stats.mean_causal_distance},
           {"cause_length_mode",
            {{"length", stats.cause_length_mode.length},
             {"proportion", stats.cause_length_mode.proportion}}},
           {"effect_length_mode",
            {{"length", stats.effect_length_mode.length},
             {"proportion", stats.effect_length_mode.proportion}}},
           {"avg_cause_length", stats.avg_cause_length},
           {"avg_effect_length", stats.avg_effect_length}};
  std::string path = out_or(rc, "stats.json");
  write_text_file(path, doc.dump(1, '\t') + "\n");
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_mine(const RunConfig& rc) {
  auto corpus = load_data(rc);
  std::unique_ptr<Encoder> encoder = mining_encoder_for(rc, corpus);
  MiningConfig mc = rc.mining_config();
  MiningOutcome mined = mine_knowledge(corpus, *encoder, mc);
  for (const SelectionSummary& s : mined.selections)
    std::printf("window %d: %d distinct n-grams, %d cause / %d effect selected\n",
                s.window_size, s.distinct_ngrams, s.cause_selected,
                s.effect_selected);

  InfusionArtifact artifact;
  artifact.embedding_width = encoder->width();
  artifact.filters = mc.filters;
  artifact.rho = mc.rho;
  artifact.seed = mc.seed;
  artifact.bank = std::move(mined.bank);
  artifact.plan = std::move(mined.plan);
  std::string path = out_or(rc, "artifact.json");
  save_infusion_artifact(path, artifact);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_train(const RunConfig& rc) {
  auto corpus = load_data(rc);
  CorpusSplits splits = split_corpus(
      corpus, SplitRatios{rc.split_train, rc.split_dev, rc.split_test}, rc.seed);
  LoadedInputs inputs = gather_inputs(rc);
  Tagger model = prepare_from(rc, inputs, splits.train);

  TrainConfig tc = rc.train_config();
  TrainResult result = train(std::move(model), splits, tc, &std::cout);

  namespace fs = std::filesystem;
  fs::path dir = rc.out.empty() ? fs::path(".") : fs::path(rc.out);
  fs::create_directories(dir);
  std::string ckpt = (dir / "checkpoint.json").string();
  result.model.save(ckpt);
  write_convergence_csv((dir / "convergence.csv").string(), result.convergence);
  if (result.best_epoch > 0)
    write_eval_report_json(
        (dir / "dev_report.json").string(),
        result.dev_reports[static_cast<std::size_t>(result.best_epoch) - 1]);
  auto test_data = truncate_overlong(splits.test, tc.max_length, &std::cerr);
  EvalReport test = evaluate(result.model, test_data);
  write_eval_report_json((dir / "test_report.json").string(), test);

  std::printf("best epoch %d, dev F1 %.4f\n", result.best_epoch,
              result.best_dev_f1);
  std::printf("test ");
  print_report(test);
  std::printf("wrote %s\n", ckpt.c_str());
  return 0;
}

int cmd_eval(const RunConfig& rc) {
  if (rc.checkpoint.empty()) throw ConfigError({"a checkpoint path is required"});
  Tagger model = Tagger::load(rc.checkpoint);
  auto corpus = load_data(rc);
  auto data = truncate_overlong(corpus, model.config().max_length, &std::cerr);
  EvalReport report = evaluate(model, data);
  print_report(report);
  std::string path = out_or(rc, "eval.json");
  write_eval_report_json(path, report);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_extract(const RunConfig& rc) {
  if (rc.checkpoint.empty()) throw ConfigError({"a checkpoint path is required"});
  if (rc.corpus.empty()) throw ConfigError({"an input text file is required"});
  Tagger model = Tagger::load(rc.checkpoint);
  std::ifstream in(rc.corpus);
  if (!in) throw CorpusError("cannot open input file '" + rc.corpus + "'");

  std::ostringstream out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t limit = static_cast<std::size_t>(model.config().max_length);
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream words(line);
    std::vector<std::string> tokens;
    std::string w;
    while (words >> w) tokens.push_back(w);
    if (tokens.empty()) continue;
    if (tokens.size() > limit) {
      std::cerr << "warning: line " << line_no << " truncated to " << limit
                << " tokens\n";
      tokens.resize(limit);
    }
    Extraction ex = model.extract(tokens);
    json tags = json::array();
    for (Tag t : ex.tags) tags.push_back(tag_name(t));
    json spans = span_list_json(ex.cause_spans, "cause");
    for (auto& s : span_list_json(ex.effect_spans, "effect")) spans.push_back(s);
    json rec{{"schema_version", 1},
             {"id", "line-" + std::to_string(line_no)},
             {"tokens", tokens},
             {"spans", spans},
             {"tags", tags}};
    out << rec.dump() << "\n";
  }
  std::string path = out_or(rc, "extractions.jsonl");
  write_text_file(path, out.str());
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_ablate(const RunConfig& rc) {
  auto corpus = load_data(rc);
  CorpusSplits splits = split_corpus(
      corpus, SplitRatios{rc.split_train, rc.split_dev, rc.split_test}, rc.seed);
  validate_config(rc.model_config());
  validate_train_config(rc.train_config());
  LoadedInputs inputs = gather_inputs(rc);

  AblationTable table =
      ablate(rc.model_config(), rc.train_config(), splits, inputs.view, &std::cout);
  for (const AblationRow& row : table.rows) {
    if (row.completed)
      std::printf("%-22s dev F1 %.4f  test F1 %.4f (epoch %d)\n",
                  row.name.c_str(), row.dev.f1, row.test.f1, row.best_epoch);
    else
      std::printf("%-22s FAILED: %s\n", row.name.c_str(), row.error.c_str());
  }
  if (!table.complete) std::cerr << "warning: not every variant completed\n";
  std::string path = out_or(rc, "ablation.json");
  write_ablation_json(path, table);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

////////////////////////////////////////////////////////////////////////////////
// Argument wiring.

int run(int argc, char** argv) {
  // The config file is located before CLI11 parses, so its values become the
  // defaults every later flag overrides.
  RunConfig rc;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      rc = load_run_config(argv[i + 1]);
      break;
    }
    if (arg.rfind("--config=", 0) == 0) {
      rc = load_run_config(arg.substr(9));
      break;
    }
  }

  CLI::App app{"cause-effect span tagger"};
  app.require_subcommand(1);
  std::string config_path;  // consumed above; registered so parsing accepts it

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--seed", rc.seed, "root seed for every random stage");
    cmd->add_option("--out", rc.out, "output path");
    cmd->add_option("--format", rc.format, "corpus format: jsonl or conll-tsv");
    return cmd;
  };
  auto add_corpus = [&](CLI::App* cmd, const char* what) {
    cmd->add_option("corpus,--corpus", rc.corpus, what);
  };
  auto add_model_flags = [&](CLI::App* cmd) {
    cmd->add_option("--embedding-width", rc.embedding_width, "embedding width");
    cmd->add_option("--model-width", rc.model_width, "projection width");
    cmd->add_option("--windows", rc.windows, "n-gram window sizes")
        ->delimiter(',');
    cmd->add_option("--filters", rc.filters, "filters per window");
    cmd->add_option("--rho", rc.rho, "infused filter share");
    cmd->add_option("--heads", rc.heads, "attention heads");
    cmd->add_option("--hidden", rc.hidden, "recurrent state width");
    cmd->add_option("--dropout", rc.dropout, "dropout rate");
    cmd->add_option("--max-length", rc.max_length, "sentence length limit");
  };
  auto add_train_flags = [&](CLI::App* cmd) {
    cmd->add_option("--learning-rate", rc.learning_rate,
                    "step size; 0 picks a default by encoder kind");
    cmd->add_option("--batch-size", rc.batch_size, "sentences per step");
    cmd->add_option("--epochs", rc.epochs, "training epochs");
    cmd->add_flag("--use-pretrained-encoder,!--no-pretrained-encoder",
                  rc.use_pretrained_encoder, "encode with fixed token vectors");
    cmd->add_flag("--use-infusion,!--no-infusion", rc.use_infusion,
                  "initialize filters from mined centroids");
    cmd->add_flag("--use-attention,!--no-attention", rc.use_attention,
                  "use the attention layer");
    cmd->add_option("--vectors", rc.vectors, "token-vector file");
    cmd->add_option("--artifact", rc.artifact, "mined artifact file");
    cmd->add_option("--split-train", rc.split_train, "train split share");
    cmd->add_option("--split-dev", rc.split_dev, "dev split share");
    cmd->add_option("--split-test", rc.split_test, "test split share");
  };
  auto add_mining_flags = [&](CLI::App* cmd) {
    cmd->add_option("--fraction", rc.fraction, "share of ranked n-grams kept");
    cmd->add_option("--smoothing", rc.smoothing, "count smoothing");
    cmd->add_option("--clusters", rc.clusters,
                    "clusters per window and role; -1 matches --filters");
  };

  CLI::App* stats = add_common(app.add_subcommand("stats", "corpus statistics"));
  add_corpus(stats, "annotated corpus file");

  CLI::App* mine = add_common(
      app.add_subcommand("mine", "mine n-gram clusters into an artifact"));
  add_corpus(mine, "annotated corpus file");
  add_model_flags(mine);
  add_mining_flags(mine);
  mine->add_option("--vectors", rc.vectors, "token-vector file");

  CLI::App* trainc = add_common(app.add_subcommand("train", "train a model"));
  add_corpus(trainc, "annotated corpus file");
  add_model_flags(trainc);
  add_train_flags(trainc);
  add_mining_flags(trainc);

  CLI::App* evalc =
      add_common(app.add_subcommand("eval", "score a checkpoint on a corpus"));
  add_corpus(evalc, "annotated corpus file");
  evalc->add_option("--checkpoint", rc.checkpoint, "model file");

  CLI::App* extract = add_common(
      app.add_subcommand("extract", "tag plain text, one sentence per line"));
  extract->add_option("input", rc.corpus, "text file, one sentence per line");
  extract->add_option("--checkpoint", rc.checkpoint, "model file");

  CLI::App* ablatec = add_common(
      app.add_subcommand("ablate", "train the full model and each ablation"));
  add_corpus(ablatec, "annotated corpus file");
  add_model_flags(ablatec);
  add_train_flags(ablatec);
  add_mining_flags(ablatec);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the diagnostic
    return 2;
  }

  if (stats->parsed()) return cmd_stats(rc);
  if (mine->parsed()) return cmd_mine(rc);
  if (trainc->parsed()) return cmd_train(rc);
  if (evalc->parsed()) return cmd_eval(rc);
  if (extract->parsed()) return cmd_extract(rc);
  if (ablatec->parsed()) return cmd_ablate(rc);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CorpusError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const TrainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const KnowledgeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const CheckpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const MismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
