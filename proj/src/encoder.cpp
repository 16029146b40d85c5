////////////////////////////////////////////////////////////////////////////////
// encoder.cpp
////////////////////////////////////////////////////////////////////////////////

#include "cetag/encoder.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cetag/util.hpp"

namespace cetag {

Eigen::MatrixXd positional_signal(int len, int width) {
  Eigen::MatrixXd pe(len, width);
  for (int pos = 0; pos < len; ++pos)
    for (int j = 0; j < width; ++j) {
      double rate = std::pow(10000.0, -2.0 * (j / 2) / width);
      double angle = pos * rate;
      pe(pos, j) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  return pe;
}

namespace {

void check_length(const std::vector<std::string>& tokens, int max_length,
                  const char* who) {
  if (tokens.empty()) throw ModelError(std::string(who) + ": empty token list");
  if (static_cast<int>(tokens.size()) > max_length)
    throw ModelError(std::string(who) + ": sentence length " +
                     std::to_string(tokens.size()) + " exceeds the limit of " +
                     std::to_string(max_length));
}

}  // namespace

// ---------------------------------------------------------------------------
// TrainableEmbedder

TrainableEmbedder::TrainableEmbedder(
    const std::vector<std::string>& vocabulary_tokens, int width,
    int max_length, std::uint64_t seed)
    : width_(width), max_length_(max_length) {
  if (width < 1) throw ModelError("embedder: width must be positive");
  if (max_length < 1) throw ModelError("embedder: max length must be positive");

  std::set<std::string> unique(vocabulary_tokens.begin(),
                               vocabulary_tokens.end());
  unique.erase(kUnknown);
  unique.erase(kBegin);
  unique.erase(kEnd);
  vocab_ = {kUnknown, kBegin, kEnd};
  vocab_.insert(vocab_.end(), unique.begin(), unique.end());
  for (std::size_t i = 0; i < vocab_.size(); ++i)
    index_[vocab_[i]] = static_cast<int>(i);

  Rng rng(seed);
  Eigen::MatrixXd init(static_cast<Eigen::Index>(vocab_.size()), width);
  for (Eigen::Index r = 0; r < init.rows(); ++r)
    for (Eigen::Index c = 0; c < init.cols(); ++c)
      init(r, c) = rng.normal() * 0.1;
  embedding_ = ad::Parameter("embedding", std::move(init));
}

int TrainableEmbedder::token_index(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? 0 : it->second;
}

std::vector<int> TrainableEmbedder::padded_ids(
    const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size() + 2);
  ids.push_back(index_.at(kBegin));
  for (const auto& t : tokens) ids.push_back(token_index(t));
  ids.push_back(index_.at(kEnd));
  return ids;
}

Eigen::MatrixXd TrainableEmbedder::encode(
    const std::vector<std::string>& tokens) const {
  check_length(tokens, max_length_, "embedder");
  std::vector<int> ids = padded_ids(tokens);
  int padded = static_cast<int>(ids.size());
  Eigen::MatrixXd h(padded, width_);
  for (int i = 0; i < padded; ++i) h.row(i) = embedding_.value.row(ids[static_cast<std::size_t>(i)]);
  h += positional_signal(padded, width_);
  return h.middleRows(1, padded - 2);
}

ad::NodeId TrainableEmbedder::encode_node(
    ad::Graph& g, const std::vector<std::string>& tokens) {
  check_length(tokens, max_length_, "embedder");
  std::vector<int> ids = padded_ids(tokens);
  int padded = static_cast<int>(ids.size());
  ad::NodeId rows = g.gather_rows(g.param(embedding_), ids);
  ad::NodeId with_pos =
      g.add(rows, g.constant(positional_signal(padded, width_)));
  return g.slice_rows(with_pos, 1, padded - 2);
}

// ---------------------------------------------------------------------------
// PretrainedVectorsEncoder

namespace {

TokenVectors parse_vector_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("pretrained vectors: cannot open " + path);

  int width = 0;
  std::set<std::string> seen;
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> values;
    double v;
    while (fields >> v) values.push_back(v);
    if (values.empty())
      throw ModelError("pretrained vectors: no values on line " +
                       std::to_string(line_no) + " of " + path);
    if (width == 0) width = static_cast<int>(values.size());
    if (static_cast<int>(values.size()) != width)
      throw ModelError("pretrained vectors: line " + std::to_string(line_no) +
                       " of " + path + " has " +
                       std::to_string(values.size()) + " values, expected " +
                       std::to_string(width));
    if (!seen.insert(token).second)
      throw ModelError("pretrained vectors: duplicate token '" + token +
                       "' on line " + std::to_string(line_no) + " of " + path);
    tokens.push_back(token);
    rows.push_back(std::move(values));
  }
  if (rows.empty())
    throw ModelError("pretrained vectors: " + path + " holds no vectors");

  TokenVectors tv;
  tv.tokens = std::move(tokens);
  tv.vectors.resize(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < width; ++c)
      tv.vectors(static_cast<Eigen::Index>(r), c) =
          rows[r][static_cast<std::size_t>(c)];
  return tv;
}

}  // namespace

PretrainedVectorsEncoder::PretrainedVectorsEncoder(const std::string& path,
                                                   int max_length)
    : PretrainedVectorsEncoder(parse_vector_file(path), max_length) {}

PretrainedVectorsEncoder::PretrainedVectorsEncoder(TokenVectors table,
                                                   int max_length)
    : max_length_(max_length) {
  if (max_length < 1)
    throw ModelError("pretrained vectors: max length must be positive");
  if (table.tokens.empty())
    throw ModelError("pretrained vectors: empty table");
  if (static_cast<Eigen::Index>(table.tokens.size()) != table.vectors.rows())
    throw ModelError("pretrained vectors: " +
                     std::to_string(table.tokens.size()) + " tokens but " +
                     std::to_string(table.vectors.rows()) + " vector rows");
  if (table.vectors.cols() < 1)
    throw ModelError("pretrained vectors: zero-width vectors");

  width_ = static_cast<int>(table.vectors.cols());
  tokens_ = std::move(table.tokens);
  table_ = std::move(table.vectors);
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second)
      throw ModelError("pretrained vectors: duplicate token '" + tokens_[i] +
                       "'");
  mean_ = table_.colwise().mean();
}

TokenVectors PretrainedVectorsEncoder::table() const {
  TokenVectors tv;
  tv.tokens = tokens_;
  tv.vectors = table_;
  return tv;
}

Eigen::MatrixXd PretrainedVectorsEncoder::encode(
    const std::vector<std::string>& tokens) const {
  check_length(tokens, max_length_, "pretrained adapter");
  int padded = static_cast<int>(tokens.size()) + 2;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(padded, width_);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto it = index_.find(tokens[i]);
    h.row(static_cast<Eigen::Index>(i) + 1) =
        it == index_.end() ? mean_ : table_.row(it->second);
  }
  h += positional_signal(padded, width_);
  return h.middleRows(1, padded - 2);
}

ad::NodeId PretrainedVectorsEncoder::encode_node(
    ad::Graph& g, const std::vector<std::string>& tokens) {
  return g.constant(encode(tokens));
}

// ---------------------------------------------------------------------------
// PPMI + SVD pretraining

TokenVectors ppmi_svd_vectors(const std::vector<std::vector<std::string>>& texts,
                              int dim, int window) {
  if (dim < 1) throw ModelError("ppmi_svd_vectors: dim must be positive");
  if (window < 1) throw ModelError("ppmi_svd_vectors: window must be positive");

  std::set<std::string> unique;
  for (const auto& text : texts) unique.insert(text.begin(), text.end());
  std::vector<std::string> vocab(unique.begin(), unique.end());
  if (static_cast<int>(vocab.size()) < dim)
    throw ModelError("ppmi_svd_vectors: " + std::to_string(vocab.size()) +
                     " distinct tokens cannot fill " + std::to_string(dim) +
                     " dimensions");
  std::map<std::string, int> idx;
  for (std::size_t i = 0; i < vocab.size(); ++i) idx[vocab[i]] = static_cast<int>(i);

  Eigen::Index V = static_cast<Eigen::Index>(vocab.size());
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(V, V);
  for (const auto& text : texts)
    for (std::size_t i = 0; i < text.size(); ++i)
      for (int off = 1; off <= window; ++off) {
        if (i + static_cast<std::size_t>(off) >= text.size()) break;
        int a = idx[text[i]];
        int b = idx[text[i + static_cast<std::size_t>(off)]];
        counts(a, b) += 1.0;
        counts(b, a) += 1.0;
      }

  double total = counts.sum();
  if (total == 0.0)
    throw ModelError("ppmi_svd_vectors: no co-occurrences in the input text");
  Eigen::VectorXd marginals = counts.rowwise().sum();
  Eigen::MatrixXd ppmi = Eigen::MatrixXd::Zero(V, V);
  for (Eigen::Index i = 0; i < V; ++i)
    for (Eigen::Index j = 0; j < V; ++j) {
      if (counts(i, j) == 0.0) continue;
      double pmi =
          std::log(counts(i, j) * total / (marginals(i) * marginals(j)));
      if (pmi > 0.0) ppmi(i, j) = pmi;
    }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(ppmi, Eigen::ComputeThinU);
  Eigen::VectorXd scale =
      svd.singularValues().head(dim).array().sqrt().matrix();
  TokenVectors tv;
  tv.tokens = std::move(vocab);
  tv.vectors = svd.matrixU().leftCols(dim) * scale.asDiagonal();
  return tv;
}

void save_token_vectors(const std::string& path, const TokenVectors& tv) {
  std::ofstream out(path);
  if (!out) throw ModelError("save_token_vectors: cannot write " + path);
  char buf[64];
  for (std::size_t i = 0; i < tv.tokens.size(); ++i) {
    out << tv.tokens[i];
    for (Eigen::Index c = 0; c < tv.vectors.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g",
                    tv.vectors(static_cast<Eigen::Index>(i), c));
      out << ' ' << buf;
    }
    out << '\n';
  }
  if (!out) throw ModelError("save_token_vectors: write failed for " + path);
}

}  // namespace cetag
