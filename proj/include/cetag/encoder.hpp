////////////////////////////////////////////////////////////////////////////////
// encoder.hpp
//
// Token encoders producing one row per input token. Both implementations pad
// the sequence with begin/end markers internally and strip them before
// returning, so position signals count from the marker at index 0.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "cetag/autodiff.hpp"

namespace cetag {

enum class EncoderMode { inference, training };

// Sinusoidal position signal, rows 0..len-1. Even columns sine, odd cosine.
Eigen::MatrixXd positional_signal(int len, int width);

class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual int width() const = 0;
  virtual int max_length() const = 0;
  virtual std::string id() const = 0;

  // Inference path: deterministic l x width matrix.
  virtual Eigen::MatrixXd encode(const std::vector<std::string>& tokens) const = 0;
  // Training path: same values as encode(), wired into the tape so gradients
  // reach any trainable table.
  virtual ad::NodeId encode_node(ad::Graph& g,
                                 const std::vector<std::string>& tokens) = 0;
  virtual std::vector<ad::Parameter*> parameters() = 0;

  EncoderMode mode() const { return mode_; }
  void set_mode(EncoderMode m) { mode_ = m; }

 private:
  EncoderMode mode_ = EncoderMode::inference;
};

// Learned embedding table over a fixed vocabulary. Index 0 is the unknown
// symbol; begin/end markers hold indices 1 and 2; real tokens follow in
// sorted order.
class TrainableEmbedder : public Encoder {
 public:
  // vocabulary_tokens may contain duplicates; they are deduplicated and
  // sorted. seed drives the table initialization.
  TrainableEmbedder(const std::vector<std::string>& vocabulary_tokens,
                    int width, int max_length, std::uint64_t seed);

  int width() const override { return width_; }
  int max_length() const override { return max_length_; }
  std::string id() const override { return "trainable-embedder"; }
  Eigen::MatrixXd encode(const std::vector<std::string>& tokens) const override;
  ad::NodeId encode_node(ad::Graph& g,
                         const std::vector<std::string>& tokens) override;
  std::vector<ad::Parameter*> parameters() override { return {&embedding_}; }

  // 0 when the token is out of vocabulary.
  int token_index(const std::string& token) const;
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  ad::Parameter& embedding() { return embedding_; }

  static constexpr const char* kUnknown = "<unk>";
  static constexpr const char* kBegin = "<bos>";
  static constexpr const char* kEnd = "<eos>";

 private:
  std::vector<int> padded_ids(const std::vector<std::string>& tokens) const;

  int width_;
  int max_length_;
  std::vector<std::string> vocab_;
  std::map<std::string, int> index_;
  ad::Parameter embedding_;
};

struct TokenVectors;

// Frozen lookup over an externally produced token->vector table in the
// common text format: one line per token, fields separated by spaces, the
// first field the token. Out-of-table tokens read as the table mean.
class PretrainedVectorsEncoder : public Encoder {
 public:
  PretrainedVectorsEncoder(const std::string& path, int max_length);
  // Table handed over directly, bypassing the file format. Checkpoints use
  // this path so a saved model does not depend on the original vectors file.
  PretrainedVectorsEncoder(TokenVectors table, int max_length);

  int width() const override { return width_; }
  int max_length() const override { return max_length_; }
  std::string id() const override { return "pretrained-adapter"; }
  Eigen::MatrixXd encode(const std::vector<std::string>& tokens) const override;
  ad::NodeId encode_node(ad::Graph& g,
                         const std::vector<std::string>& tokens) override;
  std::vector<ad::Parameter*> parameters() override { return {}; }

  int table_size() const { return static_cast<int>(table_.rows()); }
  // Tokens in row order with their vectors; rebuilding from this reproduces
  // the encoder exactly.
  TokenVectors table() const;

 private:
  int width_ = 0;
  int max_length_;
  std::vector<std::string> tokens_;
  Eigen::MatrixXd table_;
  std::map<std::string, int> index_;
  Eigen::RowVectorXd mean_;
};

// ---------------------------------------------------------------------------
// Desk-scale vector pretraining: positive pointwise mutual information over a
// symmetric co-occurrence window, factored by SVD. Produces a table the
// PretrainedVectorsEncoder can consume, so runs exercising the frozen-encoder
// path have vectors that actually reflect the unlabeled text.

struct TokenVectors {
  std::vector<std::string> tokens;
  Eigen::MatrixXd vectors;  // one row per token
};

TokenVectors ppmi_svd_vectors(const std::vector<std::vector<std::string>>& texts,
                              int dim, int window);

void save_token_vectors(const std::string& path, const TokenVectors& tv);

}  // namespace cetag
