////////////////////////////////////////////////////////////////////////////////
// layers.hpp
//
// Graph-building blocks of the tagger. Each block owns its Parameters and
// exposes a build function that wires one sentence's nodes into a Graph.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cetag/autodiff.hpp"

namespace cetag {

enum class Nonlinearity { relu, identity, sigmoid, tanh };

// Dense projection: X * w + b.
struct LinearParams {
  ad::Parameter w;  // in x out
  ad::Parameter b;  // 1 x out

  static LinearParams random(int in, int out, std::uint64_t seed,
                             const std::string& name);
  std::vector<ad::Parameter*> parameters() { return {&w, &b}; }
};

ad::NodeId linear(ad::Graph& g, LinearParams& p, ad::NodeId x);

// Parallel same-length convolutions over several window sizes. Kernel columns
// hold flattened n x e patches, offset-major: entry (off * e + c, f) weights
// input channel c at window offset off for filter f. Output column block w
// holds window w's F filter responses.
struct ConvParams {
  std::vector<int> windows;
  int filters = 0;      // F, per window
  int input_width = 0;  // e
  Nonlinearity activation = Nonlinearity::relu;
  std::vector<ad::Parameter> kernels;  // per window: (n*e) x F
  std::vector<ad::Parameter> biases;   // per window: 1 x F

  static ConvParams random(const std::vector<int>& windows, int filters,
                           int input_width, std::uint64_t seed);
  int output_width() const {
    return filters * static_cast<int>(windows.size());
  }
  std::vector<ad::Parameter*> parameters();
};

// H is l x e; the result is l x (F * |windows|). Padding keeps the length:
// (n-1)/2 zero rows above, the rest below, so even windows lean right.
ad::NodeId multiscale_conv(ad::Graph& g, ConvParams& p, ad::NodeId h);

// Multi-head scaled dot-product self-attention. Head i reads column block i
// of the d x d query/key/value projections, scores with 1/sqrt(d/h), and the
// concatenated heads pass through the d x d output projection.
struct AttentionParams {
  int width = 0;  // d
  int heads = 0;  // h, must divide d
  ad::Parameter wq, wk, wv, wo;

  static AttentionParams random(int width, int heads, std::uint64_t seed);
  std::vector<ad::Parameter*> parameters() { return {&wq, &wk, &wv, &wo}; }
};

// X is l x d. attention_rows, when given, collects each head's softmax node
// so callers can inspect the weights.
ad::NodeId multihead_attention(ad::Graph& g, AttentionParams& p, ad::NodeId x,
                               std::vector<ad::NodeId>* attention_rows = nullptr);

// Row-wise concatenation of the conv path and the attention path.
ad::NodeId fuse(ad::Graph& g, ad::NodeId conv_out, ad::NodeId attention_out);

// Bidirectional LSTM, one layer each way, outputs concatenated per position.
// Gate blocks in the 4H axis are ordered input, forget, output, candidate;
// forget biases start at one.
struct LstmParams {
  int input_width = 0;
  int hidden = 0;
  ad::Parameter fwd_wx, fwd_wh, fwd_b;
  ad::Parameter bwd_wx, bwd_wh, bwd_b;

  static LstmParams random(int input_width, int hidden, std::uint64_t seed);
  std::vector<ad::Parameter*> parameters() {
    return {&fwd_wx, &fwd_wh, &fwd_b, &bwd_wx, &bwd_wh, &bwd_b};
  }
};

// Z is l x input_width; the result is l x 2*hidden, forward states in the
// left half.
ad::NodeId bilstm(ad::Graph& g, LstmParams& p, ad::NodeId z);

}  // namespace cetag
