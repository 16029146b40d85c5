////////////////////////////////////////////////////////////////////////////////
// layers.cpp
////////////////////////////////////////////////////////////////////////////////

#include "cetag/layers.hpp"

#include <cmath>

#include "cetag/util.hpp"

namespace cetag {

namespace {

Eigen::MatrixXd scaled_normal(Rng& rng, int rows, int cols, double stddev) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal() * stddev;
  return m;
}

ad::NodeId apply_activation(ad::Graph& g, Nonlinearity f, ad::NodeId x) {
  switch (f) {
    case Nonlinearity::relu: return g.relu(x);
    case Nonlinearity::identity: return x;
    case Nonlinearity::sigmoid: return g.sigmoid(x);
    case Nonlinearity::tanh: return g.tanh(x);
  }
  throw ModelError("unknown nonlinearity selector");
}

}  // namespace

// ---------------------------------------------------------------------------
// Linear

LinearParams LinearParams::random(int in, int out, std::uint64_t seed,
                                  const std::string& name) {
  if (in < 1 || out < 1)
    throw ModelError("linear " + name + ": degenerate shape " +
                     std::to_string(in) + "x" + std::to_string(out));
  Rng rng(seed);
  LinearParams p;
  p.w = ad::Parameter(name + ".w",
                      scaled_normal(rng, in, out, 1.0 / std::sqrt(in)));
  p.b = ad::Parameter(name + ".b", Eigen::MatrixXd::Zero(1, out));
  return p;
}

ad::NodeId linear(ad::Graph& g, LinearParams& p, ad::NodeId x) {
  return g.add_rowvec(g.matmul(x, g.param(p.w)), g.param(p.b));
}

// ---------------------------------------------------------------------------
// Convolution

ConvParams ConvParams::random(const std::vector<int>& windows, int filters,
                              int input_width, std::uint64_t seed) {
  if (windows.empty()) throw ModelError("conv: no window sizes");
  for (int n : windows)
    if (n < 1) throw ModelError("conv: window size " + std::to_string(n));
  if (filters < 1 || input_width < 1)
    throw ModelError("conv: need at least one filter and one input channel");

  ConvParams p;
  p.windows = windows;
  p.filters = filters;
  p.input_width = input_width;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    int n = windows[w];
    Rng rng(derive_seed(seed, "conv-window", w));
    std::string tag = "conv.n" + std::to_string(n);
    p.kernels.emplace_back(
        tag + ".kernel",
        scaled_normal(rng, n * input_width, filters,
                      1.0 / std::sqrt(n * input_width)));
    p.biases.emplace_back(tag + ".bias", Eigen::MatrixXd::Zero(1, filters));
  }
  return p;
}

std::vector<ad::Parameter*> ConvParams::parameters() {
  std::vector<ad::Parameter*> out;
  for (std::size_t w = 0; w < kernels.size(); ++w) {
    out.push_back(&kernels[w]);
    out.push_back(&biases[w]);
  }
  return out;
}

ad::NodeId multiscale_conv(ad::Graph& g, ConvParams& p, ad::NodeId h) {
  int l = static_cast<int>(g.value(h).rows());
  int e = static_cast<int>(g.value(h).cols());
  if (e != p.input_width)
    throw ModelError("conv: input width " + std::to_string(e) +
                     " does not match the configured " +
                     std::to_string(p.input_width));
  if (l < 1) throw ModelError("conv: empty input");

  std::vector<ad::NodeId> blocks;
  for (std::size_t w = 0; w < p.windows.size(); ++w) {
    int n = p.windows[w];
    int pad_top = (n - 1) / 2;
    int pad_bottom = n - 1 - pad_top;

    ad::NodeId padded = h;
    if (n > 1) {
      std::vector<ad::NodeId> parts;
      if (pad_top > 0)
        parts.push_back(g.constant(Eigen::MatrixXd::Zero(pad_top, e)));
      parts.push_back(h);
      if (pad_bottom > 0)
        parts.push_back(g.constant(Eigen::MatrixXd::Zero(pad_bottom, e)));
      padded = g.concat_rows(parts);
    }

    // Row i of patches is the flattened window starting at padded row i.
    ad::NodeId patches;
    if (n == 1) {
      patches = padded;
    } else {
      std::vector<ad::NodeId> offsets;
      for (int off = 0; off < n; ++off)
        offsets.push_back(g.slice_rows(padded, off, l));
      patches = g.concat_cols(offsets);
    }
    ad::NodeId responses = g.add_rowvec(
        g.matmul(patches, g.param(p.kernels[w])), g.param(p.biases[w]));
    blocks.push_back(apply_activation(g, p.activation, responses));
  }
  return blocks.size() == 1 ? blocks[0] : g.concat_cols(blocks);
}

// ---------------------------------------------------------------------------
// Attention

AttentionParams AttentionParams::random(int width, int heads,
                                        std::uint64_t seed) {
  if (width < 1 || heads < 1)
    throw ModelError("attention: width and heads must be positive");
  if (width % heads != 0)
    throw ModelError("attention: " + std::to_string(heads) +
                     " heads do not divide width " + std::to_string(width));
  AttentionParams p;
  p.width = width;
  p.heads = heads;
  double dev = 1.0 / std::sqrt(width);
  Rng rng(seed);
  p.wq = ad::Parameter("attn.wq", scaled_normal(rng, width, width, dev));
  p.wk = ad::Parameter("attn.wk", scaled_normal(rng, width, width, dev));
  p.wv = ad::Parameter("attn.wv", scaled_normal(rng, width, width, dev));
  p.wo = ad::Parameter("attn.wo", scaled_normal(rng, width, width, dev));
  return p;
}

ad::NodeId multihead_attention(ad::Graph& g, AttentionParams& p, ad::NodeId x,
                               std::vector<ad::NodeId>* attention_rows) {
  const Eigen::MatrixXd& xv = g.value(x);
  if (!xv.allFinite()) throw ModelError("attention: non-finite input");
  if (static_cast<int>(xv.cols()) != p.width)
    throw ModelError("attention: input width " + std::to_string(xv.cols()) +
                     " does not match the configured " +
                     std::to_string(p.width));

  ad::NodeId q = g.matmul(x, g.param(p.wq));
  ad::NodeId k = g.matmul(x, g.param(p.wk));
  ad::NodeId v = g.matmul(x, g.param(p.wv));

  int per_head = p.width / p.heads;
  double scaling = 1.0 / std::sqrt(static_cast<double>(per_head));
  std::vector<ad::NodeId> contexts;
  for (int i = 0; i < p.heads; ++i) {
    ad::NodeId qh = g.slice_cols(q, i * per_head, per_head);
    ad::NodeId kh = g.slice_cols(k, i * per_head, per_head);
    ad::NodeId vh = g.slice_cols(v, i * per_head, per_head);
    ad::NodeId weights =
        g.softmax_rows(g.scale(g.matmul_nt(qh, kh), scaling));
    if (attention_rows) attention_rows->push_back(weights);
    contexts.push_back(g.matmul(weights, vh));
  }
  ad::NodeId merged =
      contexts.size() == 1 ? contexts[0] : g.concat_cols(contexts);
  return g.matmul(merged, g.param(p.wo));
}

// ---------------------------------------------------------------------------
// Fuse

ad::NodeId fuse(ad::Graph& g, ad::NodeId conv_out, ad::NodeId attention_out) {
  if (g.value(conv_out).rows() != g.value(attention_out).rows())
    throw ModelError("fuse: sequence lengths differ, " +
                     std::to_string(g.value(conv_out).rows()) + " vs " +
                     std::to_string(g.value(attention_out).rows()));
  return g.concat_cols({conv_out, attention_out});
}

// ---------------------------------------------------------------------------
// BiLSTM

LstmParams LstmParams::random(int input_width, int hidden,
                              std::uint64_t seed) {
  if (input_width < 1 || hidden < 1)
    throw ModelError("lstm: input width and hidden size must be positive");
  LstmParams p;
  p.input_width = input_width;
  p.hidden = hidden;

  auto make = [&](const char* dir, std::uint64_t dir_seed) {
    Rng rng(dir_seed);
    std::string tag = std::string("lstm.") + dir;
    ad::Parameter wx(tag + ".wx",
                     scaled_normal(rng, input_width, 4 * hidden,
                                   1.0 / std::sqrt(input_width)));
    ad::Parameter wh(tag + ".wh",
                     scaled_normal(rng, hidden, 4 * hidden,
                                   1.0 / std::sqrt(hidden)));
    Eigen::MatrixXd bias = Eigen::MatrixXd::Zero(1, 4 * hidden);
    bias.middleCols(hidden, hidden).setOnes();  // forget gates start open
    ad::Parameter b(tag + ".b", std::move(bias));
    return std::make_tuple(std::move(wx), std::move(wh), std::move(b));
  };
  std::tie(p.fwd_wx, p.fwd_wh, p.fwd_b) = make("fwd", derive_seed(seed, "lstm-fwd"));
  std::tie(p.bwd_wx, p.bwd_wh, p.bwd_b) = make("bwd", derive_seed(seed, "lstm-bwd"));
  return p;
}

namespace {

// One direction; fills out_rows[t] with the 1 x hidden state for position t.
void lstm_direction(ad::Graph& g, ad::NodeId z, int l, int hidden,
                    ad::Parameter& wx, ad::Parameter& wh, ad::Parameter& b,
                    bool forward, std::vector<ad::NodeId>& out_rows) {
  ad::NodeId wx_n = g.param(wx);
  ad::NodeId wh_n = g.param(wh);
  ad::NodeId b_n = g.param(b);
  ad::NodeId h_prev = g.constant(Eigen::MatrixXd::Zero(1, hidden));
  ad::NodeId c_prev = h_prev;
  for (int step = 0; step < l; ++step) {
    int t = forward ? step : l - 1 - step;
    ad::NodeId xt = g.slice_rows(z, t, 1);
    ad::NodeId pre = g.add(g.add_rowvec(g.matmul(xt, wx_n), b_n),
                           g.matmul(h_prev, wh_n));
    ad::NodeId in_gate = g.sigmoid(g.slice_cols(pre, 0, hidden));
    ad::NodeId forget = g.sigmoid(g.slice_cols(pre, hidden, hidden));
    ad::NodeId out_gate = g.sigmoid(g.slice_cols(pre, 2 * hidden, hidden));
    ad::NodeId candidate = g.tanh(g.slice_cols(pre, 3 * hidden, hidden));
    ad::NodeId c = g.add(g.hadamard(forget, c_prev),
                         g.hadamard(in_gate, candidate));
    ad::NodeId h = g.hadamard(out_gate, g.tanh(c));
    out_rows[static_cast<std::size_t>(t)] = h;
    h_prev = h;
    c_prev = c;
  }
}

}  // namespace

ad::NodeId bilstm(ad::Graph& g, LstmParams& p, ad::NodeId z) {
  const Eigen::MatrixXd& zv = g.value(z);
  int l = static_cast<int>(zv.rows());
  if (l < 1) throw ModelError("lstm: empty input");
  if (static_cast<int>(zv.cols()) != p.input_width)
    throw ModelError("lstm: input width " + std::to_string(zv.cols()) +
                     " does not match the configured " +
                     std::to_string(p.input_width));

  std::vector<ad::NodeId> fwd_rows(static_cast<std::size_t>(l));
  std::vector<ad::NodeId> bwd_rows(static_cast<std::size_t>(l));
  lstm_direction(g, z, l, p.hidden, p.fwd_wx, p.fwd_wh, p.fwd_b, true,
                 fwd_rows);
  lstm_direction(g, z, l, p.hidden, p.bwd_wx, p.bwd_wh, p.bwd_b, false,
                 bwd_rows);

  ad::NodeId fwd = l == 1 ? fwd_rows[0] : g.concat_rows(fwd_rows);
  ad::NodeId bwd = l == 1 ? bwd_rows[0] : g.concat_rows(bwd_rows);
  return g.concat_cols({fwd, bwd});
}

}  // namespace cetag
