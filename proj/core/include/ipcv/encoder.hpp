#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ipcv/numerics.hpp"

namespace ipcv {

struct EncoderConfig {
  std::size_t depth = 12;     // number of blocks T
  std::size_t dim = 64;       // embedding width D
  std::size_t heads = 4;      // must divide dim
  std::size_t ffn_mult = 4;   // FFN hidden width = ffn_mult * dim
  std::uint64_t seed = 0;
  double eps = 1e-5;          // layer-norm epsilon

  /// Throws ConfigError naming the violated clause.
  void validate() const;
  std::size_t ffn_width() const { return ffn_mult * dim; }
};

struct BlockWeights {
  Matrix wq, wk, wv, wo;  // dim x dim
  Matrix w1;              // dim x ffn_width
  Matrix w2;              // ffn_width x dim
  Vector ln1_gain, ln1_bias;
  Vector ln2_gain, ln2_bias;
};

/// Hidden states H_first .. H_last of one forward pass. `states[j]` is the
/// input to block `first_layer + j`; the final entry is the output of the
/// last block run.
struct LayerTrace {
  std::size_t first_layer = 0;
  std::vector<Matrix> states;

  std::size_t last_layer() const { return first_layer + states.size() - 1; }
  const Matrix& at_layer(std::size_t layer) const;
  const Matrix& back() const { return states.back(); }
};

/// A pre-norm bidirectional transformer encoder with seeded weights and no
/// positional terms.
///
/// Block l maps H to
///   H'  = H  + MHA(LN1(H)) Wo
///   H'' = H' + GELU(LN2(H') W1) W2
/// Weights are uniform in +-sqrt(6 / (fan_in + fan_out)); layer-norm gains
/// start at 1 and biases at 0. Block l draws from Rng(seed, l).
class Encoder {
 public:
  explicit Encoder(const EncoderConfig& cfg);

  const EncoderConfig& config() const { return cfg_; }
  const BlockWeights& block(std::size_t layer) const { return blocks_.at(layer); }
  std::size_t depth() const { return cfg_.depth; }
  std::size_t dim() const { return cfg_.dim; }

  /// Attention sublayer of `layer` with residual: returns rows
  /// `query_rows` (all rows when empty) of H + MHA(LN1(H)) Wo, where keys and
  /// values always span every row of `h`.
  Matrix attention_sublayer(std::size_t layer, const Matrix& h,
                            std::optional<std::span<const std::size_t>> query_rows =
                                std::nullopt) const;

  /// FFN sublayer of `layer` with residual, row-independent.
  Matrix ffn_sublayer(std::size_t layer, const Matrix& h) const;

  Matrix block_forward(std::size_t layer, const Matrix& h) const;

 private:
  EncoderConfig cfg_;
  std::vector<BlockWeights> blocks_;
};

Encoder build_encoder(const EncoderConfig& cfg);

/// Vanilla forward: trace H_0 .. H_T.
LayerTrace forward_full(const Encoder& enc, const Matrix& x);

/// Runs blocks [from_layer, to_layer) on the given token subset. The returned
/// trace starts at `from_layer` and its first state is `x_sub` unchanged.
LayerTrace forward_subset(const Encoder& enc, const Matrix& x_sub, std::size_t from_layer,
                          std::size_t to_layer);

struct SyntheticInputSpec {
  std::size_t num_tokens = 64;
  std::size_t num_clusters = 8;
  double cluster_spread = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Clustered token embeddings: token i sits at center (i mod num_clusters)
/// plus N(0, spread^2) jitter.
///
/// Centers follow a Gaussian random walk (start N(0, I), steps N(0, 0.25 I),
/// stream 0), so consecutive clusters are similar. Jitter uses stream 1.
Matrix make_synthetic_input(const SyntheticInputSpec& spec, std::size_t dim);

}  // namespace ipcv
