#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "ipcv/compressor.hpp"
#include "ipcv/encoder.hpp"

namespace ipcv {

enum class PipelineVariant { vanilla, naive, ipcv };

std::string_view to_string(PipelineVariant v);

/// FLOPs of one block. A multiply-add counts as 2.
struct BlockCost {
  std::uint64_t attn_proj = 0;    // Q, K, V, O projections
  std::uint64_t attn_scores = 0;  // QK^T plus PV
  std::uint64_t ffn = 0;
  std::uint64_t ngr = 0;          // neighbor search and reconstruction

  std::uint64_t total() const { return attn_proj + attn_scores + ffn + ngr; }
};

/// Closed-form FLOPs of one forward.
///
/// Per block with n_q queries, n_kv keys/values and n_ffn FFN rows:
///   attn_proj   = 2 n_q D^2 (Q) + 4 n_kv D^2 (K, V) + 2 n_q D^2 (O)
///   attn_scores = 4 n_q n_kv D
///   ffn         = 4 n_ffn D (ffn_mult D)
/// Neighbor search costs 2 |rem| |keep| D once, charged to block l_p. Each
/// reconstruction costs |rem| k D adds: one per stabilized block, charged to
/// that block, plus one for reintegration, charged to the last block.
/// Layer norm, residual adds and softmax are excluded.
struct CostReport {
  PipelineVariant variant = PipelineVariant::vanilla;
  std::vector<BlockCost> blocks;
  std::uint64_t total = 0;
  std::uint64_t vanilla_total = 0;
  double ratio_vs_vanilla = 1.0;

  BlockCost sum() const;
};

inline constexpr std::string_view kCostExclusions = "layer-norm,residual-add,softmax";

CostReport count_flops(const EncoderConfig& enc, std::size_t num_tokens,
                       const std::optional<CompressionConfig>& comp, PipelineVariant variant);

}  // namespace ipcv
