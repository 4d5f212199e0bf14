#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "ipcv/encoder.hpp"
#include "ipcv/numerics.hpp"

namespace ipcv {

enum class AsMode {
  full_query,  // every row of the restored sequence acts as a query
  kv_only,     // only kept rows are queries; pruned rows serve as keys/values
};

std::string_view to_string(AsMode mode);
AsMode parse_as_mode(std::string_view text);

/// Retention as a fraction of L in (0, 1].
struct RetainRatio {
  double value = 0.5;
};
/// Retention as an absolute token count.
struct RetainCount {
  std::size_t value = 0;
};
using Retain = std::variant<RetainRatio, RetainCount>;

struct CompressionConfig {
  std::size_t prune_layer = 3;  // l_p
  Retain retain = RetainRatio{0.5};
  std::size_t as_window = 7;    // number of attention-stabilized blocks
  std::size_t neighbors = 10;   // k
  AsMode as_mode = AsMode::full_query;

  /// K = ceil(retain * L) for ratios, the count itself otherwise.
  std::size_t keep_count(std::size_t num_tokens) const;

  /// Throws ConfigError naming the violated clause.
  void validate(const EncoderConfig& enc, std::size_t num_tokens) const;
};

struct PrunePartition {
  std::vector<std::size_t> keep;  // ascending
  std::vector<std::size_t> rem;   // ascending
  std::size_t original_len = 0;
};

struct Neighbor {
  std::size_t index = 0;     // original token index, a member of keep
  std::size_t keep_row = 0;  // position of `index` within partition.keep
  double distance = 0.0;
};

/// neighbors[m] holds the k nearest kept tokens of partition.rem[m], nearest
/// first.
struct NeighborMap {
  std::size_t k = 0;
  std::vector<std::vector<Neighbor>> neighbors;
};

struct CompressedTrace {
  PrunePartition partition;
  NeighborMap neighbor_map;
  Matrix anchor_keep;               // H_keep at l_p
  Matrix anchor_rem;                // H_rem at l_p
  std::size_t prune_layer = 0;
  std::vector<Matrix> keep_states;  // H_keep at blocks l_p .. T
  Matrix final_full;                // L x D, original order
};

/// Maps kept-token states at some layer to states for every removed token.
using Reconstructor = std::function<Matrix(const Matrix& keep_states)>;

/// s_i = ||h_{i,l_p} - h_{i,l_p-1}||_2.
Vector score_tokens(const Matrix& h_lp, const Matrix& h_lp_prev);

/// Keeps the `keep_count` largest scores. Ties go to the smaller index.
PrunePartition select_topk(std::span<const double> scores, std::size_t keep_count);

/// Exhaustive k-NN of every removed token among kept tokens at l_p.
/// Rows of `h_rem_lp` / `h_keep_lp` follow partition.rem / partition.keep.
/// Distance ties go to the smaller kept index.
NeighborMap find_neighbors(const Matrix& h_rem_lp, const Matrix& h_keep_lp,
                           const PrunePartition& partition, std::size_t k);

/// Neighbor-guided reconstruction: each removed token becomes its anchor plus
/// the mean update (h_keep_l - anchor_keep) of its k neighbors. Output rows
/// follow partition.rem.
Matrix ngr_reconstruct(const Matrix& anchor_rem, const Matrix& anchor_keep,
                       const Matrix& h_keep_l, const NeighborMap& nmap);

/// Attention-stabilized blocks [l_p, l_p + as_window). Each block restores
/// the full sequence from kept states plus reconstructed removed tokens,
/// attends over it, keeps the kept rows and runs the FFN on them only.
/// Returns kept states at l_p .. l_p + as_window (as_window + 1 entries).
std::vector<Matrix> as_forward(const Encoder& enc, const Matrix& h_lp,
                               const CompressionConfig& cfg, const PrunePartition& partition,
                               const Reconstructor& reconstruct);

/// as_forward with neighbor-guided reconstruction from `nmap`.
std::vector<Matrix> as_forward(const Encoder& enc, const Matrix& h_lp,
                               const CompressionConfig& cfg, const PrunePartition& partition,
                               const NeighborMap& nmap);

/// Everything up to and including the pruning decision at l_p.
struct PruneStage {
  LayerTrace prefix;  // H_0 .. H_{l_p}
  PrunePartition partition;
  Vector scores;
  Matrix anchor_keep;
  Matrix anchor_rem;
  NeighborMap neighbor_map;
};

/// Runs blocks [0, l_p), scores, partitions and searches neighbors.
/// `cfg` must already be valid for `enc` and `x`.
PruneStage prune_at_layer(const Encoder& enc, const Matrix& x, const CompressionConfig& cfg);

/// Full pipeline: vanilla prefix, prune at l_p, attention stabilization,
/// kept-only tail, reintegration to L rows in original order.
CompressedTrace run_ipcv(const Encoder& enc, const Matrix& x, const CompressionConfig& cfg);

/// Same partition as run_ipcv, but removed tokens vanish at l_p: no
/// stabilization and no reintegration. Returns K x D final kept states.
Matrix naive_prune_forward(const Encoder& enc, const Matrix& x, const CompressionConfig& cfg);

enum class DownstreamStrategy { keep_prefix, norm_topk };

std::string_view to_string(DownstreamStrategy s);
DownstreamStrategy parse_downstream_strategy(std::string_view text);

/// Stand-in for an LLM-side pruner consuming an encoder output sequence.
/// Keeps `budget` rows in original order.
Matrix downstream_prune(const Matrix& tokens, DownstreamStrategy strategy, std::size_t budget);

}  // namespace ipcv
