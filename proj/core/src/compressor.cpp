#include "ipcv/compressor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ipcv {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ContractViolation(what);
}

}  // namespace

std::string_view to_string(AsMode mode) {
  return mode == AsMode::full_query ? "full-query" : "kv-only";
}

AsMode parse_as_mode(std::string_view text) {
  if (text == "full-query") return AsMode::full_query;
  if (text == "kv-only") return AsMode::kv_only;
  throw ConfigError("as_mode must be full-query or kv-only, got '" + std::string(text) + "'");
}

std::size_t CompressionConfig::keep_count(std::size_t num_tokens) const {
  if (const auto* count = std::get_if<RetainCount>(&retain)) return count->value;
  const double ratio = std::get<RetainRatio>(retain).value;
  // The 1e-9 slack absorbs products such as 0.2 * 5 = 1.0000000000000002.
  const double k = std::ceil(ratio * static_cast<double>(num_tokens) - 1e-9);
  return k <= 0.0 ? 0 : static_cast<std::size_t>(k);
}

void CompressionConfig::validate(const EncoderConfig& enc, std::size_t num_tokens) const {
  if (const auto* ratio = std::get_if<RetainRatio>(&retain)) {
    if (!(ratio->value > 0.0 && ratio->value <= 1.0))
      throw ConfigError("compress: retain ratio in (0, 1] violated");
  }
  if (prune_layer < 1 || prune_layer + 1 > enc.depth)
    throw ConfigError("compress: 1 <= prune_layer <= depth - 1 violated");
  if (prune_layer + as_window > enc.depth)
    throw ConfigError("compress: prune_layer + as_window <= depth violated");
  const std::size_t k_keep = keep_count(num_tokens);
  if (k_keep < 1 || k_keep > num_tokens)
    throw ConfigError("compress: 1 <= K <= L violated (K=" + std::to_string(k_keep) +
                      ", L=" + std::to_string(num_tokens) + ")");
  if (neighbors < 1) throw ConfigError("compress: neighbors >= 1 violated");
  if (neighbors > k_keep)
    throw ConfigError("compress: neighbors <= K violated (k=" + std::to_string(neighbors) +
                      ", K=" + std::to_string(k_keep) + ")");
}

Vector score_tokens(const Matrix& h_lp, const Matrix& h_lp_prev) {
  require(h_lp.rows() == h_lp_prev.rows() && h_lp.cols() == h_lp_prev.cols(),
          "score_tokens: shape mismatch");
  Vector scores(h_lp.rows());
  for (std::size_t i = 0; i < h_lp.rows(); ++i)
    scores[i] = l2_distance(h_lp.row(i), h_lp_prev.row(i));
  return scores;
}

PrunePartition select_topk(std::span<const double> scores, std::size_t keep_count) {
  const std::size_t n = scores.size();
  require(keep_count >= 1 && keep_count <= n, "select_topk: need 1 <= K <= L");
  require(std::all_of(scores.begin(), scores.end(), [](double s) { return std::isfinite(s); }),
          "select_topk: non-finite score");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto mid = order.begin() + static_cast<std::ptrdiff_t>(keep_count);
  std::partial_sort(order.begin(), mid, order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });
  PrunePartition p;
  p.original_len = n;
  p.keep.assign(order.begin(), mid);
  p.rem.assign(mid, order.end());
  std::sort(p.keep.begin(), p.keep.end());
  std::sort(p.rem.begin(), p.rem.end());
  return p;
}

NeighborMap find_neighbors(const Matrix& h_rem_lp, const Matrix& h_keep_lp,
                           const PrunePartition& partition, std::size_t k) {
  require(h_rem_lp.rows() == partition.rem.size(), "find_neighbors: rem rows != |rem|");
  require(h_keep_lp.rows() == partition.keep.size(), "find_neighbors: keep rows != |keep|");
  require(h_rem_lp.rows() == 0 || h_rem_lp.cols() == h_keep_lp.cols(),
          "find_neighbors: width mismatch");
  require(k >= 1 && k <= partition.keep.size(), "find_neighbors: need 1 <= k <= |keep|");

  NeighborMap nmap;
  nmap.k = k;
  nmap.neighbors.resize(partition.rem.size());
  std::vector<Neighbor> candidates(partition.keep.size());
  for (std::size_t m = 0; m < partition.rem.size(); ++m) {
    for (std::size_t r = 0; r < partition.keep.size(); ++r)
      candidates[r] = {partition.keep[r], r, l2_distance(h_rem_lp.row(m), h_keep_lp.row(r))};
    const auto mid = candidates.begin() + static_cast<std::ptrdiff_t>(k);
    std::partial_sort(candidates.begin(), mid, candidates.end(),
                      [](const Neighbor& a, const Neighbor& b) {
                        return a.distance < b.distance ||
                               (a.distance == b.distance && a.index < b.index);
                      });
    nmap.neighbors[m].assign(candidates.begin(), mid);
  }
  return nmap;
}

Matrix ngr_reconstruct(const Matrix& anchor_rem, const Matrix& anchor_keep,
                       const Matrix& h_keep_l, const NeighborMap& nmap) {
  require(anchor_keep.rows() == h_keep_l.rows() && anchor_keep.cols() == h_keep_l.cols(),
          "ngr_reconstruct: anchor_keep and h_keep_l shapes differ");
  require(nmap.neighbors.size() == anchor_rem.rows(),
          "ngr_reconstruct: neighbor map does not match removed rows");
  const std::size_t d = h_keep_l.cols();
  require(anchor_rem.rows() == 0 || anchor_rem.cols() == d, "ngr_reconstruct: width mismatch");

  const Matrix delta = subtract(h_keep_l, anchor_keep);
  Matrix out(anchor_rem.rows(), d);
  Vector acc(d);
  for (std::size_t m = 0; m < anchor_rem.rows(); ++m) {
    const auto& list = nmap.neighbors[m];
    require(list.size() == nmap.k && nmap.k > 0, "ngr_reconstruct: neighbor list length != k");
    std::fill(acc.begin(), acc.end(), 0.0);
    for (const Neighbor& nb : list) {
      require(nb.keep_row < delta.rows(), "ngr_reconstruct: neighbor outside kept set");
      auto dr = delta.row(nb.keep_row);
      for (std::size_t c = 0; c < d; ++c) acc[c] += dr[c];
    }
    const double k = static_cast<double>(nmap.k);
    auto anchor = anchor_rem.row(m);
    auto o = out.row(m);
    for (std::size_t c = 0; c < d; ++c) o[c] = anchor[c] + acc[c] / k;
  }
  return out;
}

std::vector<Matrix> as_forward(const Encoder& enc, const Matrix& h_lp,
                               const CompressionConfig& cfg, const PrunePartition& partition,
                               const Reconstructor& reconstruct) {
  require(cfg.prune_layer + cfg.as_window <= enc.depth(), "as_forward: window exceeds depth");
  require(h_lp.rows() == partition.original_len, "as_forward: h_lp rows != L");

  std::vector<Matrix> states;
  states.reserve(cfg.as_window + 1);
  states.push_back(gather_rows(h_lp, partition.keep));

  Matrix full(partition.original_len, h_lp.cols());
  for (std::size_t l = cfg.prune_layer; l < cfg.prune_layer + cfg.as_window; ++l) {
    const Matrix& keep_l = states.back();
    scatter_rows(full, partition.keep, keep_l);
    if (!partition.rem.empty()) scatter_rows(full, partition.rem, reconstruct(keep_l));

    Matrix attended = cfg.as_mode == AsMode::full_query
                          ? gather_rows(enc.attention_sublayer(l, full), partition.keep)
                          : enc.attention_sublayer(l, full, partition.keep);
    states.push_back(enc.ffn_sublayer(l, attended));
  }
  return states;
}

std::vector<Matrix> as_forward(const Encoder& enc, const Matrix& h_lp,
                               const CompressionConfig& cfg, const PrunePartition& partition,
                               const NeighborMap& nmap) {
  const Matrix anchor_keep = gather_rows(h_lp, partition.keep);
  const Matrix anchor_rem = gather_rows(h_lp, partition.rem);
  return as_forward(enc, h_lp, cfg, partition, [&](const Matrix& keep_l) {
    return ngr_reconstruct(anchor_rem, anchor_keep, keep_l, nmap);
  });
}

PruneStage prune_at_layer(const Encoder& enc, const Matrix& x, const CompressionConfig& cfg) {
  PruneStage stage;
  stage.prefix = forward_subset(enc, x, 0, cfg.prune_layer);
  const Matrix& h_lp = stage.prefix.back();
  stage.scores = score_tokens(h_lp, stage.prefix.at_layer(cfg.prune_layer - 1));
  stage.partition = select_topk(stage.scores, cfg.keep_count(x.rows()));
  stage.anchor_keep = gather_rows(h_lp, stage.partition.keep);
  stage.anchor_rem = gather_rows(h_lp, stage.partition.rem);
  stage.neighbor_map =
      find_neighbors(stage.anchor_rem, stage.anchor_keep, stage.partition, cfg.neighbors);
  return stage;
}

CompressedTrace run_ipcv(const Encoder& enc, const Matrix& x, const CompressionConfig& cfg) {
  cfg.validate(enc.config(), x.rows());
  require(x.cols() == enc.dim(), "run_ipcv: width mismatch");
  const std::size_t lp = cfg.prune_layer;
  CompressedTrace out;
  out.prune_layer = lp;

  if (cfg.keep_count(x.rows()) == x.rows()) {
    // Nothing to prune: the vanilla forward is the answer.
    LayerTrace trace = forward_full(enc, x);
    out.partition.original_len = x.rows();
    out.partition.keep.resize(x.rows());
    std::iota(out.partition.keep.begin(), out.partition.keep.end(), std::size_t{0});
    out.neighbor_map.k = cfg.neighbors;
    out.anchor_keep = trace.states[lp];
    out.anchor_rem = Matrix(0, x.cols());
    out.keep_states.assign(trace.states.begin() + static_cast<std::ptrdiff_t>(lp),
                           trace.states.end());
    out.final_full = out.keep_states.back();
    return out;
  }

  PruneStage stage = prune_at_layer(enc, x, cfg);
  out.keep_states =
      as_forward(enc, stage.prefix.back(), cfg, stage.partition, stage.neighbor_map);
  LayerTrace tail = forward_subset(enc, out.keep_states.back(), lp + cfg.as_window, enc.depth());
  for (std::size_t j = 1; j < tail.states.size(); ++j)
    out.keep_states.push_back(std::move(tail.states[j]));

  const Matrix rebuilt = ngr_reconstruct(stage.anchor_rem, stage.anchor_keep,
                                         out.keep_states.back(), stage.neighbor_map);
  out.final_full = Matrix(x.rows(), x.cols());
  scatter_rows(out.final_full, stage.partition.keep, out.keep_states.back());
  scatter_rows(out.final_full, stage.partition.rem, rebuilt);

  out.partition = std::move(stage.partition);
  out.neighbor_map = std::move(stage.neighbor_map);
  out.anchor_keep = std::move(stage.anchor_keep);
  out.anchor_rem = std::move(stage.anchor_rem);
  return out;
}

Matrix naive_prune_forward(const Encoder& enc, const Matrix& x, const CompressionConfig& cfg) {
  cfg.validate(enc.config(), x.rows());
  require(x.cols() == enc.dim(), "naive_prune_forward: width mismatch");
  const PruneStage stage = prune_at_layer(enc, x, cfg);
  return forward_subset(enc, stage.anchor_keep, cfg.prune_layer, enc.depth()).back();
}

std::string_view to_string(DownstreamStrategy s) {
  return s == DownstreamStrategy::keep_prefix ? "keep-prefix" : "norm-topk";
}

DownstreamStrategy parse_downstream_strategy(std::string_view text) {
  if (text == "keep-prefix") return DownstreamStrategy::keep_prefix;
  if (text == "norm-topk") return DownstreamStrategy::norm_topk;
  throw ConfigError("downstream strategy must be keep-prefix or norm-topk, got '" +
                    std::string(text) + "'");
}

Matrix downstream_prune(const Matrix& tokens, DownstreamStrategy strategy, std::size_t budget) {
  require(budget >= 1 && budget <= tokens.rows(), "downstream_prune: need 1 <= budget <= rows");
  std::vector<std::size_t> rows;
  if (strategy == DownstreamStrategy::keep_prefix) {
    rows.resize(budget);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  } else {
    const Vector norms = l2_norm_rows(tokens);
    rows = select_topk(norms, budget).keep;
  }
  return gather_rows(tokens, rows);
}

}  // namespace ipcv
