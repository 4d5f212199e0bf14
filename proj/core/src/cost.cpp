#include "ipcv/cost.hpp"

#include <string>

namespace ipcv {

namespace {

BlockCost dense_block(std::uint64_t n_q, std::uint64_t n_kv, std::uint64_t n_ffn,
                      std::uint64_t d, std::uint64_t ffn_width) {
  BlockCost c;
  c.attn_proj = 2 * n_q * d * d + 4 * n_kv * d * d + 2 * n_q * d * d;
  c.attn_scores = 4 * n_q * n_kv * d;
  c.ffn = 4 * n_ffn * d * ffn_width;
  return c;
}

std::vector<BlockCost> vanilla_blocks(const EncoderConfig& enc, std::uint64_t n) {
  return std::vector<BlockCost>(enc.depth, dense_block(n, n, n, enc.dim, enc.ffn_width()));
}

std::uint64_t total_of(const std::vector<BlockCost>& blocks) {
  std::uint64_t t = 0;
  for (const auto& b : blocks) t += b.total();
  return t;
}

}  // namespace

std::string_view to_string(PipelineVariant v) {
  switch (v) {
    case PipelineVariant::vanilla: return "vanilla";
    case PipelineVariant::naive: return "naive";
    case PipelineVariant::ipcv: return "ipcv";
  }
  return "unknown";
}

BlockCost CostReport::sum() const {
  BlockCost s;
  for (const auto& b : blocks) {
    s.attn_proj += b.attn_proj;
    s.attn_scores += b.attn_scores;
    s.ffn += b.ffn;
    s.ngr += b.ngr;
  }
  return s;
}

CostReport count_flops(const EncoderConfig& enc, std::size_t num_tokens,
                       const std::optional<CompressionConfig>& comp, PipelineVariant variant) {
  enc.validate();
  if (variant != PipelineVariant::vanilla && !comp)
    throw ContractViolation("count_flops: compression config required for " +
                            std::string(to_string(variant)));

  const std::uint64_t l = num_tokens;
  const std::uint64_t d = enc.dim;
  const std::uint64_t f = enc.ffn_width();

  CostReport rep;
  rep.variant = variant;
  rep.vanilla_total = total_of(vanilla_blocks(enc, l));

  if (variant == PipelineVariant::vanilla) {
    rep.blocks = vanilla_blocks(enc, l);
  } else {
    comp->validate(enc, num_tokens);
    const std::uint64_t kept = comp->keep_count(num_tokens);
    const std::uint64_t removed = l - kept;
    const std::size_t lp = comp->prune_layer;
    const std::size_t window = variant == PipelineVariant::ipcv ? comp->as_window : 0;
    const std::uint64_t recon = removed * comp->neighbors * d;

    rep.blocks.reserve(enc.depth);
    for (std::size_t b = 0; b < enc.depth; ++b) {
      if (b < lp) {
        rep.blocks.push_back(dense_block(l, l, l, d, f));
      } else if (b < lp + window) {
        const std::uint64_t n_q = comp->as_mode == AsMode::full_query ? l : kept;
        BlockCost c = dense_block(n_q, l, kept, d, f);
        c.ngr = recon;
        rep.blocks.push_back(c);
      } else {
        rep.blocks.push_back(dense_block(kept, kept, kept, d, f));
      }
    }
    if (variant == PipelineVariant::ipcv) {
      rep.blocks[lp].ngr += 2 * removed * kept * d;
      rep.blocks.back().ngr += recon;
    }
  }
  rep.total = total_of(rep.blocks);
  rep.ratio_vs_vanilla =
      static_cast<double>(rep.total) / static_cast<double>(rep.vanilla_total);
  return rep;
}

}  // namespace ipcv
