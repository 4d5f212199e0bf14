#include "ipcv/baselines.hpp"

namespace ipcv {

std::string_view to_string(Reconstruction r) {
  return r == Reconstruction::ngr ? "ngr" : "copy-nearest";
}

std::string AblationVariant::name() const {
  std::string n = use_as ? "as" : "no-as";
  n += use_reintegration ? "+reint" : "+no-reint";
  n += "+";
  n += to_string(reconstruction);
  return n;
}

Matrix copy_nearest_reconstruct(const Matrix& h_keep_l, const NeighborMap& nmap) {
  Matrix out(nmap.neighbors.size(), h_keep_l.cols());
  for (std::size_t m = 0; m < nmap.neighbors.size(); ++m) {
    if (nmap.neighbors[m].empty())
      throw ContractViolation("copy_nearest_reconstruct: empty neighbor list");
    const std::size_t r = nmap.neighbors[m].front().keep_row;
    if (r >= h_keep_l.rows())
      throw ContractViolation("copy_nearest_reconstruct: neighbor outside kept set");
    auto src = h_keep_l.row(r);
    std::copy(src.begin(), src.end(), out.row(m).begin());
  }
  return out;
}

Matrix run_variant(const Encoder& enc, const Matrix& x, const CompressionConfig& cfg,
                   const AblationVariant& variant) {
  cfg.validate(enc.config(), x.rows());
  if (x.cols() != enc.dim()) throw ContractViolation("run_variant: width mismatch");

  const PruneStage stage = prune_at_layer(enc, x, cfg);
  const Reconstructor reconstruct = [&](const Matrix& keep_l) {
    return variant.reconstruction == Reconstruction::ngr
               ? ngr_reconstruct(stage.anchor_rem, stage.anchor_keep, keep_l, stage.neighbor_map)
               : copy_nearest_reconstruct(keep_l, stage.neighbor_map);
  };

  CompressionConfig window_cfg = cfg;
  if (!variant.use_as) window_cfg.as_window = 0;
  const std::vector<Matrix> window =
      as_forward(enc, stage.prefix.back(), window_cfg, stage.partition, reconstruct);
  Matrix final_keep =
      forward_subset(enc, window.back(), cfg.prune_layer + window_cfg.as_window, enc.depth())
          .back();

  if (!variant.use_reintegration) return final_keep;

  Matrix full(x.rows(), x.cols());
  scatter_rows(full, stage.partition.keep, final_keep);
  if (!stage.partition.rem.empty()) scatter_rows(full, stage.partition.rem, reconstruct(final_keep));
  return full;
}

}  // namespace ipcv
