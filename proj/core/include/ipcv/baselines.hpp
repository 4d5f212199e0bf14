#pragma once

#include <string>
#include <string_view>

#include "ipcv/compressor.hpp"
#include "ipcv/encoder.hpp"

namespace ipcv {

enum class Reconstruction {
  ngr,           // anchor plus mean neighbor update
  copy_nearest,  // state of the nearest kept neighbor at the target layer
};

std::string_view to_string(Reconstruction r);

struct AblationVariant {
  bool use_as = true;
  bool use_reintegration = true;
  Reconstruction reconstruction = Reconstruction::ngr;

  std::string name() const;
};

/// Removed token m takes the row of its nearest kept neighbor in `h_keep_l`.
Matrix copy_nearest_reconstruct(const Matrix& h_keep_l, const NeighborMap& nmap);

/// The compression pipeline with components toggled. Returns L x D in
/// original order when reintegration is on, otherwise the K x D final kept
/// states. Both reconstruction sites use the neighbor map frozen at l_p.
Matrix run_variant(const Encoder& enc, const Matrix& x, const CompressionConfig& cfg,
                   const AblationVariant& variant);

}  // namespace ipcv
