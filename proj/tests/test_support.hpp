#pragma once

#include <cstdint>

#include "ipcv/encoder.hpp"
#include "ipcv/numerics.hpp"

namespace ipcv::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            double scale = 1.0) {
  Rng rng(seed, 99);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

inline EncoderConfig small_encoder(std::uint64_t seed, std::size_t depth = 4, std::size_t dim = 8,
                                   std::size_t heads = 2) {
  EncoderConfig c;
  c.depth = depth;
  c.dim = dim;
  c.heads = heads;
  c.ffn_mult = 2;
  c.seed = seed;
  return c;
}

}  // namespace ipcv::testing
