#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ipcv/compressor.hpp"
#include "ipcv/encoder.hpp"
#include "ipcv/numerics.hpp"

namespace ipcv {

class EstimationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hausdorff distance between the row sets of `a` and `b` (Euclidean).
double hausdorff(const Matrix& a, const Matrix& b);

/// sup over rows of `a` of the distance to the nearest row of `b`.
double directed_hausdorff(const Matrix& a, const Matrix& b);

enum class ProbeKind {
  mixed,   // each probe is a subset or a jitter with equal probability
  subset,  // random non-empty proper subset of the rows (any subset if L == 1)
  jitter,  // all rows plus Gaussian noise of random scale
};

/// One random perturbation Y of the token set `x`.
Matrix make_probe(const Matrix& x, Rng& rng, ProbeKind kind = ProbeKind::mixed);

/// d_H(F(x), F(y)) / d_H(x, y) where F runs blocks [layer, depth) on a set.
/// Returns a negative value when d_H(x, y) < 1e-12.
double lipschitz_ratio(const Encoder& enc, const Matrix& x, const Matrix& y, std::size_t layer);

/// Empirical Hausdorff-Lipschitz constant of the encoder tail from `layer`.
///
/// Maximum of lipschitz_ratio over `probes` draws of make_probe. This is a
/// lower bound on the true constant. Probes are drawn sequentially from
/// `rng`, so a run with more probes sees a superset of the pairs of a run
/// with fewer. Throws EstimationFailed if every probe is degenerate.
double estimate_lipschitz(const Encoder& enc, const Matrix& x, std::size_t layer,
                          std::size_t probes, Rng& rng, ProbeKind kind = ProbeKind::mixed);

struct BoundVerdicts {
  bool per_token = false;   // max per-token error <= bound_2b
  bool hausdorff = false;   // hausdorff_recon <= bound_2b
  bool smooth = false;      // max per-token error <= bound_smooth (not certified)
  bool intrinsic = false;   // max per-token error <= bound_intrinsic (not certified)
};

struct BoundReport {
  std::size_t removed = 0;
  double b = 0.0;             // max ||h_{i,l_p}||
  double l_hat = 0.0;         // estimate from random probes only
  double l_hat_pair = 0.0;    // ratio of the pruned pair (x, x_keep); 0 if undefined
  double l_hat_cert = 0.0;    // max(l_hat, l_hat_pair), used by every bound
  double beta_hat = 0.0;      // l_hat_cert + 1
  double eps_bar_rho = 0.0;   // worst mean neighbor distance at l_p
  double tau_rho = 0.0;       // largest removed-token score
  std::vector<double> per_token_err;  // follows partition.rem
  double max_err = 0.0;
  double bound_2b = 0.0;            // 2B(L+1), certified
  double bound_2b_plus2 = 0.0;      // 2B(L+2), auxiliary
  double bound_smooth = 0.0;        // beta * eps_bar, auxiliary
  double alpha_hat = 0.0;           // smallest alpha making the intrinsic-term form hold
  double bound_intrinsic = 0.0;     // beta * eps_bar + alpha * tau, auxiliary
  double hausdorff_recon = 0.0;     // d_H(uncompressed final set, reconstructed set)
  double tightness = 0.0;           // max_err / bound_2b
  BoundVerdicts satisfied;
};

struct BoundOptions {
  std::size_t probes = 16;
  bool include_pruned_pair = true;
  ProbeKind probe_kind = ProbeKind::mixed;
};

/// Runs the vanilla and compressed pipelines on `x` and evaluates every
/// empirical constant and bound of the reconstruction-error analysis.
BoundReport measure_reconstruction_error(const Encoder& enc, const Matrix& x,
                                         const CompressionConfig& cfg, Rng& rng,
                                         const BoundOptions& opts = {});

struct SmoothnessStats {
  std::vector<std::size_t> tokens;  // removed token indices
  std::vector<double> neighbor_l1;
  std::vector<double> random_l1;
  std::vector<double> neighbor_cos;
  std::vector<double> random_cos;
  double median_neighbor_l1 = 0.0;
  double median_random_l1 = 0.0;
  double median_neighbor_cos = 0.0;
  double median_random_cos = 0.0;
};

/// Observes the vanilla trace only. For every token the pruning rule would
/// remove, compares its update h_T - h_{l_p} against the mean update of its k
/// nearest kept tokens and of k kept tokens drawn without replacement.
SmoothnessStats delta_smoothness_stats(const Encoder& enc, const Matrix& x,
                                       const CompressionConfig& cfg, Rng& rng);

struct PerturbationResult {
  double pre_llm = 0.0;    // d_H(X_final, X_hat_final)
  double delta_llm = 0.0;  // d_H(X_hat_final, S)
  double combined = 0.0;   // d_H(X_final, S)
  bool triangle_holds = false;
};

/// Compares the vanilla final set with the reconstructed set and with the
/// output of a downstream pruner applied to the reconstructed sequence.
PerturbationResult final_output_perturbation(const Encoder& enc, const Matrix& x,
                                             const CompressionConfig& cfg,
                                             DownstreamStrategy strategy,
                                             std::size_t downstream_budget);

}  // namespace ipcv
