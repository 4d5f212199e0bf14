#include "ipcv/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ipcv {

namespace {

constexpr double kDegenerate = 1e-12;

double max_of(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

Matrix tail_output(const Encoder& enc, const Matrix& tokens, std::size_t layer) {
  return forward_subset(enc, tokens, layer, enc.depth()).back();
}

double ratio_with_cached(const Encoder& enc, const Matrix& x, const Matrix& fx,
                         const Matrix& y, std::size_t layer) {
  const double dx = hausdorff(x, y);
  if (dx < kDegenerate) return -1.0;
  return hausdorff(fx, tail_output(enc, y, layer)) / dx;
}

Vector row_mean(const Matrix& m, std::span<const std::size_t> rows) {
  Vector acc(m.cols(), 0.0);
  for (std::size_t r : rows) {
    auto src = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) acc[c] += src[c];
  }
  const double n = static_cast<double>(rows.size());
  for (double& v : acc) v /= n;
  return acc;
}

}  // namespace

double directed_hausdorff(const Matrix& a, const Matrix& b) {
  if (a.rows() == 0 || b.rows() == 0) throw ContractViolation("hausdorff: empty point set");
  if (a.cols() != b.cols()) throw ContractViolation("hausdorff: dimension mismatch");
  double sup = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double inf = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.rows(); ++j) inf = std::min(inf, l2_distance(a.row(i), b.row(j)));
    sup = std::max(sup, inf);
  }
  return sup;
}

double hausdorff(const Matrix& a, const Matrix& b) {
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

Matrix make_probe(const Matrix& x, Rng& rng, ProbeKind kind) {
  if (x.rows() == 0) throw ContractViolation("make_probe: empty token set");
  if (kind == ProbeKind::mixed) kind = rng.uniform() < 0.5 ? ProbeKind::subset : ProbeKind::jitter;

  if (kind == ProbeKind::subset) {
    const std::size_t n = x.rows();
    const std::size_t size = n == 1 ? 1 : 1 + static_cast<std::size_t>(rng.uniform_index(n - 1));
    auto rows = sample_without_replacement(rng, n, size);
    std::sort(rows.begin(), rows.end());
    return gather_rows(x, rows);
  }

  // Noise scale: a random fraction in [1e-3, 10^-0.5] of the RMS coordinate.
  const double rms = l2_norm(x.data()) / std::sqrt(static_cast<double>(x.data().size()));
  const double sigma = std::pow(10.0, rng.uniform(-3.0, -0.5)) * std::max(rms, 1e-6);
  Matrix y = x;
  for (double& v : y.data()) v += sigma * rng.normal();
  return y;
}

double lipschitz_ratio(const Encoder& enc, const Matrix& x, const Matrix& y, std::size_t layer) {
  return ratio_with_cached(enc, x, tail_output(enc, x, layer), y, layer);
}

double estimate_lipschitz(const Encoder& enc, const Matrix& x, std::size_t layer,
                          std::size_t probes, Rng& rng, ProbeKind kind) {
  if (probes < 1) throw ContractViolation("estimate_lipschitz: probes >= 1 required");
  const Matrix fx = tail_output(enc, x, layer);
  double best = -1.0;
  for (std::size_t p = 0; p < probes; ++p) {
    const Matrix y = make_probe(x, rng, kind);
    best = std::max(best, ratio_with_cached(enc, x, fx, y, layer));
  }
  if (best < 0.0) throw EstimationFailed("estimate_lipschitz: every probe was degenerate");
  return best;
}

BoundReport measure_reconstruction_error(const Encoder& enc, const Matrix& x,
                                         const CompressionConfig& cfg, Rng& rng,
                                         const BoundOptions& opts) {
  cfg.validate(enc.config(), x.rows());
  const std::size_t lp = cfg.prune_layer;
  const LayerTrace trace = forward_full(enc, x);
  const CompressedTrace ct = run_ipcv(enc, x, cfg);
  const Matrix& h_lp = trace.states[lp];
  const Matrix& h_final = trace.back();
  const auto& rem = ct.partition.rem;

  BoundReport rep;
  rep.removed = rem.size();
  rep.per_token_err.resize(rem.size());
  for (std::size_t m = 0; m < rem.size(); ++m)
    rep.per_token_err[m] = l2_distance(ct.final_full.row(rem[m]), h_final.row(rem[m]));
  rep.max_err = max_of(rep.per_token_err);

  rep.b = max_of(l2_norm_rows(h_lp));
  rep.l_hat = estimate_lipschitz(enc, h_lp, lp, opts.probes, rng, opts.probe_kind);
  if (opts.include_pruned_pair && !rem.empty())
    rep.l_hat_pair = std::max(0.0, lipschitz_ratio(enc, h_lp, ct.anchor_keep, lp));
  rep.l_hat_cert = std::max(rep.l_hat, rep.l_hat_pair);
  rep.beta_hat = rep.l_hat_cert + 1.0;

  const Vector scores = score_tokens(h_lp, trace.states[lp - 1]);
  for (std::size_t m = 0; m < rem.size(); ++m) {
    double sum = 0.0;
    for (const Neighbor& nb : ct.neighbor_map.neighbors[m]) sum += nb.distance;
    rep.eps_bar_rho = std::max(rep.eps_bar_rho, sum / static_cast<double>(ct.neighbor_map.k));
    rep.tau_rho = std::max(rep.tau_rho, scores[rem[m]]);
  }

  const Matrix delta = subtract(h_final, h_lp);
  for (std::size_t m = 0; m < rem.size(); ++m) {
    const std::size_t i = rem[m];
    if (scores[i] <= 0.0) continue;
    for (const Neighbor& nb : ct.neighbor_map.neighbors[m]) {
      const double excess = l2_distance(delta.row(i), delta.row(nb.index)) -
                            rep.beta_hat * l2_distance(h_lp.row(i), h_lp.row(nb.index));
      if (excess > 0.0) rep.alpha_hat = std::max(rep.alpha_hat, excess / scores[i]);
    }
  }

  rep.bound_2b = 2.0 * rep.b * (rep.l_hat_cert + 1.0);
  rep.bound_2b_plus2 = 2.0 * rep.b * (rep.l_hat_cert + 2.0);
  rep.bound_smooth = rep.beta_hat * rep.eps_bar_rho;
  rep.bound_intrinsic = rep.bound_smooth + rep.alpha_hat * rep.tau_rho;
  rep.hausdorff_recon = hausdorff(h_final, ct.final_full);
  rep.tightness = rep.bound_2b > 0.0 ? rep.max_err / rep.bound_2b : 0.0;

  rep.satisfied.per_token = rep.max_err <= rep.bound_2b;
  rep.satisfied.hausdorff = rep.hausdorff_recon <= rep.bound_2b;
  rep.satisfied.smooth = rep.max_err <= rep.bound_smooth;
  rep.satisfied.intrinsic = rep.max_err <= rep.bound_intrinsic;
  return rep;
}

SmoothnessStats delta_smoothness_stats(const Encoder& enc, const Matrix& x,
                                       const CompressionConfig& cfg, Rng& rng) {
  cfg.validate(enc.config(), x.rows());
  const std::size_t lp = cfg.prune_layer;
  const LayerTrace trace = forward_full(enc, x);
  const Matrix& h_lp = trace.states[lp];
  const PrunePartition part =
      select_topk(score_tokens(h_lp, trace.states[lp - 1]), cfg.keep_count(x.rows()));
  const NeighborMap nmap = find_neighbors(gather_rows(h_lp, part.rem),
                                          gather_rows(h_lp, part.keep), part, cfg.neighbors);
  const Matrix delta = subtract(trace.back(), h_lp);

  SmoothnessStats st;
  st.tokens = part.rem;
  std::vector<std::size_t> rows(cfg.neighbors);
  for (std::size_t m = 0; m < part.rem.size(); ++m) {
    const auto own = delta.row(part.rem[m]);

    for (std::size_t j = 0; j < cfg.neighbors; ++j) rows[j] = nmap.neighbors[m][j].index;
    const Vector near_mean = row_mean(delta, rows);

    const auto picks = sample_without_replacement(rng, part.keep.size(), cfg.neighbors);
    for (std::size_t j = 0; j < cfg.neighbors; ++j) rows[j] = part.keep[picks[j]];
    const Vector rand_mean = row_mean(delta, rows);

    st.neighbor_l1.push_back(l1_distance(own, near_mean));
    st.random_l1.push_back(l1_distance(own, rand_mean));
    st.neighbor_cos.push_back(cosine_similarity(own, near_mean));
    st.random_cos.push_back(cosine_similarity(own, rand_mean));
  }
  st.median_neighbor_l1 = lower_median(st.neighbor_l1);
  st.median_random_l1 = lower_median(st.random_l1);
  st.median_neighbor_cos = lower_median(st.neighbor_cos);
  st.median_random_cos = lower_median(st.random_cos);
  return st;
}

PerturbationResult final_output_perturbation(const Encoder& enc, const Matrix& x,
                                             const CompressionConfig& cfg,
                                             DownstreamStrategy strategy,
                                             std::size_t downstream_budget) {
  const CompressedTrace ct = run_ipcv(enc, x, cfg);
  const Matrix x_final = forward_full(enc, x).back();
  const Matrix s = downstream_prune(ct.final_full, strategy, downstream_budget);

  PerturbationResult r;
  r.pre_llm = hausdorff(x_final, ct.final_full);
  r.delta_llm = hausdorff(ct.final_full, s);
  r.combined = hausdorff(x_final, s);
  // Rounding slack only; the inequality is exact in real arithmetic.
  r.triangle_holds = r.combined <= r.pre_llm + r.delta_llm + 1e-12 * (1.0 + r.combined);
  return r;
}

}  // namespace ipcv
