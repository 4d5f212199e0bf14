#include "ipcv/commands.hpp"

#include <cmath>
#include <concepts>
#include <string>

#include "ipcv/analysis.hpp"
#include "ipcv/baselines.hpp"
#include "ipcv/compressor.hpp"
#include "ipcv/cost.hpp"
#include "ipcv/encoder.hpp"

namespace ipcv {

namespace {

struct Trial {
  Encoder encoder;
  Matrix input;
};

Trial make_trial(const RunSpec& spec, std::size_t t) {
  EncoderConfig ec = spec.encoder;
  ec.seed = spec.encoder_seed(t);
  SyntheticInputSpec is = spec.input;
  is.seed = spec.input_seed(t);
  Encoder enc(ec);
  Matrix x = make_synthetic_input(is, ec.dim);
  return {std::move(enc), std::move(x)};
}

Report start_report(std::string_view command, const RunSpec& spec,
                    std::vector<std::string> columns) {
  spec.validate();
  Report r;
  r.meta = {{"command", std::string(command)},
            {"spec_hash", spec.hash()},
            {"tool_version", std::string(kToolVersion)}};
  r.columns = std::move(columns);
  return r;
}

template <std::unsigned_integral T>
Cell as_int(T v) {
  return static_cast<std::int64_t>(v);
}
Cell as_flag(bool b) { return static_cast<std::int64_t>(b ? 1 : 0); }

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

std::size_t integral_value(SweepAxis axis, double v) {
  if (!(v >= 0.0) || std::floor(v) != v)
    throw ConfigError("sweep: axis " + std::string(to_string(axis)) +
                      " needs non-negative integers, got " + format_double(v));
  return static_cast<std::size_t>(v);
}

CompressionConfig apply_sweep(CompressionConfig c, SweepAxis axis, double v) {
  switch (axis) {
    case SweepAxis::prune_layer: c.prune_layer = integral_value(axis, v); break;
    case SweepAxis::as_window: c.as_window = integral_value(axis, v); break;
    case SweepAxis::neighbors: c.neighbors = integral_value(axis, v); break;
    case SweepAxis::retain: c.retain = RetainRatio{v}; break;
  }
  return c;
}

}  // namespace

Report cmd_forward(const RunSpec& spec) {
  Report r = start_report("forward", spec,
                          {"trial", "layer", "tokens", "mean_row_norm", "max_row_norm", "frobenius"});
  for (std::size_t t = 0; t < spec.trials; ++t) {
    const Trial tr = make_trial(spec, t);
    const LayerTrace trace = forward_full(tr.encoder, tr.input);
    for (std::size_t l = 0; l < trace.states.size(); ++l) {
      const Vector norms = l2_norm_rows(trace.states[l]);
      r.add_row({as_int(t), as_int(l), as_int(trace.states[l].rows()), mean_of(norms),
                 max_of(norms), l2_norm(trace.states[l].data())});
    }
  }
  r.summary.emplace_back("trials", as_int(spec.trials));
  return r;
}

Report cmd_compress(const RunSpec& spec) {
  Report r = start_report("compress", spec,
                          {"trial", "tokens", "kept", "removed", "prune_layer", "as_window",
                           "neighbors", "as_mode", "final_rows", "keep_rows_exact",
                           "rel_frobenius_vs_vanilla", "hausdorff_vs_vanilla", "max_token_err"});
  double worst_hausdorff = 0.0;
  for (std::size_t t = 0; t < spec.trials; ++t) {
    const Trial tr = make_trial(spec, t);
    const Matrix vanilla = forward_full(tr.encoder, tr.input).back();
    const CompressedTrace ct = run_ipcv(tr.encoder, tr.input, spec.compress);
    const Matrix final_keep = gather_rows(ct.final_full, ct.partition.keep);
    const bool exact = final_keep == ct.keep_states.back();
    double max_err = 0.0;
    for (std::size_t i : ct.partition.rem)
      max_err = std::max(max_err, l2_distance(ct.final_full.row(i), vanilla.row(i)));
    const double hd = hausdorff(vanilla, ct.final_full);
    worst_hausdorff = std::max(worst_hausdorff, hd);
    r.add_row({as_int(t), as_int(tr.input.rows()), as_int(ct.partition.keep.size()),
               as_int(ct.partition.rem.size()), as_int(spec.compress.prune_layer),
               as_int(spec.compress.as_window), as_int(spec.compress.neighbors),
               std::string(to_string(spec.compress.as_mode)), as_int(ct.final_full.rows()),
               as_flag(exact), relative_frobenius_error(ct.final_full, vanilla), hd, max_err});
  }
  r.summary.emplace_back("max_hausdorff_vs_vanilla", worst_hausdorff);
  return r;
}

Report cmd_bounds(const RunSpec& spec) {
  Report r = start_report(
      "bounds", spec,
      {"trial", "removed", "B", "L_hat", "L_hat_pair", "L_hat_cert", "beta_hat", "eps_bar_rho",
       "tau_rho", "max_err", "mean_err", "bound_2B", "bound_2B_plus2", "bound_smooth",
       "alpha_hat", "bound_intrinsic", "hausdorff_recon", "tightness", "ok_per_token",
       "ok_hausdorff", "ok_smooth", "ok_intrinsic"});
  std::int64_t certified = 0;
  double max_tightness = 0.0;
  BoundOptions opts;
  opts.probes = spec.probes;
  for (std::size_t t = 0; t < spec.trials; ++t) {
    const Trial tr = make_trial(spec, t);
    Rng rng(spec.analysis_seed(t));
    const BoundReport b = measure_reconstruction_error(tr.encoder, tr.input, spec.compress, rng, opts);
    certified += b.satisfied.per_token && b.satisfied.hausdorff ? 1 : 0;
    max_tightness = std::max(max_tightness, b.tightness);
    r.add_row({as_int(t), as_int(b.removed), b.b, b.l_hat, b.l_hat_pair, b.l_hat_cert, b.beta_hat,
               b.eps_bar_rho, b.tau_rho, b.max_err, mean_of(b.per_token_err), b.bound_2b,
               b.bound_2b_plus2, b.bound_smooth, b.alpha_hat, b.bound_intrinsic,
               b.hausdorff_recon, b.tightness, as_flag(b.satisfied.per_token),
               as_flag(b.satisfied.hausdorff), as_flag(b.satisfied.smooth),
               as_flag(b.satisfied.intrinsic)});
  }
  r.summary.emplace_back("trials_certified", certified);
  r.summary.emplace_back("max_tightness", max_tightness);
  return r;
}

Report cmd_stats(const RunSpec& spec) {
  Report r = start_report("stats", spec,
                          {"trial", "token", "neighbor_l1", "random_l1", "neighbor_cos", "random_cos"});
  std::vector<double> all_near, all_rand;
  std::int64_t wins = 0;
  for (std::size_t t = 0; t < spec.trials; ++t) {
    const Trial tr = make_trial(spec, t);
    Rng rng(spec.analysis_seed(t));
    const SmoothnessStats st = delta_smoothness_stats(tr.encoder, tr.input, spec.compress, rng);
    for (std::size_t m = 0; m < st.tokens.size(); ++m) {
      r.add_row({as_int(t), as_int(st.tokens[m]), st.neighbor_l1[m], st.random_l1[m],
                 st.neighbor_cos[m], st.random_cos[m]});
    }
    all_near.insert(all_near.end(), st.neighbor_l1.begin(), st.neighbor_l1.end());
    all_rand.insert(all_rand.end(), st.random_l1.begin(), st.random_l1.end());
    wins += st.median_neighbor_l1 < st.median_random_l1 ? 1 : 0;
  }
  r.summary.emplace_back("median_neighbor_l1", lower_median(all_near));
  r.summary.emplace_back("median_random_l1", lower_median(all_rand));
  r.summary.emplace_back("trials_neighbor_closer", wins);
  return r;
}

Report cmd_flops(const RunSpec& spec) {
  Report r = start_report("flops", spec,
                          {"variant", "as_mode", "kept", "attn_proj", "attn_scores", "ffn", "ngr",
                           "total", "ratio_vs_vanilla"});
  r.meta.emplace_back("excluded", std::string(kCostExclusions));
  const std::size_t l = spec.input.num_tokens;
  for (PipelineVariant v : {PipelineVariant::vanilla, PipelineVariant::naive, PipelineVariant::ipcv}) {
    const CostReport c = count_flops(spec.encoder, l, spec.compress, v);
    const BlockCost s = c.sum();
    const std::size_t kept = v == PipelineVariant::vanilla ? l : spec.compress.keep_count(l);
    r.add_row({std::string(to_string(v)), std::string(to_string(spec.compress.as_mode)),
               as_int(kept), as_int(s.attn_proj), as_int(s.attn_scores), as_int(s.ffn),
               as_int(s.ngr), as_int(c.total), c.ratio_vs_vanilla});
  }
  return r;
}

Report cmd_ablate(const RunSpec& spec) {
  Report r = start_report("ablate", spec,
                          {"trial", "variant", "use_as", "use_reintegration", "reconstruction",
                           "rows", "hausdorff_vs_vanilla"});
  const std::vector<AblationVariant> variants = {
      {true, true, Reconstruction::ngr},
      {false, true, Reconstruction::ngr},
      {true, false, Reconstruction::ngr},
      {false, false, Reconstruction::ngr},
      {true, true, Reconstruction::copy_nearest},
  };
  std::vector<std::vector<double>> errors(variants.size());
  for (std::size_t t = 0; t < spec.trials; ++t) {
    const Trial tr = make_trial(spec, t);
    const Matrix vanilla = forward_full(tr.encoder, tr.input).back();
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const Matrix out = run_variant(tr.encoder, tr.input, spec.compress, variants[v]);
      const double hd = hausdorff(vanilla, out);
      errors[v].push_back(hd);
      r.add_row({as_int(t), variants[v].name(), as_flag(variants[v].use_as),
                 as_flag(variants[v].use_reintegration),
                 std::string(to_string(variants[v].reconstruction)), as_int(out.rows()), hd});
    }
  }
  for (std::size_t v = 0; v < variants.size(); ++v)
    r.summary.emplace_back("median_hausdorff." + variants[v].name(), lower_median(errors[v]));
  return r;
}

Report cmd_sweep(const RunSpec& spec, SweepAxis axis, const std::vector<double>& values) {
  Report r = start_report("sweep", spec,
                          {"axis", "value", "trial", "kept", "removed", "max_token_err",
                           "hausdorff_recon", "flops_total", "ratio_vs_vanilla"});
  r.meta.emplace_back("sweep_axis", std::string(to_string(axis)));
  if (values.empty()) throw ConfigError("sweep: no values");
  const std::size_t l = spec.input.num_tokens;
  for (double value : values) {
    const CompressionConfig cfg = apply_sweep(spec.compress, axis, value);
    cfg.validate(spec.encoder, l);
    const CostReport cost = count_flops(spec.encoder, l, cfg, PipelineVariant::ipcv);
    for (std::size_t t = 0; t < spec.trials; ++t) {
      const Trial tr = make_trial(spec, t);
      const Matrix vanilla = forward_full(tr.encoder, tr.input).back();
      const CompressedTrace ct = run_ipcv(tr.encoder, tr.input, cfg);
      double max_err = 0.0;
      for (std::size_t i : ct.partition.rem)
        max_err = std::max(max_err, l2_distance(ct.final_full.row(i), vanilla.row(i)));
      r.add_row({std::string(to_string(axis)), value, as_int(t), as_int(ct.partition.keep.size()),
                 as_int(ct.partition.rem.size()), max_err, hausdorff(vanilla, ct.final_full),
                 as_int(cost.total), cost.ratio_vs_vanilla});
    }
  }
  return r;
}

const std::vector<std::string_view>& command_names() {
  static const std::vector<std::string_view> names = {"forward", "compress", "bounds", "stats",
                                                      "flops",   "ablate",   "sweep"};
  return names;
}

Report run_command(std::string_view name, const RunSpec& spec) {
  if (name == "forward") return cmd_forward(spec);
  if (name == "compress") return cmd_compress(spec);
  if (name == "bounds") return cmd_bounds(spec);
  if (name == "stats") return cmd_stats(spec);
  if (name == "flops") return cmd_flops(spec);
  if (name == "ablate") return cmd_ablate(spec);
  if (name == "sweep") return cmd_sweep(spec, spec.sweep_axis, spec.sweep_values);
  throw UsageError("unknown command '" + std::string(name) + "'");
}

std::string render(const Report& report, OutputFormat format) {
  return format == OutputFormat::csv ? to_csv(report) : to_json(report);
}

}  // namespace ipcv
