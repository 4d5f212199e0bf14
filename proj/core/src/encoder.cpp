#include "ipcv/encoder.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace ipcv {

namespace {

Matrix uniform_init(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (double& v : m.data()) v = rng.uniform(-limit, limit);
  return m;
}

}  // namespace

void EncoderConfig::validate() const {
  if (depth < 1) throw ConfigError("encoder: depth >= 1 violated");
  if (heads < 1) throw ConfigError("encoder: heads >= 1 violated");
  if (dim < heads) throw ConfigError("encoder: dim >= heads violated");
  if (dim % heads != 0) throw ConfigError("encoder: dim mod heads == 0 violated");
  if (ffn_mult < 1) throw ConfigError("encoder: ffn_mult >= 1 violated");
  if (!(eps > 0.0)) throw ConfigError("encoder: eps > 0 violated");
}

const Matrix& LayerTrace::at_layer(std::size_t layer) const {
  if (layer < first_layer || layer > last_layer())
    throw ContractViolation("LayerTrace: layer " + std::to_string(layer) + " outside trace");
  return states[layer - first_layer];
}

Encoder::Encoder(const EncoderConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t d = cfg_.dim;
  const std::size_t f = cfg_.ffn_width();
  blocks_.reserve(cfg_.depth);
  for (std::size_t l = 0; l < cfg_.depth; ++l) {
    Rng rng(cfg_.seed, l);
    BlockWeights w;
    w.wq = uniform_init(rng, d, d);
    w.wk = uniform_init(rng, d, d);
    w.wv = uniform_init(rng, d, d);
    w.wo = uniform_init(rng, d, d);
    w.w1 = uniform_init(rng, d, f);
    w.w2 = uniform_init(rng, f, d);
    w.ln1_gain.assign(d, 1.0);
    w.ln1_bias.assign(d, 0.0);
    w.ln2_gain.assign(d, 1.0);
    w.ln2_bias.assign(d, 0.0);
    blocks_.push_back(std::move(w));
  }
}

Matrix Encoder::attention_sublayer(std::size_t layer, const Matrix& h,
                                   std::optional<std::span<const std::size_t>> query_rows) const {
  if (h.cols() != cfg_.dim) throw ContractViolation("attention_sublayer: width mismatch");
  const BlockWeights& w = block(layer);
  const Matrix normed = layer_norm(h, w.ln1_gain, w.ln1_bias, cfg_.eps);

  std::vector<std::size_t> all_rows;
  std::span<const std::size_t> q_idx;
  if (query_rows) {
    q_idx = *query_rows;
  } else {
    all_rows.resize(h.rows());
    std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
    q_idx = all_rows;
  }

  const Matrix q = matmul(gather_rows(normed, q_idx), w.wq);
  const Matrix k = matmul(normed, w.wk);
  const Matrix v = matmul(normed, w.wv);

  const std::size_t head_dim = cfg_.dim / cfg_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const std::size_t n_kv = h.rows();

  Matrix mixed(q_idx.size(), cfg_.dim);
  Matrix scores(1, n_kv);
  for (std::size_t hd = 0; hd < cfg_.heads; ++hd) {
    const std::size_t c0 = hd * head_dim;
    for (std::size_t i = 0; i < q_idx.size(); ++i) {
      for (std::size_t j = 0; j < n_kv; ++j) {
        double dot = 0.0;
        for (std::size_t c = c0; c < c0 + head_dim; ++c) dot += q(i, c) * k(j, c);
        scores(0, j) = dot * scale;
      }
      const Matrix p = softmax_rows(scores);
      for (std::size_t j = 0; j < n_kv; ++j) {
        const double pj = p(0, j);
        for (std::size_t c = c0; c < c0 + head_dim; ++c) mixed(i, c) += pj * v(j, c);
      }
    }
  }
  return add(gather_rows(h, q_idx), matmul(mixed, w.wo));
}

Matrix Encoder::ffn_sublayer(std::size_t layer, const Matrix& h) const {
  if (h.cols() != cfg_.dim) throw ContractViolation("ffn_sublayer: width mismatch");
  const BlockWeights& w = block(layer);
  const Matrix normed = layer_norm(h, w.ln2_gain, w.ln2_bias, cfg_.eps);
  return add(h, matmul(gelu(matmul(normed, w.w1)), w.w2));
}

Matrix Encoder::block_forward(std::size_t layer, const Matrix& h) const {
  return ffn_sublayer(layer, attention_sublayer(layer, h));
}

Encoder build_encoder(const EncoderConfig& cfg) { return Encoder(cfg); }

LayerTrace forward_subset(const Encoder& enc, const Matrix& x_sub, std::size_t from_layer,
                          std::size_t to_layer) {
  if (from_layer > to_layer || to_layer > enc.depth())
    throw ContractViolation("forward_subset: need from_layer <= to_layer <= depth");
  if (x_sub.cols() != enc.dim()) throw ContractViolation("forward_subset: width mismatch");
  LayerTrace trace;
  trace.first_layer = from_layer;
  trace.states.reserve(to_layer - from_layer + 1);
  trace.states.push_back(x_sub);
  for (std::size_t l = from_layer; l < to_layer; ++l)
    trace.states.push_back(enc.block_forward(l, trace.states.back()));
  if (!trace.states.back().all_finite())
    throw std::runtime_error("forward: non-finite activations");
  return trace;
}

LayerTrace forward_full(const Encoder& enc, const Matrix& x) {
  return forward_subset(enc, x, 0, enc.depth());
}

void SyntheticInputSpec::validate() const {
  if (num_clusters < 1) throw ConfigError("input: num_clusters >= 1 violated");
  if (num_tokens < num_clusters) throw ConfigError("input: num_tokens >= num_clusters violated");
  if (!(cluster_spread >= 0.0)) throw ConfigError("input: cluster_spread >= 0 violated");
}

Matrix make_synthetic_input(const SyntheticInputSpec& spec, std::size_t dim) {
  constexpr double kCenterStep = 0.5;
  spec.validate();
  Rng center_rng(spec.seed, 0);
  Matrix centers(spec.num_clusters, dim);
  Vector walk(dim);
  for (double& v : walk) v = center_rng.normal();
  for (std::size_t c = 0; c < spec.num_clusters; ++c) {
    auto row = centers.row(c);
    for (std::size_t j = 0; j < dim; ++j) {
      row[j] = walk[j];
      walk[j] += kCenterStep * center_rng.normal();
    }
  }

  Rng jitter_rng(spec.seed, 1);
  Matrix x(spec.num_tokens, dim);
  for (std::size_t i = 0; i < spec.num_tokens; ++i) {
    auto c = centers.row(i % spec.num_clusters);
    auto r = x.row(i);
    for (std::size_t j = 0; j < dim; ++j) {
      r[j] = c[j];
      if (spec.cluster_spread > 0.0) r[j] += spec.cluster_spread * jitter_rng.normal();
    }
  }
  return x;
}

}  // namespace ipcv
