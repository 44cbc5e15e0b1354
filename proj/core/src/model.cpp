// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#include "paxnet/model.hpp"

#include <algorithm>
#include <cmath>

#include "paxnet/error.hpp"
#include "paxnet/rng.hpp"

namespace paxnet {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLeakySlope = 0.01;
constexpr int kNumEmbeddedElements =
    kMaxEmbeddedElement - kMinEmbeddedElement + 1;

std::string layer_prefix(int layer) {
  return "layer" + std::to_string(layer) + ".";
}

// Two-layer MLP, swish after each linear stage.
Tensor mlp2(const Tensor& x, const ParamStore& params,
            const std::string& prefix) {
  Tensor h = swish(add_rowwise(matmul(x, params.at(prefix + ".w1")),
                               params.at(prefix + ".b1")));
  return swish(add_rowwise(matmul(h, params.at(prefix + ".w2")),
                           params.at(prefix + ".b2")));
}

Tensor residual_block(const Tensor& x, const ParamStore& params,
                      const std::string& prefix) {
  return add(x, mlp2(x, params, prefix));
}

void push_mlp2(std::vector<std::pair<std::string, Shape>>& out,
               const std::string& prefix, std::int64_t in, std::int64_t hidden,
               std::int64_t out_dim) {
  out.emplace_back(prefix + ".w1", Shape{in, hidden});
  out.emplace_back(prefix + ".b1", Shape{hidden});
  out.emplace_back(prefix + ".w2", Shape{hidden, out_dim});
  out.emplace_back(prefix + ".b2", Shape{out_dim});
}

struct PlexSpec {
  const char* name;
  std::int64_t basis;  // radial basis width of this plex
};

}  // namespace

const char* to_string(Ablation a) {
  switch (a) {
    case Ablation::full:
      return "full";
    case Ablation::no_fusion:
      return "no_fusion";
    case Ablation::no_local:
      return "no_local";
    case Ablation::no_global:
      return "no_global";
  }
  return "unknown";
}

std::optional<Ablation> ablation_from_string(std::string_view s) {
  if (s == "full") return Ablation::full;
  if (s == "no_fusion") return Ablation::no_fusion;
  if (s == "no_local") return Ablation::no_local;
  if (s == "no_global") return Ablation::no_global;
  return std::nullopt;
}

void ModelConfig::validate() const {
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (num_layers < 1) throw ConfigError("num_layers must be >= 1");
  if (n_rbf < 1 || n_srbf < 1 || n_shbf < 1)
    throw ConfigError("basis sizes must be >= 1");
  if (!(local_cutoff > 0.0) || !(local_cutoff < global_cutoff))
    throw ConfigError("cutoffs must satisfy 0 < local < global");
}

std::vector<double> rbf_expand(double distance, double cutoff, int n) {
  if (!(distance > 0.0))
    throw DomainError("rbf_expand: distance must be positive");
  if (!(cutoff > 0.0)) throw DomainError("rbf_expand: cutoff must be positive");
  const double norm = std::sqrt(2.0 / cutoff);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k)
    out[static_cast<std::size_t>(k - 1)] =
        norm * std::sin(static_cast<double>(k) * kPi * distance / cutoff) /
        distance;
  return out;
}

std::vector<double> angle_basis(double theta, int n) {
  const double t = std::clamp(theta, 0.0, kPi);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l)
    out[static_cast<std::size_t>(l)] = std::cos(static_cast<double>(l) * t);
  return out;
}

std::vector<std::pair<std::string, Shape>> parameter_shapes(
    const ModelConfig& config) {
  config.validate();
  const std::int64_t f = config.hidden_dim;
  std::vector<std::pair<std::string, Shape>> out;
  out.emplace_back("embedding", Shape{kNumEmbeddedElements, f});
  for (int t = 0; t < config.num_layers; ++t) {
    const std::string lp = layer_prefix(t);
    const PlexSpec plexes[2] = {{"global", config.n_rbf},
                                {"local", config.n_srbf}};
    for (const PlexSpec& plex : plexes) {
      const std::string pp = lp + plex.name;
      push_mlp2(out, pp + ".msg", 2 * f + plex.basis, f, f);
      out.emplace_back(pp + ".edge_proj", Shape{plex.basis, f});
      if (plex.basis == config.n_srbf)
        push_mlp2(out, pp + ".angle", config.n_shbf, f, f);
      for (int b = 0; b < kForwardResidualBlocks; ++b)
        push_mlp2(out, pp + ".fwd" + std::to_string(b), f, f, f);
      for (int b = 0; b < kFusionResidualBlocks; ++b)
        push_mlp2(out, pp + ".fuse" + std::to_string(b), f, f, f);
    }
    for (const char* plex : {"global", "local"}) {
      out.emplace_back(lp + "fusion." + plex + ".attn", Shape{f, 1});
      out.emplace_back(lp + "fusion." + plex + ".out", Shape{f, 1});
    }
  }
  return out;
}

ParamStore init_parameters(const ModelConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  ParamStore params;
  for (const auto& [name, shape] : parameter_shapes(config)) {
    std::int64_t n = 1;
    for (std::int64_t d : shape) n *= d;
    std::vector<double> data(static_cast<std::size_t>(n), 0.0);
    if (name == "embedding") {
      for (double& x : data) x = rng.normal(0.0, 0.1);
    } else if (shape.size() == 2) {
      const double limit =
          std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
      for (double& x : data) x = rng.uniform(-limit, limit);
    }  // rank-1 biases stay zero
    params.create(name, shape, std::move(data));
  }
  return params;
}

std::int64_t param_count(const ModelConfig& config) {
  std::int64_t n = 0;
  for (const auto& [name, shape] : parameter_shapes(config)) {
    std::int64_t k = 1;
    for (std::int64_t d : shape) k *= d;
    n += k;
  }
  return n;
}

GraphFeatures featurize(const MultiplexGraph& g, const ModelConfig& config) {
  config.validate();
  GraphFeatures feats;
  feats.num_nodes = static_cast<std::int64_t>(g.num_nodes());
  if (feats.num_nodes == 0) throw StructureError("graph has no nodes");

  feats.z_row.reserve(g.z.size());
  for (int z : g.z) {
    if (z < kMinEmbeddedElement || z > kMaxEmbeddedElement)
      throw ConfigError("atomic number " + std::to_string(z) +
                        " outside embedding range (was the structure "
                        "C/N/O-filtered?)");
    feats.z_row.push_back(static_cast<std::int32_t>(z - kMinEmbeddedElement));
  }

  const auto edge_features = [](const std::vector<Edge>& edges, double cutoff,
                                int n_basis, std::vector<std::int32_t>& src,
                                std::vector<std::int32_t>& dst) {
    src.reserve(edges.size());
    dst.reserve(edges.size());
    std::vector<double> data;
    data.reserve(edges.size() * static_cast<std::size_t>(n_basis));
    for (const Edge& e : edges) {
      src.push_back(e.src);
      dst.push_back(e.dst);
      const std::vector<double> row = rbf_expand(e.distance, cutoff, n_basis);
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor::constant({static_cast<std::int64_t>(edges.size()), n_basis},
                            std::move(data));
  };
  feats.global_rbf =
      edge_features(g.global_edges, config.global_cutoff, config.n_rbf,
                    feats.global_src, feats.global_dst);
  feats.local_rbf =
      edge_features(g.local_edges, config.local_cutoff, config.n_srbf,
                    feats.local_src, feats.local_dst);

  feats.triplet_msg.reserve(g.angles.size());
  feats.triplet_comp.reserve(g.angles.size());
  std::vector<double> sbf;
  sbf.reserve(g.angles.size() * static_cast<std::size_t>(config.n_shbf));
  const auto num_local = static_cast<std::int32_t>(g.local_edges.size());
  for (const AngleTriplet& t : g.angles) {
    if (t.edge_a < 0 || t.edge_a >= num_local || t.edge_b < 0 ||
        t.edge_b >= num_local)
      throw IndexError("angle triplet references missing local edge");
    feats.triplet_msg.push_back(t.edge_a);
    feats.triplet_comp.push_back(t.edge_b);
    const std::vector<double> row = angle_basis(t.theta, config.n_shbf);
    sbf.insert(sbf.end(), row.begin(), row.end());
  }
  feats.angle_sbf = Tensor::constant(
      {static_cast<std::int64_t>(g.angles.size()), config.n_shbf},
      std::move(sbf));
  return feats;
}

Tensor global_message_pass(const Tensor& h, const GraphFeatures& feats,
                           const ParamStore& params, const ModelConfig& config,
                           int layer) {
  const std::string pp = layer_prefix(layer) + "global";
  const Tensor hj = gather_rows(h, feats.global_src);
  const Tensor hi = gather_rows(h, feats.global_dst);
  const Tensor m =
      mlp2(concat_cols({hj, hi, feats.global_rbf}), params, pp + ".msg");
  const Tensor phi = matmul(feats.global_rbf, params.at(pp + ".edge_proj"));
  return add(h, segment_sum(mul(m, phi), feats.global_dst, feats.num_nodes));
}

Tensor local_message_pass(const Tensor& h, const GraphFeatures& feats,
                          const ParamStore& params, const ModelConfig& config,
                          int layer) {
  const std::string pp = layer_prefix(layer) + "local";
  const auto num_edges = static_cast<std::int64_t>(feats.local_src.size());
  const Tensor hj = gather_rows(h, feats.local_src);
  const Tensor hi = gather_rows(h, feats.local_dst);
  const Tensor m =
      mlp2(concat_cols({hj, hi, feats.local_rbf}), params, pp + ".msg");
  const Tensor phi = matmul(feats.local_rbf, params.at(pp + ".edge_proj"));

  Tensor refined = m;
  if (!feats.triplet_msg.empty()) {
    const Tensor companion_m = gather_rows(m, feats.triplet_comp);
    const Tensor companion_phi = gather_rows(phi, feats.triplet_comp);
    const Tensor phi_theta = mlp2(feats.angle_sbf, params, pp + ".angle");
    const Tensor contrib = mul(mul(companion_m, companion_phi), phi_theta);
    refined = add(m, segment_sum(contrib, feats.triplet_msg, num_edges));
  }
  return add(h,
             segment_sum(mul(refined, phi), feats.local_dst, feats.num_nodes));
}

UpdateOut update_block(const Tensor& h, const ParamStore& params,
                       const ModelConfig& config, int layer,
                       std::string_view plex) {
  const std::string pp = layer_prefix(layer) + std::string(plex);
  UpdateOut out;
  out.next = h;
  for (int b = 0; b < kForwardResidualBlocks; ++b)
    out.next = residual_block(out.next, params, pp + ".fwd" + std::to_string(b));
  out.fuse = h;
  for (int b = 0; b < kFusionResidualBlocks; ++b)
    out.fuse = residual_block(out.fuse, params, pp + ".fuse" + std::to_string(b));
  return out;
}

namespace {

// Attention-weighted combination of the per-plex fusion embeddings of one
// layer into per-node scalars [N, 1].
Tensor fuse_layer(const std::vector<std::pair<std::string, Tensor>>& plexes,
                  const GraphFeatures& feats, const ParamStore& params,
                  const ModelConfig& config, int layer) {
  const std::string fp = layer_prefix(layer) + "fusion.";
  if (plexes.empty())
    throw ConfigError("fusion: no plex embeddings for layer " +
                      std::to_string(layer));
  if (config.ablation == Ablation::full && plexes.size() != 2)
    throw ConfigError("fusion: missing plex in non-ablated mode");

  std::vector<Tensor> outputs;
  std::vector<Tensor> logits;
  for (const auto& [name, h] : plexes) {
    outputs.push_back(matmul(h, params.at(fp + name + ".out")));
    if (config.ablation != Ablation::no_fusion)
      logits.push_back(
          leaky_relu(matmul(h, params.at(fp + name + ".attn")), kLeakySlope));
  }
  if (plexes.size() == 1)
    return outputs[0];  // single plex: attention weight is exactly 1
  if (config.ablation == Ablation::no_fusion)
    return scale(add(outputs[0], outputs[1]),
                 1.0 / static_cast<double>(outputs.size()));

  // Softmax across plexes per node: stack plex blocks and group rows by node.
  std::vector<std::int32_t> segments;
  segments.reserve(plexes.size() * static_cast<std::size_t>(feats.num_nodes));
  for (std::size_t p = 0; p < plexes.size(); ++p)
    for (std::int64_t i = 0; i < feats.num_nodes; ++i)
      segments.push_back(static_cast<std::int32_t>(i));
  const Tensor alpha =
      segment_softmax(concat_rows(logits), segments, feats.num_nodes);
  return segment_sum(mul(alpha, concat_rows(outputs)), std::move(segments),
                     feats.num_nodes);
}

}  // namespace

Tensor forward_tensor(const GraphFeatures& feats, const ParamStore& params,
                      const ModelConfig& config) {
  config.validate();
  Tensor h = gather_rows(params.at("embedding"), feats.z_row);
  std::vector<Tensor> per_layer;
  per_layer.reserve(static_cast<std::size_t>(config.num_layers));
  for (int t = 0; t < config.num_layers; ++t) {
    std::vector<std::pair<std::string, Tensor>> fuse_inputs;
    if (config.ablation != Ablation::no_global) {
      const Tensor hg = global_message_pass(h, feats, params, config, t);
      UpdateOut u = update_block(hg, params, config, t, "global");
      h = u.next;
      fuse_inputs.emplace_back("global", u.fuse);
    }
    if (config.ablation != Ablation::no_local) {
      const Tensor hl = local_message_pass(h, feats, params, config, t);
      UpdateOut u = update_block(hl, params, config, t, "local");
      h = u.next;
      fuse_inputs.emplace_back("local", u.fuse);
    }
    per_layer.push_back(fuse_layer(fuse_inputs, feats, params, config, t));
  }
  return mean_all(per_layer.size() == 1 ? per_layer[0]
                                        : concat_rows(per_layer));
}

Tensor forward_tensor(const MultiplexGraph& g, const ParamStore& params,
                      const ModelConfig& config) {
  return forward_tensor(featurize(g, config), params, config);
}

double forward(const GraphFeatures& feats, const ParamStore& params,
               const ModelConfig& config) {
  NoGradGuard no_grad;
  return forward_tensor(feats, params, config).item();
}

double forward(const MultiplexGraph& g, const ParamStore& params,
               const ModelConfig& config) {
  NoGradGuard no_grad;
  return forward_tensor(g, params, config).item();
}

}  // namespace paxnet
