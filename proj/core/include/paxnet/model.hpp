// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "paxnet/graph.hpp"
#include "paxnet/tensor.hpp"

namespace paxnet {

enum class Ablation : std::uint8_t {
  full = 0,
  no_fusion = 1,  // attention replaced by an unweighted mean over plexes
  no_local = 2,   // local message passing skipped
  no_global = 3,  // global message passing skipped
};

const char* to_string(Ablation a);
std::optional<Ablation> ablation_from_string(std::string_view s);

struct ModelConfig {
  int hidden_dim = 16;
  int num_layers = 1;
  int n_rbf = 16;   // radial basis size, global plex
  int n_srbf = 6;   // radial basis size, local plex
  int n_shbf = 7;   // angle basis size
  double local_cutoff = 2.6;
  double global_cutoff = 20.0;
  Ablation ablation = Ablation::full;

  void validate() const;  // throws ConfigError
};

// Embedding rows exist for atomic numbers 1..9; C/N/O are the ones used.
inline constexpr int kMinEmbeddedElement = 1;
inline constexpr int kMaxEmbeddedElement = 9;

// Residual-block depth of the update stage, per plex per layer: the stack
// feeding the next message-passing stage and the stack feeding the fusion
// head. Each block is a two-layer MLP added to its input.
inline constexpr int kForwardResidualBlocks = 5;
inline constexpr int kFusionResidualBlocks = 4;

// Sine radial basis: component k (1-based) of n is
// sqrt(2/cutoff) * sin(k pi d / cutoff) / d. Zero at d = cutoff; requires
// d > 0.
std::vector<double> rbf_expand(double distance, double cutoff, int n);

// Cosine harmonics cos(l * theta), l = 0..n-1; theta clamped to [0, pi].
std::vector<double> angle_basis(double theta, int n);

// Parameter inventory implied by a config: (name, shape) pairs in creation
// order. Shared by initialization and checkpoint validation.
std::vector<std::pair<std::string, Shape>> parameter_shapes(
    const ModelConfig& config);

// Glorot-uniform weights, zero biases, scaled-normal embeddings; fully
// determined by the seed.
ParamStore init_parameters(const ModelConfig& config, std::uint64_t seed);

// Exact number of scalar parameters implied by the config.
std::int64_t param_count(const ModelConfig& config);

// Per-graph constants (basis expansions + index arrays), built once and
// reused across forward passes.
struct GraphFeatures {
  std::int64_t num_nodes = 0;
  std::vector<std::int32_t> z_row;  // embedding row per node
  std::vector<std::int32_t> global_src, global_dst;
  Tensor global_rbf;  // [Mg, n_rbf]
  std::vector<std::int32_t> local_src, local_dst;
  Tensor local_rbf;  // [Ml, n_srbf]
  std::vector<std::int32_t> triplet_msg, triplet_comp;
  Tensor angle_sbf;  // [K, n_shbf]
};

GraphFeatures featurize(const MultiplexGraph& g, const ModelConfig& config);

// One message-passing sweep over the global plex:
//   m_ji = MLP([h_j || h_i || e_ji]),  h_i <- h_i + sum_j m_ji * (W_e e_ji)
Tensor global_message_pass(const Tensor& h, const GraphFeatures& feats,
                           const ParamStore& params, const ModelConfig& config,
                           int layer);

// Local-plex sweep with angle-aware message refinement:
//   m'_ji = m_ji + sum over companion edges of m * (W_e e) * MLP(angle basis)
//   h_i  <- h_i + sum_j m'_ji * (W_e e_ji)
Tensor local_message_pass(const Tensor& h, const GraphFeatures& feats,
                          const ParamStore& params, const ModelConfig& config,
                          int layer);

struct UpdateOut {
  Tensor next;  // input to the following message-passing stage
  Tensor fuse;  // this plex's contribution to the fusion head
};

UpdateOut update_block(const Tensor& h, const ParamStore& params,
                       const ModelConfig& config, int layer,
                       std::string_view plex);

// Full differentiable pipeline: embed -> per layer (global pass -> update ->
// local pass -> update) -> attention fusion -> scalar.
Tensor forward_tensor(const GraphFeatures& feats, const ParamStore& params,
                      const ModelConfig& config);
Tensor forward_tensor(const MultiplexGraph& g, const ParamStore& params,
                      const ModelConfig& config);

// Inference-only convenience (no tape).
double forward(const GraphFeatures& feats, const ParamStore& params,
               const ModelConfig& config);
double forward(const MultiplexGraph& g, const ParamStore& params,
               const ModelConfig& config);

}  // namespace paxnet
