// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "paxnet/model.hpp"

namespace paxnet {

struct ManifestEntry {
  std::string path;
  double rmsd = 0.0;  // supervision label, Angstrom
  std::string group;  // one group per source molecule
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

// TSV "path<TAB>rmsd<TAB>group"; blank lines and '#' comments skipped.
// Relative paths are resolved against the manifest's directory.
DatasetManifest load_manifest(const std::string& path);
DatasetManifest parse_manifest(const std::string& text,
                               const std::string& base_dir = "");
void save_manifest(const std::string& path, const DatasetManifest& manifest);

// Gaussian coordinate perturbations of a native structure; one decoy label is
// the superposed RMSD back to the native. Deterministic given the seed.
std::vector<std::pair<Structure, double>> synth_decoys(
    const Structure& native, const std::vector<double>& sigmas,
    int count_per_sigma, std::uint64_t seed);

struct TrainConfig {
  int batch_size = 8;
  double learning_rate = 1e-4;
  int max_epochs = 500;
  int patience = 25;  // epochs without validation improvement before stopping
  std::uint64_t seed = 0;
  int threads = 1;  // parallel width of the graph-building preflight
  ModelConfig model;
  DatasetManifest validation;

  void validate() const;
};

struct Checkpoint {
  std::uint32_t version = 1;
  ModelConfig config;
  ParamStore params;
  std::uint32_t best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;

  struct OptimizerState {
    std::int64_t step = 0;
    std::vector<std::vector<double>> m, v;  // aligned with params order
  };
  std::optional<OptimizerState> optimizer;
};

struct TrainResult {
  Checkpoint checkpoint;
  int epochs_run = 0;
  std::vector<double> train_losses;  // per epoch
  std::vector<double> val_losses;
};

// Full loop: fail-fast graph preflight, seeded per-epoch shuffling, mean
// smooth-L1 per batch, Adam, once-per-epoch validation, early stopping.
// Writes "epoch<TAB>train_loss<TAB>val_loss" per epoch to log.
TrainResult train(const DatasetManifest& train_set, const TrainConfig& config,
                  std::ostream& log);

// Versioned little-endian binary checkpoint ("PAXN"). Round-trips are
// bit-exact. load validates magic, version and tensor shapes; when expected
// is given its architecture fields must match the stored config.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path,
                           const ModelConfig* expected = nullptr);
void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is, const ModelConfig* expected = nullptr);

// Parse + C/N/O filter + graph build + featurize for one manifest entry;
// errors are rewrapped to name the entry.
GraphFeatures load_entry_features(const ManifestEntry& entry,
                                  const ModelConfig& config);

// Preflight over a whole manifest, optionally parallel; deterministic order.
std::vector<GraphFeatures> load_manifest_features(const DatasetManifest& m,
                                                  const ModelConfig& config,
                                                  int threads);

}  // namespace paxnet
