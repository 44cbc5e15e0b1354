// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paxnet/train.hpp"

namespace paxnet {

struct RankedModel {
  std::string id;
  double score = 0.0;      // predicted RMSD; lower reads as better
  double true_rmsd = 0.0;  // supervision label
  int rank = 0;            // 1-based, ascending score, stable ties
};

struct GroupRanking {
  std::string group;
  std::vector<RankedModel> models;  // sorted by rank
};

struct RankingReport {
  std::vector<GroupRanking> groups;  // in order of first appearance
};

// Deterministic scores for every entry, in manifest order.
std::vector<double> score_manifest(const DatasetManifest& manifest,
                                   const Checkpoint& checkpoint,
                                   int threads = 1);

// Groups entries, sorts each group by ascending score (stable), assigns
// dense 1-based ranks.
RankingReport build_ranking(const DatasetManifest& manifest,
                            const std::vector<double>& scores);

struct GroupNearNative {
  std::string group;
  std::map<int, bool> top_n_success;        // N -> a near-native among N best
  std::optional<int> best_near_native_rank; // empty when none exists
};

struct NearNativeMetrics {
  double threshold = 2.0;
  std::vector<int> top_ns;
  std::vector<GroupNearNative> groups;
  std::map<int, double> top_n_fraction;  // aggregate over groups
  // Geometric mean of best_near_native_rank over groups that have one;
  // empty when no group does.
  std::optional<double> geometric_mean_rank;
  int groups_without_near_native = 0;
};

NearNativeMetrics near_native_metrics(const RankingReport& report,
                                      double threshold = 2.0,
                                      std::vector<int> top_ns = {1, 10});

// Lowest true RMSD among the N best-scoring models, quantized into bands
// split at the thresholds; band b means thresholds[b-1] <= r < thresholds[b]
// (lower bound inclusive), band 0 means r < thresholds[0].
struct BandRow {
  std::string group;
  int top_n = 0;
  double min_rmsd = 0.0;
  int band = 0;
};

struct RmsdBandTable {
  std::vector<double> thresholds;
  std::vector<int> top_ns;
  std::vector<BandRow> rows;
};

RmsdBandTable rmsd_band_table(const RankingReport& report,
                              std::vector<double> thresholds = {2.0, 5.0, 10.0},
                              std::vector<int> top_ns = {1, 10, 100});

std::string band_label(const std::vector<double>& thresholds, int band);

// TSV round-trip: "group<TAB>id<TAB>score<TAB>true_rmsd<TAB>rank" rows under
// a '#'-prefixed header.
void write_report(std::ostream& os, const RankingReport& report);
RankingReport read_report(std::istream& is);
void write_report_file(const std::string& path, const RankingReport& report);
RankingReport read_report_file(const std::string& path);

// Human-readable metrics block followed by flat key=value lines.
void write_metrics(std::ostream& os, const NearNativeMetrics& metrics,
                   const RmsdBandTable& bands);

}  // namespace paxnet
