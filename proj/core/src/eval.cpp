// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#include "paxnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "paxnet/error.hpp"
#include "parallel.hpp"

namespace paxnet {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

double parse_number(const std::string& s, const char* what, long line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("malformed ") + what + " '" + s + "'",
                     line_no);
  }
}

}  // namespace

std::vector<double> score_manifest(const DatasetManifest& manifest,
                                   const Checkpoint& checkpoint,
                                   int threads) {
  std::vector<double> scores(manifest.entries.size(), 0.0);
  detail::parallel_for(manifest.entries.size(), threads, [&](std::size_t i) {
    const GraphFeatures feats =
        load_entry_features(manifest.entries[i], checkpoint.config);
    scores[i] = forward(feats, checkpoint.params, checkpoint.config);
  });
  return scores;
}

RankingReport build_ranking(const DatasetManifest& manifest,
                            const std::vector<double>& scores) {
  if (scores.size() != manifest.entries.size())
    throw ConfigError("score list does not match manifest");
  RankingReport report;
  std::map<std::string, std::size_t> group_index;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const ManifestEntry& e = manifest.entries[i];
    auto it = group_index.find(e.group);
    if (it == group_index.end()) {
      it = group_index.emplace(e.group, report.groups.size()).first;
      report.groups.push_back(GroupRanking{e.group, {}});
    }
    report.groups[it->second].models.push_back(
        RankedModel{e.path, scores[i], e.rmsd, 0});
  }
  for (GroupRanking& g : report.groups) {
    std::stable_sort(g.models.begin(), g.models.end(),
                     [](const RankedModel& a, const RankedModel& b) {
                       return a.score < b.score;
                     });
    for (std::size_t r = 0; r < g.models.size(); ++r)
      g.models[r].rank = static_cast<int>(r + 1);
  }
  return report;
}

NearNativeMetrics near_native_metrics(const RankingReport& report,
                                      double threshold,
                                      std::vector<int> top_ns) {
  if (report.groups.empty()) throw ConfigError("report has no groups");
  NearNativeMetrics metrics;
  metrics.threshold = threshold;
  metrics.top_ns = top_ns;

  double log_rank_sum = 0.0;
  int groups_with_near_native = 0;
  for (const GroupRanking& g : report.groups) {
    if (g.models.empty())
      throw ConfigError("group '" + g.group + "' is empty");
    GroupNearNative row;
    row.group = g.group;
    for (int n : top_ns) {
      const std::size_t limit =
          std::min(g.models.size(), static_cast<std::size_t>(n));
      bool hit = false;
      for (std::size_t r = 0; r < limit && !hit; ++r)
        hit = g.models[r].true_rmsd < threshold;
      row.top_n_success[n] = hit;
    }
    for (const RankedModel& m : g.models) {
      if (m.true_rmsd < threshold) {
        row.best_near_native_rank = m.rank;  // models sorted by rank
        break;
      }
    }
    if (row.best_near_native_rank) {
      ++groups_with_near_native;
      log_rank_sum += std::log(static_cast<double>(*row.best_near_native_rank));
    } else {
      ++metrics.groups_without_near_native;
    }
    metrics.groups.push_back(std::move(row));
  }

  for (int n : top_ns) {
    int hits = 0;
    for (const GroupNearNative& row : metrics.groups)
      hits += row.top_n_success.at(n) ? 1 : 0;
    metrics.top_n_fraction[n] =
        static_cast<double>(hits) / static_cast<double>(metrics.groups.size());
  }
  if (groups_with_near_native > 0)
    metrics.geometric_mean_rank = std::exp(
        log_rank_sum / static_cast<double>(groups_with_near_native));
  return metrics;
}

RmsdBandTable rmsd_band_table(const RankingReport& report,
                              std::vector<double> thresholds,
                              std::vector<int> top_ns) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw DomainError("band thresholds must be ascending");
  RmsdBandTable table;
  table.thresholds = thresholds;
  table.top_ns = top_ns;
  for (const GroupRanking& g : report.groups) {
    if (g.models.empty())
      throw ConfigError("group '" + g.group + "' is empty");
    for (int n : top_ns) {
      const std::size_t limit =
          std::min(g.models.size(), static_cast<std::size_t>(n));
      double best = g.models[0].true_rmsd;
      for (std::size_t r = 1; r < limit; ++r)
        best = std::min(best, g.models[r].true_rmsd);
      int band = 0;
      for (double t : thresholds) band += best >= t ? 1 : 0;
      table.rows.push_back(BandRow{g.group, n, best, band});
    }
  }
  return table;
}

std::string band_label(const std::vector<double>& thresholds, int band) {
  if (thresholds.empty()) return "all";
  if (band <= 0) return "<" + fmt_short(thresholds.front());
  if (band >= static_cast<int>(thresholds.size()))
    return ">" + fmt_short(thresholds.back());
  return fmt_short(thresholds[static_cast<std::size_t>(band - 1)]) + "-" +
         fmt_short(thresholds[static_cast<std::size_t>(band)]);
}

void write_report(std::ostream& os, const RankingReport& report) {
  os << "# group\tstructure_id\tscore\ttrue_rmsd\trank\n";
  for (const GroupRanking& g : report.groups)
    for (const RankedModel& m : g.models)
      os << g.group << '\t' << m.id << '\t' << fmt(m.score) << '\t'
         << fmt(m.true_rmsd) << '\t' << m.rank << '\n';
}

RankingReport read_report(std::istream& is) {
  RankingReport report;
  std::map<std::string, std::size_t> group_index;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 5)
      throw ParseError("expected 5 tab-separated report fields", line_no);
    RankedModel m;
    m.id = fields[1];
    m.score = parse_number(fields[2], "score", line_no);
    m.true_rmsd = parse_number(fields[3], "true RMSD", line_no);
    m.rank = static_cast<int>(parse_number(fields[4], "rank", line_no));
    auto it = group_index.find(fields[0]);
    if (it == group_index.end()) {
      it = group_index.emplace(fields[0], report.groups.size()).first;
      report.groups.push_back(GroupRanking{fields[0], {}});
    }
    report.groups[it->second].models.push_back(std::move(m));
  }
  for (GroupRanking& g : report.groups) {
    std::stable_sort(g.models.begin(), g.models.end(),
                     [](const RankedModel& a, const RankedModel& b) {
                       return a.rank < b.rank;
                     });
  }
  return report;
}

void write_report_file(const std::string& path, const RankingReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  write_report(out, report);
  if (!out) throw IoError("write failed: " + path);
}

RankingReport read_report_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open report: " + path);
  try {
    return read_report(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_metrics(std::ostream& os, const NearNativeMetrics& metrics,
                   const RmsdBandTable& bands) {
  os << "# near-native metrics, threshold " << fmt_short(metrics.threshold)
     << " A\n";
  os << "# group";
  for (int n : metrics.top_ns) os << "\ttop" << n;
  os << "\tbest_near_native_rank\n";
  for (const GroupNearNative& g : metrics.groups) {
    os << g.group;
    for (int n : metrics.top_ns) os << '\t' << (g.top_n_success.at(n) ? 1 : 0);
    os << '\t';
    if (g.best_near_native_rank)
      os << *g.best_near_native_rank;
    else
      os << "no_near_native";
    os << '\n';
  }
  for (int n : metrics.top_ns)
    os << "top" << n
       << "_success_fraction=" << fmt(metrics.top_n_fraction.at(n)) << '\n';
  if (metrics.geometric_mean_rank)
    os << "geometric_mean_rank=" << fmt(*metrics.geometric_mean_rank) << '\n';
  else
    os << "geometric_mean_rank=none\n";
  os << "groups_without_near_native=" << metrics.groups_without_near_native
     << '\n';

  os << "# lowest true RMSD among N best-scoring models, banded\n";
  os << "# group\tN\tmin_true_rmsd\tband\n";
  for (const BandRow& row : bands.rows)
    os << row.group << '\t' << row.top_n << '\t' << fmt(row.min_rmsd) << '\t'
       << band_label(bands.thresholds, row.band) << '\n';
}

}  // namespace paxnet
