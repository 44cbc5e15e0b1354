// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "paxnet/error.hpp"
#include "paxnet/eval.hpp"
#include "paxnet/graph.hpp"
#include "paxnet/model.hpp"
#include "paxnet/train.hpp"

namespace paxnet::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_kv(std::ostream& err, const std::string& key,
              const std::string& value) {
  err << "# " << key << "=" << value << "\n";
}

struct ModelFlags {
  int hidden_dim = 16;
  int layers = 1;
  double local_cutoff = 2.6;
  double global_cutoff = 20.0;
  std::string ablation = "full";

  void attach(CLI::App* cmd) {
    cmd->add_option("--hidden-dim", hidden_dim, "Hidden embedding width")
        ->capture_default_str();
    cmd->add_option("--layers", layers, "Number of message-passing layers")
        ->capture_default_str();
    cmd->add_option("--local-cutoff", local_cutoff,
                    "Local plex cutoff distance (A)")
        ->capture_default_str();
    cmd->add_option("--global-cutoff", global_cutoff,
                    "Global plex cutoff distance (A)")
        ->capture_default_str();
    cmd->add_option("--ablation", ablation,
                    "Model variant: full, no_fusion, no_local, no_global")
        ->capture_default_str();
  }

  ModelConfig to_config() const {
    ModelConfig config;
    config.hidden_dim = hidden_dim;
    config.num_layers = layers;
    config.local_cutoff = local_cutoff;
    config.global_cutoff = global_cutoff;
    const auto mode = ablation_from_string(ablation);
    if (!mode) throw ConfigError("unknown ablation mode '" + ablation + "'");
    config.ablation = *mode;
    config.validate();
    return config;
  }

  void echo(std::ostream& err) const {
    print_kv(err, "hidden_dim", std::to_string(hidden_dim));
    print_kv(err, "layers", std::to_string(layers));
    print_kv(err, "local_cutoff", fmt17(local_cutoff));
    print_kv(err, "global_cutoff", fmt17(global_cutoff));
    print_kv(err, "ablation", ablation);
  }
};

Structure read_input_structure(const std::string& path,
                               const std::string& format) {
  if (format == "auto") return read_structure_file(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open structure file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_structure(
      buf.str(),
      format == "xyz" ? StructureFormat::xyz : StructureFormat::pdb, path);
}

int run_build_graph(const std::string& input, const std::string& format,
                    double local_cutoff, double global_cutoff,
                    const std::string& out_path, std::ostream& out,
                    std::ostream& err) {
  print_kv(err, "command", "build-graph");
  print_kv(err, "input", input);
  print_kv(err, "local_cutoff", fmt17(local_cutoff));
  print_kv(err, "global_cutoff", fmt17(global_cutoff));
  print_kv(err, "out", out_path);
  const Structure s = filter_heavy_cno(read_input_structure(input, format));
  const MultiplexGraph g = build_multiplex(s, local_cutoff, global_cutoff);
  write_graph_file(out_path, g);
  out << input << "\tnodes=" << g.z.size()
      << "\tglobal_edges=" << g.global_edges.size()
      << "\tlocal_edges=" << g.local_edges.size()
      << "\tangles=" << g.angles.size() << "\n";
  return 0;
}

int run_synth(const std::string& native_path, const std::string& format,
              std::vector<double> sigmas, int count, std::uint64_t seed,
              const std::string& out_dir, const std::string& manifest_path,
              std::ostream& out, std::ostream& err) {
  print_kv(err, "command", "synth");
  print_kv(err, "native", native_path);
  {
    std::string list;
    for (std::size_t i = 0; i < sigmas.size(); ++i)
      list += (i ? "," : "") + fmt17(sigmas[i]);
    print_kv(err, "sigmas", list);
  }
  print_kv(err, "count", std::to_string(count));
  print_kv(err, "seed", std::to_string(seed));
  print_kv(err, "out_dir", out_dir);
  print_kv(err, "manifest", manifest_path);

  const Structure native = read_input_structure(native_path, format);
  const auto decoys = synth_decoys(native, sigmas, count, seed);
  fs::create_directories(out_dir);
  const std::string group =
      native.id.empty() ? std::string("native") : fs::path(native.id).stem().string();
  DatasetManifest manifest;
  char name[64];
  for (std::size_t i = 0; i < decoys.size(); ++i) {
    std::snprintf(name, sizeof name, "%s_%05zu.xyz", group.c_str(), i);
    const std::string path = out_dir + "/" + name;
    write_xyz_file(path, decoys[i].first);
    manifest.entries.push_back(ManifestEntry{path, decoys[i].second, group});
  }
  save_manifest(manifest_path, manifest);
  out << "decoys=" << decoys.size() << "\tmanifest=" << manifest_path << "\n";
  return 0;
}

int run_train(const std::string& train_manifest_path,
              const std::string& val_manifest_path, const ModelFlags& model,
              int epochs, int patience, int batch_size, double lr,
              std::uint64_t seed, int threads,
              const std::string& checkpoint_path, std::ostream& out,
              std::ostream& err) {
  print_kv(err, "command", "train");
  print_kv(err, "train_manifest", train_manifest_path);
  print_kv(err, "val_manifest", val_manifest_path);
  model.echo(err);
  print_kv(err, "epochs", std::to_string(epochs));
  print_kv(err, "patience", std::to_string(patience));
  print_kv(err, "batch_size", std::to_string(batch_size));
  print_kv(err, "lr", fmt17(lr));
  print_kv(err, "seed", std::to_string(seed));
  print_kv(err, "threads", std::to_string(threads));
  print_kv(err, "checkpoint", checkpoint_path);

  TrainConfig config;
  config.batch_size = batch_size;
  config.learning_rate = lr;
  config.max_epochs = epochs;
  config.patience = patience;
  config.seed = seed;
  config.threads = threads;
  config.model = model.to_config();
  config.validation = load_manifest(val_manifest_path);
  print_kv(err, "param_count", std::to_string(param_count(config.model)));

  const DatasetManifest train_set = load_manifest(train_manifest_path);
  const TrainResult result = train(train_set, config, out);
  save_checkpoint(result.checkpoint, checkpoint_path);
  out << "best_epoch\t" << result.checkpoint.best_epoch << "\n";
  out << "best_val_loss\t" << fmt17(result.checkpoint.best_val_loss) << "\n";
  return 0;
}

int run_score(const std::string& checkpoint_path, const std::string& input,
              const std::string& format, std::ostream& out,
              std::ostream& err) {
  print_kv(err, "command", "score");
  print_kv(err, "checkpoint", checkpoint_path);
  print_kv(err, "input", input);
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  print_kv(err, "ablation", to_string(ckpt.config.ablation));
  const Structure s = filter_heavy_cno(read_input_structure(input, format));
  const MultiplexGraph g =
      build_multiplex(s, ckpt.config.local_cutoff, ckpt.config.global_cutoff);
  const double score = forward(g, ckpt.params, ckpt.config);
  out << input << "\t" << fmt17(score) << "\n";
  return 0;
}

int run_rank(const std::string& checkpoint_path,
             const std::string& manifest_path, const std::string& out_path,
             int threads, std::ostream& out, std::ostream& err) {
  print_kv(err, "command", "rank");
  print_kv(err, "checkpoint", checkpoint_path);
  print_kv(err, "manifest", manifest_path);
  print_kv(err, "out", out_path);
  print_kv(err, "threads", std::to_string(threads));
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const DatasetManifest manifest = load_manifest(manifest_path);
  const std::vector<double> scores = score_manifest(manifest, ckpt, threads);
  const RankingReport report = build_ranking(manifest, scores);
  if (out_path.empty() || out_path == "-") {
    write_report(out, report);
  } else {
    write_report_file(out_path, report);
    out << "report=" << out_path << "\tgroups=" << report.groups.size()
        << "\n";
  }
  return 0;
}

int run_eval(const std::string& report_path, double threshold,
             std::ostream& out, std::ostream& err) {
  print_kv(err, "command", "eval");
  print_kv(err, "report", report_path);
  print_kv(err, "threshold", fmt17(threshold));
  const RankingReport report = read_report_file(report_path);
  const NearNativeMetrics metrics = near_native_metrics(report, threshold);
  const RmsdBandTable bands = rmsd_band_table(report);
  write_metrics(out, metrics, bands);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{
      "Multiplex graph neural network scoring for molecular structural "
      "models"};
  app.name("paxnet");
  app.require_subcommand(1);

  // build-graph
  auto* build_cmd = app.add_subcommand(
      "build-graph", "Build a two-plex graph and write the binary cache");
  std::string bg_input, bg_out, bg_format = "auto";
  double bg_local = 2.6, bg_global = 20.0;
  build_cmd->add_option("--input", bg_input, "Structure file (PDB or xyz)")
      ->required();
  build_cmd->add_option("--format", bg_format, "Input format: auto, pdb, xyz")
      ->capture_default_str();
  build_cmd->add_option("--local-cutoff", bg_local, "Local cutoff (A)")
      ->capture_default_str();
  build_cmd->add_option("--global-cutoff", bg_global, "Global cutoff (A)")
      ->capture_default_str();
  build_cmd->add_option("--out", bg_out, "Output graph cache path")->required();

  // synth
  auto* synth_cmd = app.add_subcommand(
      "synth", "Generate Gaussian decoys of a native structure");
  std::string sy_native, sy_out_dir = "decoys", sy_manifest = "decoys.tsv";
  std::string sy_format = "auto";
  std::vector<double> sy_sigmas{0.3, 0.6, 1.2, 2.5, 5.0};
  int sy_count = 10;
  std::uint64_t sy_seed = 0;
  synth_cmd->add_option("--native", sy_native, "Native structure file")
      ->required();
  synth_cmd->add_option("--format", sy_format, "Input format: auto, pdb, xyz")
      ->capture_default_str();
  synth_cmd
      ->add_option("--sigmas", sy_sigmas,
                   "Per-coordinate noise levels (A), one decoy set each")
      ->delimiter(',')
      ->capture_default_str();
  synth_cmd->add_option("--count", sy_count, "Decoys per sigma")
      ->capture_default_str();
  synth_cmd->add_option("--seed", sy_seed, "RNG seed")->capture_default_str();
  synth_cmd->add_option("--out-dir", sy_out_dir, "Directory for decoy files")
      ->capture_default_str();
  synth_cmd->add_option("--manifest", sy_manifest, "Output manifest path")
      ->capture_default_str();

  // train
  auto* train_cmd =
      app.add_subcommand("train", "Train a scorer on a labeled manifest");
  std::string tr_train, tr_val, tr_checkpoint = "model.ckpt";
  ModelFlags tr_model;
  int tr_epochs = 500, tr_patience = 25, tr_batch = 8, tr_threads = 1;
  double tr_lr = 1e-4;
  std::uint64_t tr_seed = 0;
  train_cmd->add_option("--train-manifest", tr_train, "Training manifest")
      ->required();
  train_cmd->add_option("--val-manifest", tr_val, "Validation manifest")
      ->required();
  train_cmd->add_option("--epochs", tr_epochs, "Maximum epochs")
      ->capture_default_str();
  train_cmd
      ->add_option("--patience", tr_patience,
                   "Epochs without validation improvement before stopping")
      ->capture_default_str();
  train_cmd->add_option("--batch-size", tr_batch, "Batch size")
      ->capture_default_str();
  train_cmd->add_option("--lr", tr_lr, "Adam learning rate")
      ->capture_default_str();
  tr_model.attach(train_cmd);
  train_cmd->add_option("--seed", tr_seed, "RNG seed")->capture_default_str();
  train_cmd->add_option("--threads", tr_threads, "Graph-building threads")
      ->capture_default_str();
  train_cmd->add_option("--checkpoint", tr_checkpoint, "Output checkpoint")
      ->capture_default_str();

  // score
  auto* score_cmd =
      app.add_subcommand("score", "Score one structure with a checkpoint");
  std::string sc_checkpoint, sc_input, sc_format = "auto";
  score_cmd->add_option("--checkpoint", sc_checkpoint, "Checkpoint path")
      ->required();
  score_cmd->add_option("--input", sc_input, "Structure file")->required();
  score_cmd->add_option("--format", sc_format, "Input format: auto, pdb, xyz")
      ->capture_default_str();

  // rank
  auto* rank_cmd = app.add_subcommand(
      "rank", "Score a manifest and write the ranking report");
  std::string rk_checkpoint, rk_manifest, rk_out;
  int rk_threads = 1;
  rank_cmd->add_option("--checkpoint", rk_checkpoint, "Checkpoint path")
      ->required();
  rank_cmd->add_option("--manifest", rk_manifest, "Manifest to score")
      ->required();
  rank_cmd->add_option("--out", rk_out, "Report path ('-' for stdout)")
      ->capture_default_str();
  rank_cmd->add_option("--threads", rk_threads, "Scoring threads")
      ->capture_default_str();

  // eval
  auto* eval_cmd = app.add_subcommand(
      "eval", "Compute ranking metrics from a report");
  std::string ev_report;
  double ev_threshold = 2.0;
  eval_cmd->add_option("--report", ev_report, "Ranking report path")
      ->required();
  eval_cmd->add_option("--threshold", ev_threshold, "Near-native RMSD (A)")
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto parsed = app.get_subcommands();
    out << (parsed.empty() ? app.help() : parsed.front()->help());
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (build_cmd->parsed())
      return run_build_graph(bg_input, bg_format, bg_local, bg_global, bg_out,
                             out, err);
    if (synth_cmd->parsed())
      return run_synth(sy_native, sy_format, sy_sigmas, sy_count, sy_seed,
                       sy_out_dir, sy_manifest, out, err);
    if (train_cmd->parsed())
      return run_train(tr_train, tr_val, tr_model, tr_epochs, tr_patience,
                       tr_batch, tr_lr, tr_seed, tr_threads, tr_checkpoint,
                       out, err);
    if (score_cmd->parsed())
      return run_score(sc_checkpoint, sc_input, sc_format, out, err);
    if (rank_cmd->parsed())
      return run_rank(rk_checkpoint, rk_manifest, rk_out, rk_threads, out, err);
    if (eval_cmd->parsed())
      return run_eval(ev_report, ev_threshold, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "usage error: no subcommand given\n";
  return 2;
}

}  // namespace paxnet::cli
