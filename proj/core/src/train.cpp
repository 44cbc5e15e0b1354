// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#include "paxnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "binary_io.hpp"
#include "paxnet/error.hpp"
#include "paxnet/rng.hpp"
#include "parallel.hpp"

namespace paxnet {

namespace {

constexpr char kCheckpointMagic[4] = {'P', 'A', 'X', 'N'};
constexpr std::uint32_t kCheckpointVersion = 1;

std::string dirname_of(const std::string& path) {
  const std::size_t pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string() : path.substr(0, pos + 1);
}

bool is_absolute(const std::string& path) {
  return !path.empty() && path.front() == '/';
}

std::string format_loss(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.8g", v);
  return buf;
}

void write_model_config(std::ostream& os, const ModelConfig& c) {
  io::write_u32(os, static_cast<std::uint32_t>(c.hidden_dim));
  io::write_u32(os, static_cast<std::uint32_t>(c.num_layers));
  io::write_u32(os, static_cast<std::uint32_t>(c.n_rbf));
  io::write_u32(os, static_cast<std::uint32_t>(c.n_srbf));
  io::write_u32(os, static_cast<std::uint32_t>(c.n_shbf));
  io::write_f64(os, c.local_cutoff);
  io::write_f64(os, c.global_cutoff);
  io::write_u8(os, static_cast<std::uint8_t>(c.ablation));
}

ModelConfig read_model_config(std::istream& is) {
  ModelConfig c;
  c.hidden_dim = static_cast<int>(io::read_u32(is, "hidden_dim"));
  c.num_layers = static_cast<int>(io::read_u32(is, "num_layers"));
  c.n_rbf = static_cast<int>(io::read_u32(is, "n_rbf"));
  c.n_srbf = static_cast<int>(io::read_u32(is, "n_srbf"));
  c.n_shbf = static_cast<int>(io::read_u32(is, "n_shbf"));
  c.local_cutoff = io::read_f64(is, "local_cutoff");
  c.global_cutoff = io::read_f64(is, "global_cutoff");
  const std::uint8_t ablation = io::read_u8(is, "ablation");
  if (ablation > static_cast<std::uint8_t>(Ablation::no_global))
    throw IoError("corrupt checkpoint: bad ablation mode");
  c.ablation = static_cast<Ablation>(ablation);
  c.validate();
  return c;
}

}  // namespace

DatasetManifest parse_manifest(const std::string& text,
                               const std::string& base_dir) {
  DatasetManifest manifest;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 =
        t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw ParseError("expected 'path<TAB>rmsd<TAB>group'", line_no);
    ManifestEntry entry;
    entry.path = line.substr(0, t1);
    const std::string label = line.substr(t1 + 1, t2 - t1 - 1);
    entry.group = line.substr(t2 + 1);
    if (entry.path.empty()) throw ParseError("empty path", line_no);
    if (entry.group.empty()) throw ParseError("empty group id", line_no);
    try {
      std::size_t pos = 0;
      entry.rmsd = std::stod(label, &pos);
      if (pos != label.size()) throw std::invalid_argument(label);
    } catch (const std::exception&) {
      throw ParseError("malformed RMSD label '" + label + "'", line_no);
    }
    if (!(entry.rmsd >= 0.0))
      throw ParseError("negative RMSD label " + label, line_no);
    if (!base_dir.empty() && !is_absolute(entry.path))
      entry.path = base_dir + entry.path;
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_manifest(buf.str(), dirname_of(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void save_manifest(const std::string& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  char buf[64];
  for (const ManifestEntry& e : manifest.entries) {
    std::snprintf(buf, sizeof buf, "%.17g", e.rmsd);
    out << e.path << '\t' << buf << '\t' << e.group << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<std::pair<Structure, double>> synth_decoys(
    const Structure& native, const std::vector<double>& sigmas,
    int count_per_sigma, std::uint64_t seed) {
  if (native.atoms.size() < 2)
    throw StructureError("degenerate native structure");
  for (double s : sigmas) {
    if (!(s > 0.0)) throw DomainError("decoy sigma must be positive");
  }
  if (count_per_sigma < 1)
    throw DomainError("count_per_sigma must be positive");

  Rng rng(seed);
  std::vector<std::pair<Structure, double>> out;
  out.reserve(sigmas.size() * static_cast<std::size_t>(count_per_sigma));
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    for (int c = 0; c < count_per_sigma; ++c) {
      Structure decoy = native;
      decoy.id = native.id + "_s" + std::to_string(s) + "_d" +
                 std::to_string(c);
      for (Atom& a : decoy.atoms)
        for (int k = 0; k < 3; ++k)
          a.position[k] += rng.normal(0.0, sigmas[s]);
      const double label = kabsch_rmsd(native, decoy);
      out.emplace_back(std::move(decoy), label);
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  model.validate();
}

GraphFeatures load_entry_features(const ManifestEntry& entry,
                                  const ModelConfig& config) {
  try {
    const Structure s = filter_heavy_cno(read_structure_file(entry.path));
    return featurize(
        build_multiplex(s, config.local_cutoff, config.global_cutoff), config);
  } catch (const Error& e) {
    throw Error("entry '" + entry.path + "': " + e.what());
  }
}

std::vector<GraphFeatures> load_manifest_features(const DatasetManifest& m,
                                                  const ModelConfig& config,
                                                  int threads) {
  std::vector<GraphFeatures> feats(m.entries.size());
  detail::parallel_for(m.entries.size(), threads, [&](std::size_t i) {
    feats[i] = load_entry_features(m.entries[i], config);
  });
  return feats;
}

TrainResult train(const DatasetManifest& train_set, const TrainConfig& config,
                  std::ostream& log) {
  config.validate();
  if (train_set.entries.empty()) throw ConfigError("training manifest is empty");
  if (config.validation.entries.empty())
    throw ConfigError("validation manifest is empty");

  // Fail-fast preflight: every structure must parse and build a graph before
  // any optimization starts. Graphs are featurized once and cached.
  const std::vector<GraphFeatures> train_feats =
      load_manifest_features(train_set, config.model, config.threads);
  const std::vector<GraphFeatures> val_feats =
      load_manifest_features(config.validation, config.model, config.threads);

  ParamStore params = init_parameters(config.model, config.seed);
  AdamState adam(params, AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});
  Rng shuffle_rng(config.seed ^ 0x5DEECE66DULL);

  const auto evaluate = [&](const std::vector<GraphFeatures>& feats,
                            const DatasetManifest& manifest) {
    NoGradGuard no_grad;
    double total = 0.0;
    for (std::size_t i = 0; i < feats.size(); ++i) {
      const Tensor y = forward_tensor(feats[i], params, config.model);
      total += smooth_l1(y, manifest.entries[i].rmsd).item();
    }
    return total / static_cast<double>(feats.size());
  };

  TrainResult result;
  result.checkpoint.config = config.model;
  result.checkpoint.seed = config.seed;
  std::vector<std::size_t> order(train_feats.size());
  std::iota(order.begin(), order.end(), 0);
  int epochs_without_improvement = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      params.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        const Tensor y = forward_tensor(train_feats[idx], params, config.model);
        const Tensor loss =
            smooth_l1(y, train_set.entries[idx].rmsd);
        epoch_loss += loss.item();
        backward(loss, inv_batch);  // batch loss = mean over samples
      }
      adam.step(params);
    }
    epoch_loss /= static_cast<double>(order.size());
    const double val_loss = evaluate(val_feats, config.validation);
    result.train_losses.push_back(epoch_loss);
    result.val_losses.push_back(val_loss);
    result.epochs_run = epoch;
    log << epoch << '\t' << format_loss(epoch_loss) << '\t'
        << format_loss(val_loss) << '\n';

    if (val_loss < result.checkpoint.best_val_loss) {
      result.checkpoint.best_val_loss = val_loss;
      result.checkpoint.best_epoch = static_cast<std::uint32_t>(epoch);
      result.checkpoint.params = params.clone();
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
      if (epochs_without_improvement >= config.patience) break;
    }
  }
  return result;
}

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  io::write_bytes(os, kCheckpointMagic, 4);
  io::write_u32(os, kCheckpointVersion);
  write_model_config(os, ckpt.config);
  io::write_u32(os, ckpt.best_epoch);
  io::write_f64(os, ckpt.best_val_loss);
  io::write_u64(os, ckpt.seed);
  io::write_u8(os, ckpt.optimizer.has_value() ? 1 : 0);
  io::write_u32(os, static_cast<std::uint32_t>(ckpt.params.size()));
  for (const std::string& name : ckpt.params.names()) {
    const Tensor& t = ckpt.params.at(name);
    io::write_string(os, name);
    io::write_u32(os, static_cast<std::uint32_t>(t.shape().size()));
    for (std::int64_t d : t.shape())
      io::write_u64(os, static_cast<std::uint64_t>(d));
    for (double v : t.values()) io::write_f64(os, v);
  }
  if (ckpt.optimizer) {
    const auto& opt = *ckpt.optimizer;
    if (opt.m.size() != ckpt.params.size() ||
        opt.v.size() != ckpt.params.size())
      throw ConfigError("optimizer state does not match parameters");
    io::write_u64(os, static_cast<std::uint64_t>(opt.step));
    for (std::size_t p = 0; p < opt.m.size(); ++p) {
      for (double v : opt.m[p]) io::write_f64(os, v);
      for (double v : opt.v[p]) io::write_f64(os, v);
    }
  }
}

Checkpoint read_checkpoint(std::istream& is, const ModelConfig* expected) {
  char magic[4];
  io::read_bytes(is, magic, 4, "checkpoint magic");
  if (!std::equal(magic, magic + 4, kCheckpointMagic))
    throw IoError("corrupt checkpoint: bad magic");
  const std::uint32_t version = io::read_u32(is, "checkpoint version");
  if (version != kCheckpointVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.version = version;
  ckpt.config = read_model_config(is);
  if (expected) {
    const ModelConfig& e = *expected;
    const ModelConfig& c = ckpt.config;
    if (e.hidden_dim != c.hidden_dim || e.num_layers != c.num_layers ||
        e.n_rbf != c.n_rbf || e.n_srbf != c.n_srbf || e.n_shbf != c.n_shbf)
      throw ConfigError(
          "checkpoint architecture does not match the expected config "
          "(hidden_dim " +
          std::to_string(c.hidden_dim) + " vs " + std::to_string(e.hidden_dim) +
          ", ...)");
  }
  ckpt.best_epoch = io::read_u32(is, "best epoch");
  ckpt.best_val_loss = io::read_f64(is, "best val loss");
  ckpt.seed = io::read_u64(is, "seed");
  const bool has_optimizer = io::read_u8(is, "optimizer flag") != 0;

  const auto expected_shapes = parameter_shapes(ckpt.config);
  const std::uint32_t count = io::read_u32(is, "tensor count");
  if (count != expected_shapes.size())
    throw ConfigError("checkpoint has " + std::to_string(count) +
                      " tensors but config implies " +
                      std::to_string(expected_shapes.size()));
  for (const auto& [want_name, want_shape] : expected_shapes) {
    const std::string name = io::read_string(is, "tensor name");
    if (name != want_name)
      throw ConfigError("checkpoint tensor '" + name + "' where '" +
                        want_name + "' was expected");
    const std::uint32_t ndim = io::read_u32(is, "tensor rank");
    Shape shape(ndim);
    std::int64_t n = 1;
    for (auto& d : shape) {
      d = static_cast<std::int64_t>(io::read_u64(is, "tensor dim"));
      n *= d;
    }
    if (shape != want_shape)
      throw ConfigError("checkpoint tensor '" + name +
                        "' has a shape inconsistent with the stored config");
    std::vector<double> data(static_cast<std::size_t>(n));
    for (double& v : data) v = io::read_f64(is, "tensor data");
    ckpt.params.create(name, std::move(shape), std::move(data));
  }
  if (has_optimizer) {
    Checkpoint::OptimizerState opt;
    opt.step = static_cast<std::int64_t>(io::read_u64(is, "optimizer step"));
    for (const std::string& name : ckpt.params.names()) {
      const std::size_t n = ckpt.params.at(name).values().size();
      std::vector<double> m(n), v(n);
      for (double& x : m) x = io::read_f64(is, "adam m");
      for (double& x : v) x = io::read_f64(is, "adam v");
      opt.m.push_back(std::move(m));
      opt.v.push_back(std::move(v));
    }
    ckpt.optimizer = std::move(opt);
  }
  io::expect_end(is, "checkpoint");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path,
                           const ModelConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  return read_checkpoint(in, expected);
}

}  // namespace paxnet
