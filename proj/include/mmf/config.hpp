#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mmf/data.hpp"
#include "mmf/encoders.hpp"
#include "mmf/errors.hpp"
#include "mmf/fusion.hpp"
#include "mmf/model.hpp"
#include "mmf/rng.hpp"
#include "mmf/synthetic.hpp"
#include "mmf/textio.hpp"
#include "mmf/train.hpp"

namespace mmf {

/// One modality's encoder choice. Kind "auto" resolves to mlp for vector
/// modalities and meanpool for sequences (lstm stays available by flag).
struct EncoderSpec {
  std::string kind = "auto";  // auto | mlp | lstm | meanpool
  std::size_t hidden = 8;
  std::size_t embedding = 4;  // d_m fed to fusion (before pad_one)
};

/// Everything one experiment needs: data source, split, model architecture,
/// training schedule. Parsed from a `key value` text file.
struct ExperimentConfig {
  // data: on-disk directory or the synthetic generator
  std::string dataset_dir;
  bool use_synthetic = false;
  SyntheticSpec synthetic;
  std::size_t synthetic_n = 1000;
  std::uint64_t synthetic_seed = 1;
  std::size_t synthetic_groups = 20;

  std::array<double, 3> split_ratios = {0.6, 0.2, 0.2};
  std::uint64_t split_seed = 3;

  FusionKind fusion = FusionKind::Mrrf;
  std::vector<std::size_t> ranks;  // empty = full padded dims (mrrf) / rank 1 list (lmf)
  std::size_t fusion_output = 8;   // h
  EncoderSpec encoder_default;
  std::vector<std::pair<std::size_t, EncoderSpec>> encoder_overrides;
  std::uint64_t model_seed = 5;

  TrainConfig train;
};

inline ExperimentConfig parse_experiment_config(const std::string& path) {
  ExperimentConfig cfg;
  const std::vector<std::string> lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = path + ":" + std::to_string(i + 1);
    std::string line = lines[i];
    if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
    const std::vector<std::string> toks = tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() < 2) throw ConfigError(where + ": expected 'key value'");
    const std::string& key = toks[0];
    const std::string& val = toks[1];
    try {
      if (key == "dataset") cfg.dataset_dir = val;
      else if (key == "synthetic") cfg.use_synthetic = (val == "true" || val == "1");
      else if (key == "synthetic.n") cfg.synthetic_n = parse_int(val, where);
      else if (key == "synthetic.seed") cfg.synthetic_seed = parse_int(val, where);
      else if (key == "synthetic.groups") cfg.synthetic_groups = parse_int(val, where);
      else if (key == "synthetic.latent_dim") cfg.synthetic.latent_dim = parse_int(val, where);
      else if (key == "synthetic.widths") cfg.synthetic.widths = parse_size_list(val, where);
      else if (key == "synthetic.names") cfg.synthetic.names = split_csv_line(val);
      else if (key == "synthetic.kinds") {
        cfg.synthetic.kinds.clear();
        for (const std::string& k : split_csv_line(val))
          cfg.synthetic.kinds.push_back(parse_modality_kind(k));
      } else if (key == "synthetic.rho") cfg.synthetic.rho = parse_double_list(val, where);
      else if (key == "synthetic.gamma") cfg.synthetic.gamma = parse_double(val, where);
      else if (key == "synthetic.gamma_cross")
        cfg.synthetic.gamma_cross = parse_double(val, where);
      else if (key == "synthetic.noise") cfg.synthetic.noise = parse_double(val, where);
      else if (key == "synthetic.seq_len") cfg.synthetic.seq_len = parse_int(val, where);
      else if (key == "synthetic.structure_seed")
        cfg.synthetic.structure_seed = parse_int(val, where);
      else if (key == "synthetic.task") {
        if (val == "regression") cfg.synthetic.label_kind = LabelKind::Regression;
        else if (val == "classification") cfg.synthetic.label_kind = LabelKind::Classification;
        else throw ConfigError(where + ": task must be regression|classification");
      } else if (key == "synthetic.classes") cfg.synthetic.class_count = parse_int(val, where);
      else if (key == "split") {
        const std::vector<double> r = parse_double_list(val, where);
        if (r.size() != 3) throw ConfigError(where + ": split needs 3 ratios");
        cfg.split_ratios = {r[0], r[1], r[2]};
      } else if (key == "split_seed") cfg.split_seed = parse_int(val, where);
      else if (key == "fusion") cfg.fusion = parse_fusion_kind(val);
      else if (key == "ranks") cfg.ranks = parse_size_list(val, where);
      else if (key == "h") cfg.fusion_output = parse_int(val, where);
      else if (key == "encoder") cfg.encoder_default.kind = val;
      else if (key == "encoder_hidden") cfg.encoder_default.hidden = parse_int(val, where);
      else if (key == "embedding") cfg.encoder_default.embedding = parse_int(val, where);
      else if (key.rfind("encoder.", 0) == 0) {
        const std::size_t m = static_cast<std::size_t>(
            parse_int(key.substr(8), where));
        EncoderSpec spec = cfg.encoder_default;
        spec.kind = val;
        cfg.encoder_overrides.emplace_back(m, spec);
      } else if (key == "model_seed") cfg.model_seed = parse_int(val, where);
      else if (key == "epochs") cfg.train.epochs = parse_int(val, where);
      else if (key == "batch") cfg.train.batch_size = parse_int(val, where);
      else if (key == "lr") cfg.train.lr = parse_double(val, where);
      else if (key == "train_seed") cfg.train.seed = parse_int(val, where);
      else if (key == "patience") cfg.train.patience = parse_int(val, where);
      else if (key == "selection") cfg.train.selection = parse_selection_metric(val);
      else throw ConfigError(where + ": unknown key '" + key + "'");
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  if (cfg.dataset_dir.empty() && !cfg.use_synthetic)
    throw ConfigError(path + ": set 'dataset <dir>' or 'synthetic true'");
  return cfg;
}

/// Materializes the experiment's dataset (generated or loaded from disk).
inline Dataset load_experiment_dataset(const ExperimentConfig& cfg) {
  if (cfg.use_synthetic)
    return generate_synthetic(cfg.synthetic, cfg.synthetic_n, cfg.synthetic_seed,
                              cfg.synthetic_groups);
  return load_dataset(cfg.dataset_dir);
}

inline EncoderSpec encoder_spec_for(const ExperimentConfig& cfg, std::size_t m) {
  EncoderSpec spec = cfg.encoder_default;
  for (const auto& [idx, over] : cfg.encoder_overrides)
    if (idx == m) spec = over;
  return spec;
}

inline std::unique_ptr<Encoder> build_encoder(const EncoderSpec& spec,
                                              const ModalitySpec& modality,
                                              const std::string& prefix,
                                              std::uint64_t seed) {
  std::string kind = spec.kind;
  if (kind == "auto")
    kind = modality.kind == ModalityKind::Vector ? "mlp" : "meanpool";
  if (kind == "mlp") {
    if (modality.kind != ModalityKind::Vector)
      throw ConfigError("encoder for modality '" + modality.name +
                        "': mlp requires a vector modality");
    return std::make_unique<MlpEncoder>(prefix, modality.width, spec.hidden,
                                        spec.embedding, seed);
  }
  if (modality.kind != ModalityKind::Sequence)
    throw ConfigError("encoder for modality '" + modality.name + "': " + kind +
                      " requires a sequence modality");
  if (kind == "lstm")
    return std::make_unique<LstmEncoder>(prefix, modality.width, spec.embedding, seed);
  if (kind == "meanpool")
    return std::make_unique<MeanPoolEncoder>(prefix, modality.width, spec.embedding,
                                             seed);
  throw ConfigError("unknown encoder kind '" + spec.kind + "' (auto|mlp|lstm|meanpool)");
}

/// Ranks for an mrrf layer: the configured ranks, or full padded dims when
/// unset; entries above the padded dim are clamped downstream.
inline std::vector<std::size_t> resolve_ranks(const ExperimentConfig& cfg,
                                              const std::vector<std::size_t>& padded) {
  if (cfg.ranks.empty()) return padded;
  if (cfg.ranks.size() == 1 && padded.size() > 1)
    return std::vector<std::size_t>(padded.size(), cfg.ranks[0]);
  if (cfg.ranks.size() != padded.size())
    throw ConfigError("ranks: expected " + std::to_string(padded.size()) +
                      " values, got " + std::to_string(cfg.ranks.size()));
  return cfg.ranks;
}

inline std::unique_ptr<FusionLayer> build_fusion(const ExperimentConfig& cfg,
                                                 const std::vector<std::size_t>& padded,
                                                 std::uint64_t seed) {
  switch (cfg.fusion) {
    case FusionKind::Concat:
      return std::make_unique<ConcatFusion>(padded, cfg.fusion_output, seed);
    case FusionKind::TensorProduct:
      return std::make_unique<TensorFusion>(padded, cfg.fusion_output, seed);
    case FusionKind::LowRank: {
      const std::size_t rank = cfg.ranks.empty() ? 1 : cfg.ranks[0];
      return std::make_unique<LmfFusion>(padded, rank, cfg.fusion_output, seed);
    }
    case FusionKind::Mrrf:
      return std::make_unique<MrrfFusion>(padded, resolve_ranks(cfg, padded),
                                          cfg.fusion_output, seed);
  }
  throw ConfigError("unknown fusion kind");
}

/// Assembles the model the config describes for the given dataset manifest.
/// Per-component seeds derive from model_seed so architectures are
/// reproducible independent of training.
inline Model build_model(const ExperimentConfig& cfg, const DatasetManifest& manifest) {
  std::vector<std::string> names;
  std::vector<std::unique_ptr<Encoder>> encoders;
  std::vector<std::size_t> padded;
  for (std::size_t m = 0; m < manifest.modalities.size(); ++m) {
    const ModalitySpec& modality = manifest.modalities[m];
    const EncoderSpec spec = encoder_spec_for(cfg, m);
    names.push_back(modality.name);
    encoders.push_back(build_encoder(spec, modality, modality.name,
                                     mix_seed({cfg.model_seed, 100, m})));
    padded.push_back(encoders.back()->output_dim() + 1);
  }
  auto fusion = build_fusion(cfg, padded, mix_seed({cfg.model_seed, 200}));
  const std::size_t output_dim = manifest.label_kind == LabelKind::Regression
                                     ? 1
                                     : manifest.class_count;
  return Model(std::move(names), std::move(encoders), std::move(fusion), output_dim,
               manifest.label_kind, mix_seed({cfg.model_seed, 300}));
}

}  // namespace mmf
