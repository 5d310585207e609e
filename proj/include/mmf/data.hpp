#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mmf/errors.hpp"
#include "mmf/rng.hpp"
#include "mmf/tensor.hpp"
#include "mmf/textio.hpp"

namespace mmf {

enum class ModalityKind { Vector, Sequence };
enum class LabelKind { Regression, Classification };

inline const char* modality_kind_name(ModalityKind k) {
  return k == ModalityKind::Vector ? "vector" : "sequence";
}
inline ModalityKind parse_modality_kind(const std::string& s) {
  if (s == "vector") return ModalityKind::Vector;
  if (s == "sequence") return ModalityKind::Sequence;
  throw DataError("unknown modality kind '" + s + "'");
}

struct ModalitySpec {
  std::string name;
  ModalityKind kind = ModalityKind::Vector;
  std::size_t width = 0;
};

struct DatasetManifest {
  int version = 1;
  std::vector<ModalitySpec> modalities;
  LabelKind label_kind = LabelKind::Regression;
  std::size_t class_count = 0;  // classification only
  std::size_t sample_count = 0;
};

/// One modality observation: a fixed-length vector or a sequence of vectors.
using ModalityValue = std::variant<Tensor, std::vector<Tensor>>;

struct MultimodalSample {
  std::string id;
  std::string group_id;  // speaker analogue; splits never break a group
  std::vector<ModalityValue> modalities;
  double label = 0.0;  // class index for classification tasks
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<MultimodalSample> samples;

  std::size_t size() const { return samples.size(); }
};

// ---------------------------------------------------------------------------
// On-disk layout: <dir>/manifest.txt, one CSV per modality, labels.csv.
// All files UTF-8, '\n' endings, '.' decimal separator, values written in
// round-trip decimal form.
// ---------------------------------------------------------------------------

inline std::string manifest_text(const DatasetManifest& m) {
  std::string s = "mmf-dataset " + std::to_string(m.version) + "\n";
  for (const ModalitySpec& spec : m.modalities)
    s += "modality " + spec.name + " " + modality_kind_name(spec.kind) + " " +
         std::to_string(spec.width) + "\n";
  s += "label ";
  s += (m.label_kind == LabelKind::Regression ? "regression"
                                              : "classification " + std::to_string(m.class_count));
  s += "\n";
  s += "samples " + std::to_string(m.sample_count) + "\n";
  return s;
}

inline DatasetManifest parse_manifest(const std::string& path) {
  DatasetManifest m;
  const std::vector<std::string> lines = read_lines(path);
  bool saw_header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = path + ":" + std::to_string(i + 1);
    const std::vector<std::string> toks = tokenize(lines[i]);
    if (toks.empty() || toks[0][0] == '#') continue;
    if (!saw_header) {
      if (toks.size() != 2 || toks[0] != "mmf-dataset")
        throw DataError(where + ": expected 'mmf-dataset <version>' header");
      m.version = static_cast<int>(parse_int(toks[1], where));
      if (m.version != 1)
        throw DataError(where + ": unknown dataset format version " + toks[1]);
      saw_header = true;
    } else if (toks[0] == "modality") {
      if (toks.size() != 4) throw DataError(where + ": expected 'modality <name> <kind> <width>'");
      ModalitySpec spec;
      spec.name = toks[1];
      spec.kind = parse_modality_kind(toks[2]);
      spec.width = static_cast<std::size_t>(parse_int(toks[3], where));
      if (spec.width < 1) throw DataError(where + ": modality width must be >= 1");
      m.modalities.push_back(std::move(spec));
    } else if (toks[0] == "label") {
      if (toks.size() >= 2 && toks[1] == "regression") {
        m.label_kind = LabelKind::Regression;
      } else if (toks.size() == 3 && toks[1] == "classification") {
        m.label_kind = LabelKind::Classification;
        m.class_count = static_cast<std::size_t>(parse_int(toks[2], where));
      } else {
        throw DataError(where + ": expected 'label regression' or 'label classification <k>'");
      }
    } else if (toks[0] == "samples") {
      if (toks.size() != 2) throw DataError(where + ": expected 'samples <n>'");
      m.sample_count = static_cast<std::size_t>(parse_int(toks[1], where));
    } else {
      throw DataError(where + ": unknown manifest key '" + toks[0] + "'");
    }
  }
  if (!saw_header) throw DataError(path + ": empty or missing manifest header");
  if (m.modalities.empty()) throw DataError(path + ": manifest declares no modalities");
  return m;
}

inline void save_dataset(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  DatasetManifest manifest = ds.manifest;
  manifest.sample_count = ds.samples.size();
  write_text_file((fs::path(dir) / "manifest.txt").string(), manifest_text(manifest));

  for (std::size_t m = 0; m < manifest.modalities.size(); ++m) {
    const ModalitySpec& spec = manifest.modalities[m];
    std::string csv;
    if (spec.kind == ModalityKind::Vector) {
      csv = "id";
      for (std::size_t c = 0; c < spec.width; ++c) csv += ",c" + std::to_string(c);
      csv += "\n";
      for (const MultimodalSample& s : ds.samples) {
        const Tensor& v = std::get<Tensor>(s.modalities.at(m));
        csv += s.id;
        for (std::size_t c = 0; c < v.size(); ++c) csv += "," + format_double(v[c]);
        csv += "\n";
      }
    } else {
      csv = "id,step";
      for (std::size_t c = 0; c < spec.width; ++c) csv += ",c" + std::to_string(c);
      csv += "\n";
      for (const MultimodalSample& s : ds.samples) {
        const auto& seq = std::get<std::vector<Tensor>>(s.modalities.at(m));
        for (std::size_t t = 0; t < seq.size(); ++t) {
          csv += s.id + "," + std::to_string(t);
          for (std::size_t c = 0; c < seq[t].size(); ++c)
            csv += "," + format_double(seq[t][c]);
          csv += "\n";
        }
      }
    }
    write_text_file((fs::path(dir) / (spec.name + ".csv")).string(), csv);
  }

  std::string labels = "id,group_id,label\n";
  for (const MultimodalSample& s : ds.samples)
    labels += s.id + "," + s.group_id + "," + format_double(s.label) + "\n";
  write_text_file((fs::path(dir) / "labels.csv").string(), labels);
}

/// Accepts the dataset directory or the manifest.txt path itself.
inline Dataset load_dataset(const std::string& path) {
  namespace fs = std::filesystem;
  fs::path manifest_path(path);
  if (fs::is_directory(manifest_path)) manifest_path /= "manifest.txt";
  const fs::path dir = manifest_path.parent_path();

  Dataset ds;
  ds.manifest = parse_manifest(manifest_path.string());

  // labels.csv fixes sample identity and order.
  const std::string labels_path = (dir / "labels.csv").string();
  const std::vector<std::string> label_lines = read_lines(labels_path);
  if (label_lines.empty() || split_csv_line(label_lines[0]) !=
                                 std::vector<std::string>{"id", "group_id", "label"})
    throw DataError(labels_path + ":1: expected header 'id,group_id,label'");
  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 1; i < label_lines.size(); ++i) {
    if (label_lines[i].empty()) continue;
    const std::string where = labels_path + ":" + std::to_string(i + 1);
    const std::vector<std::string> f = split_csv_line(label_lines[i]);
    if (f.size() != 3) throw DataError(where + ": expected 3 columns, got " +
                                       std::to_string(f.size()));
    MultimodalSample s;
    s.id = f[0];
    s.group_id = f[1];
    s.label = parse_double(f[2], where);
    s.modalities.resize(ds.manifest.modalities.size());
    if (index_of.count(s.id)) throw DataError(where + ": duplicate sample id '" + s.id + "'");
    index_of[s.id] = ds.samples.size();
    ds.samples.push_back(std::move(s));
  }
  if (ds.manifest.sample_count != 0 && ds.manifest.sample_count != ds.samples.size())
    throw DataError(labels_path + ": manifest declares " +
                    std::to_string(ds.manifest.sample_count) + " samples, found " +
                    std::to_string(ds.samples.size()));

  for (std::size_t m = 0; m < ds.manifest.modalities.size(); ++m) {
    const ModalitySpec& spec = ds.manifest.modalities[m];
    const std::string mpath = (dir / (spec.name + ".csv")).string();
    const std::vector<std::string> lines = read_lines(mpath);
    if (lines.empty()) throw DataError(mpath + ": empty modality file");
    const std::size_t lead = spec.kind == ModalityKind::Vector ? 1 : 2;
    std::vector<char> seen(ds.samples.size(), 0);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const std::string where = mpath + ":" + std::to_string(i + 1);
      const std::vector<std::string> f = split_csv_line(lines[i]);
      if (f.size() != lead + spec.width)
        throw DataError(where + ": expected " + std::to_string(lead + spec.width) +
                        " columns for row '" + f[0] + "', got " + std::to_string(f.size()));
      auto it = index_of.find(f[0]);
      if (it == index_of.end()) throw DataError(where + ": unknown sample id '" + f[0] + "'");
      MultimodalSample& s = ds.samples[it->second];
      std::vector<double> row(spec.width);
      for (std::size_t c = 0; c < spec.width; ++c)
        row[c] = parse_double(f[lead + c], where);
      if (spec.kind == ModalityKind::Vector) {
        if (seen[it->second]) throw DataError(where + ": duplicate row for id '" + f[0] + "'");
        s.modalities[m] = Tensor::vector(std::move(row));
      } else {
        const long long step = parse_int(f[1], where);
        if (!seen[it->second]) s.modalities[m] = std::vector<Tensor>{};
        auto& seq = std::get<std::vector<Tensor>>(s.modalities[m]);
        if (static_cast<std::size_t>(step) != seq.size())
          throw DataError(where + ": out-of-order step " + f[1] + " for id '" + f[0] + "'");
        seq.push_back(Tensor::vector(std::move(row)));
      }
      seen[it->second] = 1;
    }
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
      if (!seen[i])
        throw DataError(mpath + ": no rows for sample id '" + ds.samples[i].id + "'");
  }
  ds.manifest.sample_count = ds.samples.size();
  return ds;
}

// ---------------------------------------------------------------------------
// Group-aware splitting: no group_id ever spans two splits.
// ---------------------------------------------------------------------------

inline std::array<Dataset, 3> split(const Dataset& ds, std::array<double, 3> ratios,
                                    std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw std::invalid_argument("split: ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split: ratios must sum to 1");

  // Distinct groups in first-appearance order, then a seeded shuffle.
  std::vector<std::string> groups;
  std::map<std::string, std::size_t> group_index;
  for (const MultimodalSample& s : ds.samples)
    if (!group_index.count(s.group_id)) {
      group_index[s.group_id] = groups.size();
      groups.push_back(s.group_id);
    }
  if (groups.size() < 3)
    throw DataError("split: need at least 3 groups, have " + std::to_string(groups.size()));

  Rng rng(seed, 0x5317);
  for (std::size_t i = groups.size(); i-- > 1;) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
    std::swap(groups[i], groups[j]);
  }

  // Largest-remainder apportionment of group counts, with a minimum of one
  // group per split.
  const std::size_t g = groups.size();
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(g);
    counts[i] = static_cast<std::size_t>(exact);
    frac[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  while (assigned < g) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i)
      if (frac[i] > frac[best]) best = i;
    ++counts[best];
    frac[best] = -1.0;
    ++assigned;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    while (counts[i] == 0) {
      std::size_t donor = 0;
      for (std::size_t j = 1; j < 3; ++j)
        if (counts[j] > counts[donor]) donor = j;
      --counts[donor];
      ++counts[i];
    }
  }

  std::map<std::string, std::size_t> split_of;
  std::size_t cursor = 0;
  for (std::size_t part = 0; part < 3; ++part)
    for (std::size_t i = 0; i < counts[part]; ++i) split_of[groups[cursor++]] = part;

  std::array<Dataset, 3> out;
  for (Dataset& d : out) d.manifest = ds.manifest;
  for (const MultimodalSample& s : ds.samples)
    out[split_of.at(s.group_id)].samples.push_back(s);
  for (Dataset& d : out) d.manifest.sample_count = d.samples.size();
  return out;
}

}  // namespace mmf
