#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mmf/autodiff.hpp"
#include "mmf/errors.hpp"
#include "mmf/tensor.hpp"
#include "mmf/textio.hpp"

namespace mmf {

/// Text checkpoint: a header line per parameter (name + shape) followed by
/// one round-trip decimal value per line. Reload is bitwise exact.
///
///   mmf-checkpoint 1
///   param fusion.core 3 2 2 4
///   <value>
///   ...
///   end
inline std::string checkpoint_text(std::span<const Parameter* const> params) {
  std::string s = "mmf-checkpoint 1\n";
  for (const Parameter* p : params) {
    s += "param " + p->name + " " + std::to_string(p->value.order());
    for (std::size_t d : p->value.shape().dims()) s += " " + std::to_string(d);
    s += "\n";
    for (std::size_t i = 0; i < p->value.size(); ++i)
      s += format_double(p->value[i]) + "\n";
    s += "end\n";
  }
  return s;
}

inline void save_checkpoint(const std::string& path,
                            std::span<const Parameter* const> params) {
  write_text_file(path, checkpoint_text(params));
}

inline std::map<std::string, Tensor> load_checkpoint_raw(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || tokenize(lines[0]) != std::vector<std::string>{"mmf-checkpoint", "1"})
    throw DataError(path + ":1: expected 'mmf-checkpoint 1' header");
  std::map<std::string, Tensor> out;
  std::size_t i = 1;
  while (i < lines.size()) {
    if (lines[i].empty()) {
      ++i;
      continue;
    }
    const std::string where = path + ":" + std::to_string(i + 1);
    const std::vector<std::string> toks = tokenize(lines[i]);
    if (toks.size() < 2 || toks[0] != "param")
      throw DataError(where + ": expected 'param <name> <order> <dims...>'");
    const std::string name = toks[1];
    if (toks.size() < 3) throw DataError(where + ": missing tensor order");
    const auto order = static_cast<std::size_t>(parse_int(toks[2], where));
    if (toks.size() != 3 + order)
      throw DataError(where + ": expected " + std::to_string(order) + " dims");
    std::vector<std::size_t> dims(order);
    for (std::size_t d = 0; d < order; ++d)
      dims[d] = static_cast<std::size_t>(parse_int(toks[3 + d], where));
    Tensor t((Shape(dims)));
    ++i;
    for (std::size_t k = 0; k < t.size(); ++k, ++i) {
      if (i >= lines.size())
        throw DataError(path + ": truncated values for parameter '" + name + "'");
      t[k] = parse_double(lines[i], path + ":" + std::to_string(i + 1));
    }
    if (i >= lines.size() || lines[i] != "end")
      throw DataError(path + ":" + std::to_string(i + 1) +
                      ": expected 'end' after parameter '" + name + "'");
    ++i;
    if (out.count(name)) throw DataError(path + ": duplicate parameter '" + name + "'");
    out.emplace(name, std::move(t));
  }
  return out;
}

/// Loads values into existing parameters, matched by name; every parameter
/// must be present with the exact recorded shape, and no extras may remain.
inline void load_checkpoint(const std::string& path, std::span<Parameter* const> params) {
  std::map<std::string, Tensor> raw = load_checkpoint_raw(path);
  for (Parameter* p : params) {
    auto it = raw.find(p->name);
    if (it == raw.end())
      throw DataError(path + ": missing parameter '" + p->name + "'");
    if (it->second.shape() != p->value.shape())
      throw DataError(path + ": parameter '" + p->name + "' has shape " +
                      it->second.shape().str() + ", model expects " +
                      p->value.shape().str());
    p->value = std::move(it->second);
    raw.erase(it);
  }
  if (!raw.empty())
    throw DataError(path + ": checkpoint has unknown parameter '" +
                    raw.begin()->first + "'");
}

}  // namespace mmf
