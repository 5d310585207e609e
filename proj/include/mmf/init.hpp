#pragma once

#include <cmath>
#include <cstddef>

#include "mmf/rng.hpp"
#include "mmf/tensor.hpp"

namespace mmf {

/// Scaled-uniform init: entries drawn from ±√(6/(fan_in+fan_out)). Keeps
/// initial activations O(1) across rank settings so sweeps compare fairly.
inline Tensor uniform_init(Shape shape, std::size_t fan_in, std::size_t fan_out,
                           Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

}  // namespace mmf
