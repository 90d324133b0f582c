#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace byzsgd {

/// Dense model-coordinate vector; used for both parameters w and gradients.
using ParamVector = Eigen::VectorXd;

using Bytes = std::vector<uint8_t>;

/// Mean over a set of equal-dimension vectors, accumulated sequentially in
/// the order given. Every mean in the codebase goes through here so that
/// different call sites produce bit-identical results on identical inputs.
template <typename Getter>
ParamVector sequential_mean(int count, Getter&& get) {
  ParamVector acc = get(0);
  for (int i = 1; i < count; ++i) acc += get(i);
  return acc / static_cast<double>(count);
}

}  // namespace byzsgd
