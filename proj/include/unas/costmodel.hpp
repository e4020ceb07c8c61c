// Copyright 2026 The unas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef UNAS_COSTMODEL_HPP_
#define UNAS_COSTMODEL_HPP_

#include <cstdint>
#include <vector>

#include "unas/decoder.hpp"

namespace unas {

struct LayerCost {
  std::uint64_t macs = 0;
  std::uint64_t params = 0;

  friend bool operator==(const LayerCost&, const LayerCost&) = default;
};

/// Analytic cost of one generator. flops_m is in millions of
/// multiply-accumulates per input image, bias adds included; normalization
/// and activations are not counted.
struct CostReport {
  double flops_m = 0.0;
  std::uint64_t macs = 0;
  std::uint64_t params = 0;
  double memory_mib = 0.0;  // params * 4 bytes / 2^20
  std::vector<LayerCost> layers;

  friend bool operator==(const CostReport&, const CostReport&) = default;
};

/// Same formula for conv and transposed conv; the latter is counted on its
/// output grid.
inline LayerCost layer_cost(const LayerSpec& l) {
  const std::uint64_t kk = static_cast<std::uint64_t>(l.kernel) * l.kernel;
  const std::uint64_t in = static_cast<std::uint64_t>(l.in_channels);
  const std::uint64_t out = static_cast<std::uint64_t>(l.out_channels);
  const std::uint64_t pixels =
      static_cast<std::uint64_t>(l.out_resolution) * l.out_resolution;
  return LayerCost{kk * in * out * pixels + out * pixels, kk * in * out + out};
}

inline CostReport cost_report(const ArchitectureGraph& a) {
  CostReport r;
  r.layers.reserve(a.layers.size());
  for (const LayerSpec& l : a.layers) {
    const LayerCost c = layer_cost(l);
    r.macs += c.macs;
    r.params += c.params;
    r.layers.push_back(c);
  }
  r.flops_m = static_cast<double>(r.macs) / 1e6;
  r.memory_mib = static_cast<double>(r.params) * 4.0 / 1048576.0;
  return r;
}

inline Json cost_to_json(const CostReport& r) {
  return Json{{"flops_m", r.flops_m},
              {"macs", r.macs},
              {"params", r.params},
              {"memory_mib", r.memory_mib}};
}

}  // namespace unas

#endif  // UNAS_COSTMODEL_HPP_
