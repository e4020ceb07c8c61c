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

// Expansion of a genome into a layer-by-layer encoder/decoder description,
// and the JSON architecture document consumed by external trainers.
//
// Layout for L encoder stages (L = 8 by default):
//
//   E1 .. EL      downconv, E_k: c1[k-1] -> c1[k], side halves
//   DL .. D1      upconv,   D_k: in = D_{k+1}.out + skip_k * c1[k]
//                           out = c1[k-1] (D1 emits image channels)
//
// Skip k joins the output of E_k to the input of D_k by concatenation; skip 1
// is the outermost connection. The bottleneck pair EL/DL has no skip.

#ifndef UNAS_DECODER_HPP_
#define UNAS_DECODER_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "unas/error.hpp"
#include "unas/genome.hpp"

namespace unas {

using Json = nlohmann::ordered_json;

enum class LayerKind { kDownConv, kUpConv };

inline const char* layer_kind_name(LayerKind kind) {
  return kind == LayerKind::kDownConv ? "downconv" : "upconv";
}

struct LayerSpec {
  LayerKind kind = LayerKind::kDownConv;
  int index = 0;  // k in E_k / D_k
  int in_channels = 0;
  int out_channels = 0;
  int in_resolution = 0;
  int out_resolution = 0;
  int kernel = 4;
  int stride = 2;
  // Descriptive only; never searched and never costed.
  bool norm = false;
  std::string activation;

  std::string name() const {
    return (kind == LayerKind::kDownConv ? "E" : "D") + std::to_string(index);
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ArchitectureGraph {
  std::vector<LayerSpec> layers;  // E1..EL then DL..D1
  std::vector<int> skips;         // skips[k-1] wires E_k into D_k
  int image_channels = 3;
  int image_resolution = 256;
  Genome source_genome;

  int depth() const { return static_cast<int>(layers.size() / 2); }
  const LayerSpec& encoder(int k) const { return layers[k - 1]; }
  const LayerSpec& decoder(int k) const { return layers[layers.size() - k]; }

  friend bool operator==(const ArchitectureGraph&,
                         const ArchitectureGraph&) = default;
};

inline ArchitectureGraph decode(const Genome& g, int image_channels = 3,
                                int image_resolution = 256) {
  const int depth = static_cast<int>(g.channel_code.size());
  if (depth < 1 || g.skip_code.size() != static_cast<std::size_t>(depth - 1)) {
    throw Error(ErrorCode::kInvalidGenome,
                "genome needs L >= 1 channel genes and L - 1 skip bits");
  }
  for (int c : g.channel_code) {
    if (c < 1) throw Error(ErrorCode::kInvalidGenome, "channel width below 1");
  }
  for (int s : g.skip_code) {
    if (s != 0 && s != 1) throw Error(ErrorCode::kInvalidGenome, "skip bit not 0/1");
  }
  if (image_channels < 1) {
    throw Error(ErrorCode::kInvalidGenome, "image_channels must be >= 1");
  }
  if (depth >= 31 || image_resolution < (1 << depth) ||
      image_resolution % (1 << depth) != 0) {
    throw Error(ErrorCode::kResolutionNotDivisible,
                "image_resolution " + std::to_string(image_resolution) +
                    " is not a positive multiple of 2^" + std::to_string(depth));
  }

  ArchitectureGraph a;
  a.image_channels = image_channels;
  a.image_resolution = image_resolution;
  a.skips = g.skip_code;
  a.source_genome = g;
  a.layers.reserve(2 * depth);

  const auto& c1 = g.channel_code;
  int channels = image_channels;
  int side = image_resolution;
  for (int k = 1; k <= depth; ++k) {
    LayerSpec l;
    l.kind = LayerKind::kDownConv;
    l.index = k;
    l.in_channels = channels;
    l.out_channels = c1[k - 1];
    l.in_resolution = side;
    l.out_resolution = side / 2;
    l.norm = k != 1 && k != depth;
    l.activation = "leaky_relu";
    a.layers.push_back(l);
    channels = l.out_channels;
    side = l.out_resolution;
  }
  for (int k = depth; k >= 1; --k) {
    LayerSpec l;
    l.kind = LayerKind::kUpConv;
    l.index = k;
    l.in_channels = channels + (k < depth ? g.skip_code[k - 1] * c1[k - 1] : 0);
    l.out_channels = k >= 2 ? c1[k - 2] : image_channels;
    l.in_resolution = side;
    l.out_resolution = side * 2;
    l.norm = k != 1;
    l.activation = k == 1 ? "tanh" : "relu";
    a.layers.push_back(l);
    channels = l.out_channels;
    side = l.out_resolution;
  }
  return a;
}

/// Serializes to the architecture document:
///   {image_channels, image_resolution, layers:[...], skips:[...], genome}
inline Json export_architecture(const ArchitectureGraph& a) {
  Json layers = Json::array();
  for (const LayerSpec& l : a.layers) {
    layers.push_back(Json{{"kind", layer_kind_name(l.kind)},
                          {"index", l.index},
                          {"in_channels", l.in_channels},
                          {"out_channels", l.out_channels},
                          {"in_resolution", l.in_resolution},
                          {"out_resolution", l.out_resolution},
                          {"kernel", l.kernel},
                          {"stride", l.stride},
                          {"norm", l.norm},
                          {"activation", l.activation}});
  }
  return Json{{"image_channels", a.image_channels},
              {"image_resolution", a.image_resolution},
              {"layers", std::move(layers)},
              {"skips", a.skips},
              {"genome", format_genome(a.source_genome)}};
}

namespace detail {

inline const Json& require(const Json& obj, const char* key,
                           const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::kInvalidDocument,
                where + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

inline int require_int(const Json& obj, const char* key, const std::string& where) {
  const Json& v = require(obj, key, where);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::kInvalidDocument,
                where + ": field '" + key + "' must be an integer");
  }
  return v.get<int>();
}

}  // namespace detail

/// Parses and validates an architecture document. The document must be
/// exactly what decode() yields for its own genome under `space`; any
/// inconsistency is reported with the offending layer name.
inline ArchitectureGraph import_architecture(const Json& doc,
                                             const SearchSpace& space) {
  using detail::require;
  using detail::require_int;
  if (!doc.is_object()) {
    throw Error(ErrorCode::kInvalidDocument, "document must be an object");
  }
  const Json& genome_field = require(doc, "genome", "document");
  if (!genome_field.is_string()) {
    throw Error(ErrorCode::kInvalidDocument, "document: 'genome' must be a string");
  }
  const Genome g = parse_genome(genome_field.get<std::string>(), space);

  ArchitectureGraph a;
  a.image_channels = require_int(doc, "image_channels", "document");
  a.image_resolution = require_int(doc, "image_resolution", "document");
  a.source_genome = g;

  const Json& skips = require(doc, "skips", "document");
  if (!skips.is_array()) {
    throw Error(ErrorCode::kInvalidDocument, "document: 'skips' must be an array");
  }
  for (const Json& s : skips) {
    if (!s.is_number_integer()) {
      throw Error(ErrorCode::kInvalidDocument, "document: skip bits must be integers");
    }
    a.skips.push_back(s.get<int>());
  }

  const Json& layers = require(doc, "layers", "document");
  if (!layers.is_array()) {
    throw Error(ErrorCode::kInvalidDocument, "document: 'layers' must be an array");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Json& j = layers[i];
    const std::string where = "layers[" + std::to_string(i) + "]";
    LayerSpec l;
    const Json& kind = require(j, "kind", where);
    if (kind == "downconv") {
      l.kind = LayerKind::kDownConv;
    } else if (kind == "upconv") {
      l.kind = LayerKind::kUpConv;
    } else {
      throw Error(ErrorCode::kInvalidDocument, where + ": unknown kind");
    }
    l.index = require_int(j, "index", where);
    l.in_channels = require_int(j, "in_channels", where);
    l.out_channels = require_int(j, "out_channels", where);
    l.in_resolution = require_int(j, "in_resolution", where);
    l.out_resolution = require_int(j, "out_resolution", where);
    l.kernel = require_int(j, "kernel", where);
    l.stride = require_int(j, "stride", where);
    if (j.contains("norm")) l.norm = j.at("norm").get<bool>();
    if (j.contains("activation")) l.activation = j.at("activation").get<std::string>();
    a.layers.push_back(std::move(l));
  }

  const ArchitectureGraph expected =
      decode(g, a.image_channels, a.image_resolution);
  if (a.skips != expected.skips) {
    throw Error(ErrorCode::kInvalidDocument, "skips disagree with genome");
  }
  if (a.layers.size() != expected.layers.size()) {
    throw Error(ErrorCode::kInvalidDocument,
                "expected " + std::to_string(expected.layers.size()) + " layers");
  }
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    LayerSpec got = a.layers[i];
    const LayerSpec& want = expected.layers[i];
    // Metadata flags are optional in the document.
    if (!layers[i].contains("norm")) got.norm = want.norm;
    if (!layers[i].contains("activation")) got.activation = want.activation;
    if (got != want) {
      throw Error(ErrorCode::kInvalidDocument,
                  "layer " + want.name() + " is inconsistent with the genome");
    }
    a.layers[i] = got;
  }
  return a;
}

}  // namespace unas

#endif  // UNAS_DECODER_HPP_
