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

// Search space and genome representation for U-Net generator variants.
//
// A genome is a pair of fixed-length codes: the channel code lists the output
// width of every encoder stage, and the skip code holds one keep/drop bit per
// mirrored encoder/decoder pair (the bottleneck pair has none). The canonical
// text form is "n1,...,nL|s1,...,sL-1" with no whitespace.

#ifndef UNAS_GENOME_HPP_
#define UNAS_GENOME_HPP_

#include <algorithm>
#include <array>
#include <charconv>
#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "unas/error.hpp"
#include "unas/rng.hpp"

namespace unas {

inline constexpr std::array<int, 2> kSkipChoices = {0, 1};

struct SearchSpace {
  std::vector<int> channel_choices;
  int channel_code_length = 0;
  int skip_code_length = 0;

  friend bool operator==(const SearchSpace&, const SearchSpace&) = default;
};

struct Genome {
  std::vector<int> channel_code;
  std::vector<int> skip_code;

  friend auto operator<=>(const Genome&, const Genome&) = default;
};

inline void validate_space(const SearchSpace& space) {
  if (space.channel_choices.empty()) {
    throw Error(ErrorCode::kInvalidSpace, "channel_choices is empty");
  }
  for (std::size_t i = 0; i < space.channel_choices.size(); ++i) {
    if (space.channel_choices[i] < 1) {
      throw Error(ErrorCode::kInvalidSpace, "channel choice below 1");
    }
    if (i > 0 && space.channel_choices[i] <= space.channel_choices[i - 1]) {
      throw Error(ErrorCode::kInvalidSpace,
                  "channel_choices must be strictly increasing");
    }
  }
  if (space.channel_code_length < 1) {
    throw Error(ErrorCode::kInvalidSpace, "channel_code_length must be >= 1");
  }
  if (space.skip_code_length != space.channel_code_length - 1) {
    throw Error(ErrorCode::kInvalidSpace,
                "skip_code_length must equal channel_code_length - 1");
  }
}

/// Widths {64,128,256,512}, 8 encoder stages, 7 skips.
inline SearchSpace default_space() {
  return SearchSpace{{64, 128, 256, 512}, 8, 7};
}

/// |channel_choices|^L_c1 * 2^L_c2. Throws arithmetic-overflow if the count
/// does not fit in 64 bits.
inline std::uint64_t search_space_size(const SearchSpace& space) {
  validate_space(space);
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 1;
  auto multiply = [&](std::uint64_t factor) {
    if (factor != 0 && total > kMax / factor) {
      throw Error(ErrorCode::kArithmeticOverflow,
                  "search space size exceeds 64 bits");
    }
    total *= factor;
  };
  for (int i = 0; i < space.channel_code_length; ++i) {
    multiply(space.channel_choices.size());
  }
  for (int i = 0; i < space.skip_code_length; ++i) multiply(2);
  return total;
}

inline bool contains_channel(const SearchSpace& space, int value) {
  return std::binary_search(space.channel_choices.begin(),
                            space.channel_choices.end(), value);
}

inline void validate_genome(const Genome& g, const SearchSpace& space) {
  if (g.channel_code.size() != static_cast<std::size_t>(space.channel_code_length)) {
    throw Error(ErrorCode::kWrongLength,
                "c1 has " + std::to_string(g.channel_code.size()) +
                    " values, expected " +
                    std::to_string(space.channel_code_length));
  }
  if (g.skip_code.size() != static_cast<std::size_t>(space.skip_code_length)) {
    throw Error(ErrorCode::kWrongLength,
                "c2 has " + std::to_string(g.skip_code.size()) +
                    " values, expected " + std::to_string(space.skip_code_length));
  }
  for (std::size_t i = 0; i < g.channel_code.size(); ++i) {
    if (!contains_channel(space, g.channel_code[i])) {
      throw Error(ErrorCode::kValueNotInAlphabet,
                  "c1 position " + std::to_string(i + 1) + " holds " +
                      std::to_string(g.channel_code[i]));
    }
  }
  for (std::size_t i = 0; i < g.skip_code.size(); ++i) {
    if (g.skip_code[i] != 0 && g.skip_code[i] != 1) {
      throw Error(ErrorCode::kValueNotInAlphabet,
                  "c2 position " + std::to_string(i + 1) + " holds " +
                      std::to_string(g.skip_code[i]));
    }
  }
}

inline bool is_valid_genome(const Genome& g, const SearchSpace& space) {
  try {
    validate_genome(g, space);
    return true;
  } catch (const Error&) {
    return false;
  }
}

/// The pix2pix U-Net generator: widths double up to 512 and every skip is
/// kept. Only defined for the default space.
inline Genome baseline_genome(const SearchSpace& space) {
  if (space != default_space()) {
    throw Error(ErrorCode::kUnsupportedSpace,
                "the baseline genome exists only for the default space");
  }
  return Genome{{64, 128, 256, 512, 512, 512, 512, 512}, {1, 1, 1, 1, 1, 1, 1}};
}

/// i.i.d. uniform draws with replacement per position; c1 first, then c2.
inline Genome random_genome(const SearchSpace& space, Rng& rng) {
  Genome g;
  g.channel_code.reserve(space.channel_code_length);
  for (int i = 0; i < space.channel_code_length; ++i) {
    g.channel_code.push_back(
        space.channel_choices[rng.uniform_index(space.channel_choices.size())]);
  }
  g.skip_code.reserve(space.skip_code_length);
  for (int i = 0; i < space.skip_code_length; ++i) {
    g.skip_code.push_back(static_cast<int>(rng.uniform_index(2)));
  }
  return g;
}

inline std::string format_genome(const Genome& g) {
  std::string out;
  for (std::size_t i = 0; i < g.channel_code.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(g.channel_code[i]);
  }
  out += '|';
  for (std::size_t i = 0; i < g.skip_code.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(g.skip_code[i]);
  }
  return out;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  if (text.empty()) return parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::vector<int> parse_code(std::string_view text, std::string_view code,
                                   std::size_t expected) {
  const auto tokens = split(text, ',');
  if (tokens.size() != expected) {
    throw Error(ErrorCode::kWrongLength,
                std::string(code) + " has " + std::to_string(tokens.size()) +
                    " values, expected " + std::to_string(expected));
  }
  std::vector<int> values;
  values.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string_view token = tokens[i];
    const std::string where = std::string(code) + " position " +
                              std::to_string(i + 1) + " ('" +
                              std::string(token) + "')";
    if (token.empty() || !std::all_of(token.begin(), token.end(), [](char c) {
          return c >= '0' && c <= '9';
        })) {
      throw Error(ErrorCode::kMalformedSyntax, "bad token at " + where);
    }
    int value = 0;
    const auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw Error(ErrorCode::kMalformedSyntax, "bad token at " + where);
    }
    values.push_back(value);
  }
  return values;
}

}  // namespace detail

/// Parses the canonical "c1|c2" form. Errors name the offending position
/// (1-based) and token.
inline Genome parse_genome(std::string_view text, const SearchSpace& space) {
  validate_space(space);
  const auto halves = detail::split(text, '|');
  if (halves.size() != 2) {
    throw Error(ErrorCode::kMalformedSyntax,
                "expected exactly one '|' separating c1 and c2 in '" +
                    std::string(text) + "'");
  }
  Genome g;
  g.channel_code = detail::parse_code(halves[0], "c1", space.channel_code_length);
  g.skip_code = detail::parse_code(halves[1], "c2", space.skip_code_length);
  validate_genome(g, space);
  return g;
}

}  // namespace unas

#endif  // UNAS_GENOME_HPP_
