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

#ifndef UNAS_RNG_HPP_
#define UNAS_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace unas {

/// 64-bit FNV-1a. Used wherever a hash must be stable across builds and
/// platforms (checkpoint integrity, per-genome seed derivation).
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Mixes a run seed with a tag into an independent child seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  return splitmix64(fnv1a64(tag, splitmix64(seed)));
}

/// Seeded random stream with a portable sampling layer on top of
/// std::mt19937_64. The standard distributions are implementation-defined,
/// so integer, uniform and normal draws are derived from raw engine output
/// here to keep runs bit-identical across standard libraries. The full state
/// round-trips through state() / from_state().
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = engine_();
      if (x >= threshold) return x % n;
    }
  }

  /// Box-Muller without a cached second variate, so no hidden state.
  double normal(double mean, double sigma) {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double z =
        std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + sigma * z;
  }

  /// "mt19937_64:" followed by the engine words as fixed-width hex.
  std::string state() const {
    std::ostringstream words;
    words << engine_;
    std::string out(kAlgorithm);
    out += ':';
    std::istringstream in(words.str());
    unsigned long long word = 0;
    char buf[17];
    while (in >> word) {
      std::snprintf(buf, sizeof(buf), "%016llx", word);
      out += buf;
    }
    return out;
  }

  /// Returns false when the text is not a state produced by state().
  static bool from_state(std::string_view text, Rng& out) {
    const std::string prefix = std::string(kAlgorithm) + ":";
    if (text.substr(0, prefix.size()) != prefix) return false;
    std::string_view hex = text.substr(prefix.size());
    if (hex.empty() || hex.size() % 16 != 0) return false;
    std::string decimal;
    for (std::size_t i = 0; i < hex.size(); i += 16) {
      std::uint64_t word = 0;
      for (char c : hex.substr(i, 16)) {
        int digit;
        if (c >= '0' && c <= '9') digit = c - '0';
        else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
        else return false;
        word = (word << 4) | static_cast<std::uint64_t>(digit);
      }
      decimal += std::to_string(word);
      decimal += ' ';
    }
    std::istringstream in(decimal);
    std::mt19937_64 engine;
    in >> engine;
    if (in.fail()) return false;
    out.engine_ = engine;
    return true;
  }

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace unas

#endif  // UNAS_RNG_HPP_
