/*
 * Copyright 2026 The fermi Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FERMI_RANDOM_H_
#define FERMI_RANDOM_H_

#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace fermi {

// SplitMix64 (Steele, Lea & Flood 2014). The state is a Weyl counter advanced
// by the golden-ratio increment 0x9E3779B97F4A7C15; each output is the
// counter passed through the fixed 64-bit finalizer below. Every derived
// quantity (uniform doubles, indices, normals) is specified here rather than
// delegated to <random> distributions, whose algorithms are
// implementation-defined, so streams are reproducible across toolchains.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 bits of resolution.
  double Uniform();

  // Uniform on {0, ..., n - 1} by rejection sampling (no modulo bias).
  std::uint64_t UniformIndex(std::uint64_t n);

  // Standard normal via the Box-Muller transform; consumes two outputs and
  // returns the cosine branch only.
  double Normal();

  // Independent stream for a named purpose, derived from this generator's
  // current state without advancing it.
  SplitMix64 Fork(std::uint64_t stream) const;

 private:
  std::uint64_t state_;
};

// In-place Fisher-Yates shuffle, iterating i = n-1 down to 1 and swapping i
// with UniformIndex(i + 1).
template <typename T>
void Shuffle(std::span<T> values, SplitMix64& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = rng.UniformIndex(i);
    using std::swap;
    swap(values[i - 1], values[j]);
  }
}

}  // namespace fermi

#endif  // FERMI_RANDOM_H_
