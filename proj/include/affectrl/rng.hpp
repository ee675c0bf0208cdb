// Copyright 2026 The affectrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AFFECTRL_RNG_HPP_
#define AFFECTRL_RNG_HPP_

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>
#include <vector>

namespace affectrl {

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3"). Exposed for known-answer tests.
std::array<std::uint32_t, 4> Philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Deterministic 64-bit identifier for a named substream, e.g.
// StreamId("anticipate", {episode, step}).
std::uint64_t StreamId(std::string_view purpose,
                       std::initializer_list<std::uint64_t> parts = {});

// Counter-based generator. The state is (seed, stream, counter); every draw
// is a pure function of that triple, so two generators built from the same
// triple produce identical sequences on every platform, and distinct
// (seed, stream) pairs are independent.
//
// Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  struct Cursor {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t counter = 0;
    friend bool operator==(const Cursor&, const Cursor&) = default;
  };

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : cursor_{seed, stream, 0} {}
  explicit Rng(const Cursor& cursor) : cursor_(cursor) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return NextU64(); }

  std::uint64_t NextU64();
  // Uniform on [0, 1) with 53 bits of resolution.
  double Uniform();

  // Independent child generator; does not advance this one.
  Rng Split(std::uint64_t tag) const;

  const Cursor& cursor() const { return cursor_; }
  std::uint64_t seed() const { return cursor_.seed; }
  std::uint64_t stream() const { return cursor_.stream; }
  std::uint64_t counter() const { return cursor_.counter; }

 private:
  Cursor cursor_;
};

// Samples an index from `probs` (nonnegative, summing to 1). A draw is taken
// from `rng` only when more than one entry is positive, so deterministic
// choices leave the stream untouched.
std::size_t SampleIndex(const std::vector<double>& probs, Rng& rng);

}  // namespace affectrl

#endif  // AFFECTRL_RNG_HPP_
