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

#include "affectrl/rng.hpp"

namespace affectrl {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void MulHiLo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> Philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    MulHiLo(kMul0, ctr[0], hi0, lo0);
    MulHiLo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::uint64_t StreamId(std::string_view purpose,
                       std::initializer_list<std::uint64_t> parts) {
  // FNV-1a over the purpose tag, then fold in the numeric parts.
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : purpose) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  h = SplitMix64(h);
  for (std::uint64_t p : parts) h = SplitMix64(h ^ SplitMix64(p));
  return h;
}

std::uint64_t Rng::NextU64() {
  const std::uint64_t c = cursor_.counter++;
  const std::array<std::uint32_t, 4> block = Philox4x32(
      {static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
       static_cast<std::uint32_t>(cursor_.stream),
       static_cast<std::uint32_t>(cursor_.stream >> 32)},
      {static_cast<std::uint32_t>(cursor_.seed),
       static_cast<std::uint32_t>(cursor_.seed >> 32)});
  return (static_cast<std::uint64_t>(block[1]) << 32) | block[0];
}

double Rng::Uniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

Rng Rng::Split(std::uint64_t tag) const {
  return Rng(cursor_.seed, SplitMix64(cursor_.stream ^ SplitMix64(tag + 1)));
}

std::size_t SampleIndex(const std::vector<double>& probs, Rng& rng) {
  std::size_t positive = 0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) {
      ++positive;
      last = i;
    }
  }
  if (positive <= 1) return last;
  const double u = rng.Uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    if (u < acc) return i;
  }
  return last;
}

}  // namespace affectrl
