// Copyright 2026 The surfent Authors.
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

#ifndef SURFENT_DISTRIBUTION_HPP_
#define SURFENT_DISTRIBUTION_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>

namespace surfent {

// A "surface" is a Web API entry point plus a canonicalized argument
// signature; its identifier is an opaque, non-empty string token.
using SurfaceId = std::string;
// Observed surface values are likewise opaque tokens (raw or hashed).
using ValueToken = std::string;
using ValuePair = std::pair<ValueToken, ValueToken>;

// Observed value frequencies for a single surface. Ordered map so every
// iteration (entropy sums, serialization) is deterministic.
struct EmpiricalDistribution {
  std::map<ValueToken, std::uint64_t> counts;
  std::uint64_t n = 0;

  std::uint64_t domain_size() const { return counts.size(); }

  void add(const ValueToken& value, std::uint64_t c = 1) {
    counts[value] += c;
    n += c;
  }
};

// Observed joint value frequencies for an ordered surface pair.
struct JointDistribution {
  std::map<ValuePair, std::uint64_t> counts;
  std::uint64_t n = 0;

  void add(const ValueToken& a, const ValueToken& b, std::uint64_t c = 1) {
    counts[{a, b}] += c;
    n += c;
  }
};

EmpiricalDistribution build_distribution(std::span<const ValueToken> samples);
JointDistribution build_joint_distribution(std::span<const ValuePair> samples);

// Marginals of a joint; marginalizing reproduces the single-surface
// distribution built from the same sample stream.
EmpiricalDistribution marginal_first(const JointDistribution& joint);
EmpiricalDistribution marginal_second(const JointDistribution& joint);

// Swap the two coordinates of every cell.
JointDistribution transpose(const JointDistribution& joint);

}  // namespace surfent

#endif  // SURFENT_DISTRIBUTION_HPP_
