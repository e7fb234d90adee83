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

#include "surfent/distribution.hpp"

namespace surfent {

EmpiricalDistribution build_distribution(std::span<const ValueToken> samples) {
  EmpiricalDistribution dist;
  for (const auto& v : samples) dist.add(v);
  return dist;
}

JointDistribution build_joint_distribution(std::span<const ValuePair> samples) {
  JointDistribution joint;
  for (const auto& [a, b] : samples) joint.add(a, b);
  return joint;
}

EmpiricalDistribution marginal_first(const JointDistribution& joint) {
  EmpiricalDistribution dist;
  for (const auto& [cell, c] : joint.counts) dist.add(cell.first, c);
  return dist;
}

EmpiricalDistribution marginal_second(const JointDistribution& joint) {
  EmpiricalDistribution dist;
  for (const auto& [cell, c] : joint.counts) dist.add(cell.second, c);
  return dist;
}

JointDistribution transpose(const JointDistribution& joint) {
  JointDistribution out;
  for (const auto& [cell, c] : joint.counts) out.add(cell.second, cell.first, c);
  return out;
}

}  // namespace surfent
