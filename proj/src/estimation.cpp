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

#include "surfent/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace surfent {

namespace {

// H in bits via log2(n) - sum c log2 c / n, which avoids forming each p_i
// and keeps the point-mass case exactly zero.
double entropy_bits_from_counts(std::uint64_t n, const auto& counts) {
  double acc = 0.0;
  for (const auto& [key, c] : counts) {
    if (c > 0) acc += static_cast<double>(c) * std::log2(static_cast<double>(c));
  }
  const double nd = static_cast<double>(n);
  return std::max(0.0, std::log2(nd) - acc / nd);
}

double entropy_statistical_term_nats(std::uint64_t n, double delta) {
  const double nd = static_cast<double>(n);
  return std::sqrt(2.0 * std::log(2.0 / delta) * std::log(nd) / nd);
}

}  // namespace

double plugin_entropy_bits(const EmpiricalDistribution& dist) {
  if (dist.n == 0) throw std::invalid_argument("no samples");
  return entropy_bits_from_counts(dist.n, dist.counts);
}

double kl_divergence_nats(const EmpiricalDistribution& p,
                          const EmpiricalDistribution& q) {
  if (p.n == 0 || q.n == 0) throw std::invalid_argument("no samples");
  double acc = 0.0;
  for (const auto& [value, cp] : p.counts) {
    if (cp == 0) continue;
    const auto it = q.counts.find(value);
    if (it == q.counts.end() || it->second == 0) {
      throw std::invalid_argument("absolute continuity violated");
    }
    const double pi = static_cast<double>(cp) / static_cast<double>(p.n);
    const double qi =
        static_cast<double>(it->second) / static_cast<double>(q.n);
    acc += pi * std::log(pi / qi);
  }
  return acc;
}

EntropyEstimate entropy_confidence_interval(const EmpiricalDistribution& dist,
                                            std::uint64_t k, double delta) {
  if (dist.n < 2) throw std::invalid_argument("insufficient samples");
  if (k < 1) throw std::invalid_argument("domain size must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("delta must be in (0, 1]");
  }
  const double nd = static_cast<double>(dist.n);
  const double stat_nats = entropy_statistical_term_nats(dist.n, delta);
  const double bias_nats = std::log1p(static_cast<double>(k - 1) / nd);

  EntropyEstimate est;
  est.point = plugin_entropy_bits(dist);
  est.ci_low = std::max(0.0, est.point - stat_nats / kLn2);
  est.ci_high = est.point + (bias_nats + stat_nats) / kLn2;
  est.delta = delta;
  est.n = dist.n;
  est.k_effective = k;
  est.reliable = dist.n >= 30 * k;
  return est;
}

EntropyEstimate entropy_estimate(const EmpiricalDistribution& dist,
                                 double delta) {
  const DomainEstimate dom = effective_domain_size(dist);
  EntropyEstimate est =
      entropy_confidence_interval(dist, dom.k_effective, delta);
  est.reliable = dom.reliable;
  return est;
}

double mutual_information_bits(const JointDistribution& joint) {
  if (joint.n == 0) throw std::invalid_argument("no samples");
  const double h1 = plugin_entropy_bits(marginal_first(joint));
  const double h2 = plugin_entropy_bits(marginal_second(joint));
  const double h12 = entropy_bits_from_counts(joint.n, joint.counts);
  return std::max(0.0, h1 + h2 - h12);
}

double mi_statistical_term_nats(std::uint64_t n, double delta) {
  const double nd = static_cast<double>(n);
  return 3.0 * std::sqrt(6.0 * std::log(2.0 / delta) * std::log(nd) / nd);
}

MiErrorBounds mi_confidence_interval(std::uint64_t n, std::uint64_t k1,
                                     std::uint64_t k2, double delta) {
  if (n < 2) throw std::invalid_argument("insufficient samples");
  if (k1 < 1 || k2 < 1) {
    throw std::invalid_argument("domain size must be positive");
  }
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("delta must be in (0, 1]");
  }
  const double nd = static_cast<double>(n);
  const double stat = mi_statistical_term_nats(n, delta);
  const double bias_down = std::log1p(static_cast<double>(k1 - 1) / nd) +
                           std::log1p(static_cast<double>(k2 - 1) / nd);
  const double bias_up =
      std::log1p(static_cast<double>(k1 * k2 - 1) / nd);
  MiErrorBounds bounds;
  bounds.downward_bits = (bias_down + stat) / kLn2;
  bounds.upward_bits = (bias_up + stat) / kLn2;
  return bounds;
}

std::uint64_t required_samples(std::uint64_t k1, std::uint64_t k2) {
  if (k1 < 1 || k2 < 1) {
    throw std::invalid_argument("domain size must be positive");
  }
  return std::max<std::uint64_t>(3 * k1 * k2, 30000);
}

DomainEstimate effective_domain_size(const EmpiricalDistribution& dist) {
  if (dist.n == 0) throw std::invalid_argument("no samples");
  DomainEstimate dom;
  dom.k_effective = dist.domain_size();
  dom.reliable = dist.n >= 30 * dom.k_effective;
  return dom;
}

MiEstimate mi_estimate(const JointDistribution& joint, double delta) {
  if (joint.n == 0) throw std::invalid_argument("no samples");
  const DomainEstimate d1 = effective_domain_size(marginal_first(joint));
  const DomainEstimate d2 = effective_domain_size(marginal_second(joint));
  MiEstimate est;
  est.point = mutual_information_bits(joint);
  est.n = joint.n;
  est.k1 = d1.k_effective;
  est.k2 = d2.k_effective;
  const MiErrorBounds bounds =
      mi_confidence_interval(joint.n, est.k1, est.k2, delta);
  est.ci_low = std::max(0.0, est.point - bounds.upward_bits);
  est.ci_high = est.point + bounds.downward_bits;
  est.reliable = joint.n >= required_samples(est.k1, est.k2) && d1.reliable &&
                 d2.reliable;
  return est;
}

}  // namespace surfent
