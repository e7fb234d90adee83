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
//
// Plug-in estimation of entropy, mutual information, and KL divergence from
// categorical samples, with finite-sample confidence bounds.
//
// Conventions used throughout:
//   - All reported entropies and mutual informations are in bits (log2).
//   - The error-bound formulas are evaluated with natural logarithms as
//     written, then divided by ln 2 to convert to bits.
//   - 0 * log 0 := 0 in every entropy sum.
//   - Lower confidence endpoints are clamped at 0, as are plug-in MI point
//     estimates: both quantities are analytically nonnegative, so negative
//     values can only be rounding or estimation noise.

#ifndef SURFENT_ESTIMATION_HPP_
#define SURFENT_ESTIMATION_HPP_

#include <cstdint>

#include "surfent/distribution.hpp"

namespace surfent {

inline constexpr double kLn2 = 0.69314718055994530942;

// Entropy point estimate with a two-sided confidence interval.
//
// The plug-in estimator is biased downward: it can undershoot the true
// entropy by at most  log(1 + (k-1)/n) + sqrt(2 log(2/delta) log n / n)
// and overshoot by at most  sqrt(2 log(2/delta) log n / n),  each with
// probability >= 1 - delta. ci_high adds the undershoot allowance and
// ci_low subtracts the overshoot allowance (clamped at 0).
struct EntropyEstimate {
  double point = 0.0;    // bits
  double ci_low = 0.0;   // bits, >= 0
  double ci_high = 0.0;  // bits
  double delta = 0.0;    // confidence parameter in (0, 1]
  std::uint64_t n = 0;
  std::uint64_t k_effective = 0;
  bool reliable = false;
};

// Mutual information point estimate with a two-sided confidence interval,
// built from the same undershoot/overshoot bound structure.
struct MiEstimate {
  double point = 0.0;    // bits, >= 0
  double ci_low = 0.0;   // bits, >= 0
  double ci_high = 0.0;  // bits
  std::uint64_t n = 0;
  std::uint64_t k1 = 0;
  std::uint64_t k2 = 0;
  bool reliable = false;
};

struct DomainEstimate {
  std::uint64_t k_effective = 0;
  bool reliable = false;
};

// One-sided error allowances for a plug-in MI estimate. "Downward" bounds
// how far the estimate may fall below the truth, "upward" how far above.
struct MiErrorBounds {
  double downward_bits = 0.0;
  double upward_bits = 0.0;
};

// -sum p_i log2 p_i over the observed frequencies. Throws "no samples" on an
// empty distribution.
double plugin_entropy_bits(const EmpiricalDistribution& dist);

// sum p_i log(p_i / q_i) in nats over the support of p. Requires
// support(p) to be contained in support(q); otherwise throws
// "absolute continuity violated".
double kl_divergence_nats(const EmpiricalDistribution& p,
                          const EmpiricalDistribution& q);

// Two-sided interval for the true entropy given the (possibly external)
// domain size k. Throws "insufficient samples" when n < 2. The reliable
// flag applies the n >= 30 k domain heuristic to the supplied k.
EntropyEstimate entropy_confidence_interval(const EmpiricalDistribution& dist,
                                            std::uint64_t k, double delta);

// Convenience wrapper: k taken from effective_domain_size(dist).
EntropyEstimate entropy_estimate(const EmpiricalDistribution& dist,
                                 double delta);

// I(X;Y) = H(X) + H(Y) - H(X,Y), clamped at 0.
double mutual_information_bits(const JointDistribution& joint);

// 3 sqrt(6 log(2/delta) log n / n) — the statistical part of both MI error
// allowances, in nats.
double mi_statistical_term_nats(std::uint64_t n, double delta);

// Downward allowance: log(1+(k1-1)/n) + log(1+(k2-1)/n) + statistical term.
// Upward allowance:   log(1+(k1 k2-1)/n) + statistical term.
// Both converted to bits. Throws "insufficient samples" when n < 2.
MiErrorBounds mi_confidence_interval(std::uint64_t n, std::uint64_t k1,
                                     std::uint64_t k2, double delta);

// max(3 k1 k2, 30000): the joint sample count needed for roughly 1-bit
// additive MI accuracy.
std::uint64_t required_samples(std::uint64_t k1, std::uint64_t k2);

// Conservative domain-size heuristic: trust the observed distinct-value
// count only when samples exceed it by a factor of at least 30.
DomainEstimate effective_domain_size(const EmpiricalDistribution& dist);

// Full MI estimate for a joint sample: point, interval, and a reliability
// flag requiring both the required_samples rule and the x30 domain
// heuristic on each marginal.
MiEstimate mi_estimate(const JointDistribution& joint, double delta);

}  // namespace surfent

#endif  // SURFENT_ESTIMATION_HPP_
