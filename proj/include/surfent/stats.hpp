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

#ifndef SURFENT_STATS_HPP_
#define SURFENT_STATS_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace surfent {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean: empty input");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double sample_stdev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

// Linear-interpolation percentile over a *sorted* vector, q in [0, 100].
inline double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("percentile: empty input");
  if (q <= 0.0) return sorted.front();
  if (q >= 100.0) return sorted.back();
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

inline double percentile(std::vector<double> xs, double q) {
  std::sort(xs.begin(), xs.end());
  return percentile_sorted(xs, q);
}

struct BoxStats {
  std::size_t count = 0;
  double minimum = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double maximum = 0.0;
  double average = 0.0;
};

inline BoxStats box_stats(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("box_stats: empty input");
  std::sort(xs.begin(), xs.end());
  BoxStats b;
  b.count = xs.size();
  b.minimum = xs.front();
  b.maximum = xs.back();
  b.q1 = percentile_sorted(xs, 25.0);
  b.median = percentile_sorted(xs, 50.0);
  b.q3 = percentile_sorted(xs, 75.0);
  b.average = mean(xs);
  return b;
}

}  // namespace surfent

#endif  // SURFENT_STATS_HPP_
