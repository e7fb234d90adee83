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
// Static SVG plots for the reporting commands. The renderers are
// deliberately small: fixed canvas, fixed palette, numbers formatted with a
// fixed precision, so the same data always yields byte-identical markup.

#ifndef SURFENT_SVG_HPP_
#define SURFENT_SVG_HPP_

#include <string>
#include <vector>

namespace surfent {

// Bar chart of non-negative bucket masses; bucket i covers
// [i*bucket_width, (i+1)*bucket_width) on the x axis.
std::string render_histogram_svg(const std::vector<double>& mass,
                                 double bucket_width,
                                 const std::string& title);

// Diverging bar chart for per-bucket differences: positive bars rise above
// the zero axis, negative bars drop below it.
std::string render_delta_svg(const std::vector<double>& delta,
                             double bucket_width, const std::string& title);

}  // namespace surfent

#endif  // SURFENT_SVG_HPP_
