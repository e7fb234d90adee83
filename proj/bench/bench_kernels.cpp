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
// Serial-versus-parallel timing for the three OpenMP kernels: bootstrap
// resampling, population generation, and session-entropy batching. Each
// kernel's parallel output is checked bit-identical against the serial
// reference before the timing is reported, so the benchmark doubles as a
// determinism smoke test. Usage: surfent_bench [scale], scale defaulting
// to 1 and multiplying every workload size.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "surfent/estimation.hpp"
#include "surfent/independence.hpp"
#include "surfent/rng.hpp"
#include "surfent/sessions.hpp"
#include "surfent/simulator.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using surfent::Rng;

template <typename Fn>
double time_ms(Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count();
}

void report(const char* kernel, double serial_ms, double parallel_ms,
            bool identical) {
  std::printf("%-24s %10.1f ms %10.1f ms %8.2fx   %s\n", kernel, serial_ms,
              parallel_ms, serial_ms / parallel_ms,
              identical ? "outputs identical" : "OUTPUT MISMATCH");
}

surfent::JointDistribution random_joint(std::size_t rows, std::size_t cols,
                                        std::uint64_t n, std::uint64_t seed) {
  Rng rng(seed);
  surfent::JointDistribution joint;
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto r = rng.next_index(rows);
    const auto c = rng.next_index(cols);
    joint.add("r" + std::to_string(r), "c" + std::to_string(c));
  }
  return joint;
}

surfent::PopulationModel chain_model(std::size_t surfaces) {
  surfent::PopulationModel model;
  for (std::size_t i = 0; i < surfaces; ++i) {
    surfent::SurfaceSpec spec;
    spec.id = "s" + std::to_string(i);
    spec.family = "bench";
    spec.domain = {"a", "b", "c", "d"};
    if (i == 0) {
      spec.marginal = {0.4, 0.3, 0.2, 0.1};
    } else {
      spec.parent = i - 1;
      spec.conditional = {{0.7, 0.1, 0.1, 0.1},
                          {0.1, 0.7, 0.1, 0.1},
                          {0.1, 0.1, 0.7, 0.1},
                          {0.1, 0.1, 0.1, 0.7}};
    }
    model.surfaces.push_back(std::move(spec));
  }
  model.families = {"bench"};
  model.sites = {"site-0"};
  return model;
}

surfent::MiGraph bench_graph(std::size_t nodes, std::uint64_t seed) {
  Rng rng(seed);
  surfent::MiGraph graph;
  std::vector<double> entropy(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    entropy[i] = 1.0 + 4.0 * rng.next_double();
    surfent::EntropyEstimate est;
    est.point = entropy[i];
    est.ci_low = entropy[i] - 0.1;
    est.ci_high = entropy[i] + 0.1;
    est.n = 1000000;
    est.k_effective = 32;
    est.reliable = true;
    graph.add_node("g" + std::to_string(i), est);
  }
  for (std::size_t i = 0; i + 1 < nodes; ++i) {
    for (std::size_t j = i + 1; j < std::min(nodes, i + 4); ++j) {
      surfent::MiEstimate mi;
      mi.point = 0.2 * rng.next_double() *
                 std::min(entropy[i], entropy[j]);
      mi.ci_low = mi.point * 0.9;
      mi.ci_high = mi.point * 1.1;
      mi.n = 1000000;
      mi.k1 = 32;
      mi.k2 = 32;
      mi.reliable = true;
      graph.add_edge("g" + std::to_string(i), "g" + std::to_string(j), mi);
    }
  }
  return graph;
}

std::vector<surfent::SessionLog> bench_sessions(std::size_t count,
                                                std::size_t nodes,
                                                std::uint64_t seed) {
  Rng rng(seed);
  std::vector<surfent::SessionLog> sessions(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& session = sessions[i];
    session.client_id = "c" + std::to_string(i);
    session.site = "site-" + std::to_string(i % 50);
    session.window_start = 0;
    const std::size_t picks = 2 + rng.next_index(nodes - 2);
    for (std::size_t p = 0; p < picks; ++p) {
      const auto node = "g" + std::to_string(rng.next_index(nodes));
      session.surfaces.insert(node);
      session.first_party.insert(node);
    }
  }
  return sessions;
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t scale = 1;
  if (argc > 1) {
    const long parsed = std::strtol(argv[1], nullptr, 10);
    if (parsed < 1) {
      std::fprintf(stderr, "usage: %s [scale >= 1]\n", argv[0]);
      return 1;
    }
    scale = static_cast<std::size_t>(parsed);
  }

#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads: %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled; both columns run serially\n");
#endif
  std::printf("%-24s %13s %13s %9s\n", "kernel", "serial", "parallel",
              "speedup");

  // Bootstrap resampling over a 12x12 joint.
  {
    const auto joint = random_joint(12, 12, 100000 * scale, 7);
    const int rounds = 400;
    std::vector<double> serial, parallel;
    const double serial_ms = time_ms([&] {
      serial = surfent::bootstrap_tv_distribution_serial(joint, rounds, 42);
    });
    const double parallel_ms = time_ms([&] {
      parallel = surfent::bootstrap_tv_distribution(joint, rounds, 42);
    });
    report("bootstrap-tv", serial_ms, parallel_ms, serial == parallel);
  }

  // Population generation from a 10-surface dependency chain.
  {
    const auto model = chain_model(10);
    const std::size_t clients = 200000 * scale;
    surfent::Population serial, parallel;
    const double serial_ms = time_ms([&] {
      serial = surfent::generate_population_serial(model, clients, 42);
    });
    const double parallel_ms = time_ms([&] {
      parallel = surfent::generate_population(model, clients, 42);
    });
    report("generate-population", serial_ms, parallel_ms,
           serial.values == parallel.values);
  }

  // Session-entropy batch over a 16-node measured graph.
  {
    const auto graph = bench_graph(16, 11);
    const auto sessions = bench_sessions(50000 * scale, 16, 13);
    std::vector<double> serial, parallel;
    const double serial_ms = time_ms([&] {
      serial = surfent::session_entropy_batch_serial(sessions, graph);
    });
    const double parallel_ms = time_ms([&] {
      parallel = surfent::session_entropy_batch(sessions, graph);
    });
    report("session-entropy-batch", serial_ms, parallel_ms,
           serial == parallel);
  }

  return 0;
}
