// Serial vs OpenMP seed/grid sweep: same cells, same results, wall-clock compared.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <iostream>

#include <omp.h>

#include "memento/experiments.hpp"

using namespace memento;

namespace {

bool same(const std::vector<AccuracyCell>& a, const std::vector<AccuracyCell>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto &x = a[i].stats, &y = b[i].stats;
    if (a[i].tau != b[i].tau || a[i].counters != b[i].counters || a[i].seed != b[i].seed) return false;
    if (x.rmse != y.rmse || x.min_error != y.min_error || x.max_error != y.max_error || x.p99_abs != y.p99_abs) {
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  std::uint64_t packets = 300'000;
  std::uint64_t window = 50'000;
  int seeds = 8;
  int threads = 0;
  CLI::App app{"serial vs parallel accuracy-grid sweep", "memento_bench"};
  app.add_option("--packets", packets, "trace length");
  app.add_option("--window", window, "window size");
  app.add_option("--seeds", seeds, "seeds per (tau, counters) cell");
  app.add_option("--threads", threads, "OpenMP threads (0: runtime default)");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  const auto stream = keys_of(gen_zipf_trace({packets, 10'000, 1.0, 1, 1}));
  const std::vector<double> taus{1.0, 0.25, std::ldexp(1.0, -4)};
  const std::vector<std::uint64_t> counters{400, 1000};
  std::vector<std::uint64_t> seed_list;
  for (int i = 0; i < seeds; ++i) seed_list.push_back(static_cast<std::uint64_t>(i + 1));

  auto timed = [&](Execution ex) {
    const auto t0 = std::chrono::steady_clock::now();
    auto cells = accuracy_grid(stream, window, taus, counters, seed_list, ex);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::make_pair(std::move(cells), s);
  };
  const auto [serial, ts] = timed(Execution::kSerial);
  const auto [parallel, tp] = timed(Execution::kParallel);

  const double updates = static_cast<double>(serial.size() * stream.size());
  nlohmann::ordered_json j = {{"cells", serial.size()},
                              {"packets", packets},
                              {"threads", omp_get_max_threads()},
                              {"serialSeconds", ts},
                              {"parallelSeconds", tp},
                              {"serialUpdatesPerSec", updates / ts},
                              {"parallelUpdatesPerSec", updates / tp},
                              {"speedup", ts / tp},
                              {"identical", same(serial, parallel)}};
  std::cout << j.dump() << '\n';
  return same(serial, parallel) ? 0 : 1;
}
