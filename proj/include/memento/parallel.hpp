#pragma once

// Seed/grid sweeps. Every cell owns its sketches, so cells are independent;
// the serial path is the reference the parallel one is tested against.

#include <cstdint>
#include <exception>
#include <type_traits>
#include <vector>

namespace memento {

enum class Execution { kSerial, kParallel };

/// results[i] = fn(i) for i in [0, n).
template <class F>
auto run_cells(std::int64_t n, F&& fn, Execution ex = Execution::kParallel)
    -> std::vector<std::invoke_result_t<F&, std::int64_t>> {
  std::vector<std::invoke_result_t<F&, std::int64_t>> out(static_cast<std::size_t>(n));
  if (ex == Execution::kSerial) {
    for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace memento
