#pragma once

#include <cstddef>

namespace lecam {

// Execution policy for the data-parallel kernels. `serial` is the plain
// reference loop kept for testing; `parallel` runs the same per-index work
// under OpenMP. Parallel loops only fill pre-sized slots by index and all
// reductions happen serially afterwards, so results are identical for both
// policies and for any thread count.
enum class Exec { serial, parallel };

template <typename Fn>
void for_each_index(Exec policy, std::ptrdiff_t n, Fn&& fn) {
    if (policy == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t i = 0; i < n; ++i) fn(static_cast<std::size_t>(i));
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i) fn(static_cast<std::size_t>(i));
    }
}

}  // namespace lecam
