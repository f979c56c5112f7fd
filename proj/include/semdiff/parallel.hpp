#pragma once

#include <cstddef>
#include <functional>

namespace semdiff {

/// Parallelism cap from SEMDIFF_THREADS (0 or 1 means serial). Unset falls
/// back to the hardware thread count.
unsigned thread_cap();

/// Runs fn(row) for row in [0, rows). Rows are distributed over at most
/// thread_cap() threads; each output row is written by exactly one thread, so
/// results are independent of the degree of parallelism.
void parallel_rows(std::size_t rows, std::size_t work_per_row,
                   const std::function<void(std::size_t)>& fn);

}  // namespace semdiff
