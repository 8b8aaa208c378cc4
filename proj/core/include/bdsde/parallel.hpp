#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace bdsde {

// Work is split into fixed 4096-element chunks regardless of the worker
// count, and reductions combine chunk partials in index order. That makes
// every parallel result bit-identical for any --threads value.
inline constexpr std::int64_t kChunkSize = 4096;

void set_max_threads(int n);
int max_threads();

// Runs fn(begin, end) over [0, n) in fixed chunks. fn must only write to
// disjoint per-index or per-chunk state.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn);

// Chunked accumulation: fill(chunk_index, begin, end, partial) writes the
// chunk's partial sums into a zeroed buffer of length width; partials are
// then added into out[0..width) serially in chunk order.
void parallel_reduce(std::int64_t n, std::size_t width,
                     const std::function<void(std::int64_t, std::int64_t, std::int64_t, double*)>& fill,
                     double* out);

} // namespace bdsde
