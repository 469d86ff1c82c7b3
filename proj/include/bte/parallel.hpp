#pragma once

#include <cstddef>
#include <functional>

namespace bte {

// Worker count used by parallel_for. Defaults to BTE_THREADS or the hardware count.
int thread_count();
void set_thread_count(int n);

// Calls body(begin, end) on contiguous static chunks of [0, n). Chunk boundaries depend
// only on n and the thread count; callers write disjoint output so results do not.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace bte
