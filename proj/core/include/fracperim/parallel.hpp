#pragma once

#include <cstddef>
#include <functional>

namespace fracperim {

/// Upper bound on worker threads used by the energy engine. Defaults to the
/// FRACPERIM_THREADS environment variable, else the hardware concurrency.
int thread_limit();
void set_thread_limit(int threads);

/// Runs body(block) for block in [0, blocks). Each block must write only to
/// its own output slot; results are then independent of the thread count.
void parallel_for_blocks(std::size_t blocks, const std::function<void(std::size_t)>& body);

}  // namespace fracperim
