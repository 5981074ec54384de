#pragma once

#include <cstddef>
#include <functional>

namespace asta3d {

/// Worker cap from ASTA3D_THREADS (default 1). set_thread_limit overrides it.
std::size_t thread_limit();
void set_thread_limit(std::size_t threads);

/// Runs body(i) for i in [0, count). Each index runs exactly once; callers
/// write results to per-index slots so output does not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace asta3d
