#pragma once

namespace asta3d {

/// Keeps freed memory in the heap instead of returning it to the kernel. Training
/// allocates and frees large gradient buffers every step, and glibc's default
/// mmap/trim thresholds turn that into page faults. No-op off glibc.
void tune_allocator();

}  // namespace asta3d
