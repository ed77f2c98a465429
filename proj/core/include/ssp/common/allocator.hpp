#pragma once

namespace ssp {

// Keeps large freed blocks inside the heap instead of returning them to the
// kernel. Training allocates and frees the same multi-megabyte activation
// buffers every iteration, and with the default glibc thresholds each of
// those becomes a fresh mmap plus page faults. No-op on other C libraries.
void configure_allocator();

}  // namespace ssp
