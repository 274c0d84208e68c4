#pragma once

namespace speedclust {

/// Caps the number of worker threads used by the parallel kernels. n <= 0 restores the default
/// (all available cores).
void set_thread_count(int n);

/// Current worker cap.
int thread_count();

} // namespace speedclust
