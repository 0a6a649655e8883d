#pragma once

#include <optional>

namespace odisphere {

/// Thread count from the flag, else ODISPHERE_THREADS, else the OpenMP default.
int resolve_thread_count(std::optional<int> flag);

void set_thread_count(int threads);

}  // namespace odisphere
