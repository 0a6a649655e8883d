#include "odisphere/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

#include "odisphere/error.hpp"

namespace odisphere {

int resolve_thread_count(std::optional<int> flag)
{
    if (flag) {
        if (*flag < 1) throw ConfigError("--threads must be at least 1");
        return *flag;
    }
    if (const char* env = std::getenv("ODISPHERE_THREADS"); env != nullptr && *env != '\0') {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
        }
        throw ConfigError(std::string("ODISPHERE_THREADS must be a positive integer, got '") + env + "'");
    }
    return omp_get_max_threads();
}

void set_thread_count(int threads) { omp_set_num_threads(threads); }

}  // namespace odisphere
