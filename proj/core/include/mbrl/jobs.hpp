#pragma once

#include <functional>
#include <vector>

namespace mbrl {

// Runs the jobs on a fixed-size worker pool (workers <= 1: current thread,
// in order). Jobs must be independent; each writes only its own outputs.
// The first thrown exception is rethrown after all workers finish.
void run_jobs(const std::vector<std::function<void()>>& jobs, int workers);

}  // namespace mbrl
