#pragma once

#include <cstddef>
#include <functional>

namespace lifecast {

// Execution policy for the data-parallel kernels (oracle rollouts, forecast
// sampling, Jacobian probes). Serial is the reference path; Parallel uses
// OpenMP when compiled in and must produce bit-identical results, which the
// kernels guarantee by giving every index its own RNG substream and output
// slot.
enum class Exec { Serial, Parallel };

bool openmp_enabled();
int max_threads();

void parallel_for(Exec exec, std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lifecast
