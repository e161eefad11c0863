#pragma once

namespace sslaw {

// Every data-parallel kernel has a serial reference path. Both paths return
// bit-identical results; the parallel one only changes scheduling.
enum class ExecPolicy { kSerial, kParallel };

// Number of OpenMP threads the parallel path will use (1 without OpenMP).
int max_threads();

}  // namespace sslaw
