#pragma once

namespace dcnn::runtime {

// Which kernel family executes: the serial reference implementation or the
// OpenMP one. Both compute identical arithmetic per output element, so
// results are bit-equal; the serial path exists as the reference the
// parallel kernels are tested against.
enum class Mode { serial, parallel };

Mode mode();
void set_mode(Mode m);

// Worker thread cap for the parallel mode; 0 means the OpenMP default.
int threads();
void set_threads(int n);

// True when the parallel mode is active and OpenMP was compiled in.
bool parallel_enabled();

// Kernel-dispatch check: parallel mode, and not already inside an OpenMP
// region. Loops that parallelise over examples call the kernels serially
// instead of opening a nested team per call.
bool parallel_kernels();

// Hardware/OpenMP thread count actually available (1 without OpenMP).
int max_threads();

}  // namespace dcnn::runtime
