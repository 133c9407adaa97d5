#pragma once

namespace ltce {

// Keeps freed training buffers in the heap instead of returning them to the
// OS, so full-batch epochs do not page-fault their temporaries back in. Call
// once at program start; a no-op off glibc.
void tune_allocator();

}  // namespace ltce
