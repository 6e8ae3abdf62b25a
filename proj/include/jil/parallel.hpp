#pragma once

namespace jil {

/// Worker count for OpenMP regions. JIL_THREADS caps it; 0 or unset means
/// the runtime default.
int worker_count();

}  // namespace jil
