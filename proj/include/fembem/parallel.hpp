#pragma once

#include <cstddef>

namespace fembem {

/// Selects between the OpenMP kernel and its serial reference implementation.
/// Both variants write into disjoint output slots, so results are bitwise
/// identical; the serial path exists for testing and benchmarking.
enum class Exec { serial, parallel };

/// Default policy used by the high-level drivers.
inline constexpr Exec default_exec = Exec::parallel;

using Index = std::ptrdiff_t;

}  // namespace fembem
