#pragma once

#include <cstdint>

#include "dpmkit/types.hpp"

namespace dpmkit::cli {

/// splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/**
 * Standard normal vector for sample `index` under `seed`.
 *
 * Counter-based: each draw depends only on (seed, index, component), so the
 * result is identical across platforms and independent of evaluation order.
 */
State standard_normal(std::uint64_t seed, std::uint64_t index, std::size_t dim);

}  // namespace dpmkit::cli
