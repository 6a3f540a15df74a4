#include "dpmkit/cli/rng.hpp"

#include <cmath>
#include <numbers>

namespace dpmkit::cli {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

// Uniform in (0, 1) from the top 53 bits.
double unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

State standard_normal(std::uint64_t seed, std::uint64_t index, std::size_t dim) {
  const std::uint64_t stream = splitmix64(splitmix64(seed) ^ index);
  State out(dim);
  for (std::size_t i = 0; i < dim; i += 2) {
    const double u1 = unit_open(splitmix64(stream + 2 * i));
    const double u2 = unit_open(splitmix64(stream + 2 * i + 1));
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    out[i] = r * std::cos(a);
    if (i + 1 < dim) out[i + 1] = r * std::sin(a);
  }
  return out;
}

}  // namespace dpmkit::cli
