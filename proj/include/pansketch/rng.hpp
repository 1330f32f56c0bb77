#pragma once

// Counter-based keyed random number generation.
//
// Every random quantity in the library is a pure function of (key, counter):
// there is no hidden generator state, so draws can be made from any thread in
// any order and always reproduce. The mixer is the SplitMix64 output function
// applied to key + (counter+1)*golden, i.e. the (counter+1)-th SplitMix64
// state seeded with `key`.

#include <cmath>
#include <cstdint>

namespace pansketch {

constexpr uint64_t kGolden64 = 0x9E3779B97F4A7C15ULL;

inline uint64_t mix64(uint64_t key, uint64_t counter) {
  uint64_t z = key + (counter + 1) * kGolden64;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives an independent sub-seed from a master seed and a salt/tag.
inline uint64_t derive_seed(uint64_t seed, uint64_t salt) {
  return mix64(seed ^ (salt * kGolden64), salt);
}

// Well-known salts for the sub-seeds a run derives from one user seed.
enum : uint64_t {
  kSaltMatrix = 1,    // p-stable matrix master seed
  kSaltNoise = 2,     // sketch Laplace noise
  kSaltStream = 3,    // synthetic stream generation
  kSaltHashKey = 4,   // pairwise hash key
  kSaltInit = 5,      // counter/bit initialization
  kSaltSfp = 6,       // scale-factor Monte Carlo draws
  kSaltLeft = 7,      // dot-product left side
  kSaltRight = 8,     // dot-product right side
  kSaltTrial = 9,     // per-trial seeds in experiment harnesses
  kSaltQuery = 10,    // attack query sampling
  kSaltRestore = 11,  // continuation randomness after snapshot restore
};

// Uniform double in the open interval (0,1): 53 mantissa bits, offset by half
// an ulp so 0 and 1 are unreachable.
inline double uniform01(uint64_t key, uint64_t counter) {
  return (static_cast<double>(mix64(key, counter) >> 11) + 0.5) * 0x1.0p-53;
}

// Uniform integer in [0, bound). Plain modulo: bias is bound/2^64, invisible
// at the bound sizes used here (counter moduli, item picks).
inline uint64_t uniform_below(uint64_t key, uint64_t counter, uint64_t bound) {
  return mix64(key, counter) % bound;
}

// Laplace(scale) by inverse CDF from a single uniform draw.
inline double laplace(uint64_t key, uint64_t counter, double scale) {
  const double u = uniform01(key, counter) - 0.5;
  const double mag = (u < 0.0) ? -u : u;
  // log1p(-2|u|) = ln(1 - 2|u|); |u| < 0.5 strictly, so this is finite.
  double draw = -scale * std::log1p(-2.0 * mag);
  return u < 0.0 ? -draw : draw;
}

}  // namespace pansketch
