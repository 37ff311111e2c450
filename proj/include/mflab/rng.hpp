#pragma once

#include <cstdint>

#include "mflab/vec.hpp"

namespace mflab {

// Philox4x32-10 counter block cipher. Keyed by a 64-bit seed; the counter is
// four 32-bit words chosen by the caller. Stateless, so draws indexed by
// (particle, step) are reproducible under any evaluation order.
std::array<std::uint32_t, 4> philox4x32(std::uint64_t key, std::uint32_t c0,
                                        std::uint32_t c1, std::uint32_t c2,
                                        std::uint32_t c3);

// Standard-normal draws derived from Philox output via Box-Muller.
// normal_pair consumes one block and yields two independent N(0,1) values.
void normal_pair(std::uint64_t key, std::uint32_t c0, std::uint32_t c1,
                 std::uint32_t c2, double& z0, double& z1);

// Brownian increments shared across coupled particle systems: the increment
// for (particle i, step k) depends only on (seed, i, k), never on which
// system consumes it.
class BrownianNoise {
  public:
    BrownianNoise(std::uint64_t seed, int dim) : seed_(seed), dim_(dim) {}

    // dB ~ N(0, dt * I_dim)
    Vec increment(std::uint32_t particle, std::uint32_t step, double dt) const;

    std::uint64_t seed() const { return seed_; }
    int dim() const { return dim_; }

  private:
    std::uint64_t seed_;
    int dim_;
};

}  // namespace mflab
