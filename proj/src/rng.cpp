#include "mflab/rng.hpp"

#include <cmath>

namespace mflab {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::uint32_t& x0, std::uint32_t& x1, std::uint32_t& x2,
                         std::uint32_t& x3, std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * x0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * x2;
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t y0 = hi1 ^ x1 ^ k0;
    const std::uint32_t y1 = lo1;
    const std::uint32_t y2 = hi0 ^ x3 ^ k1;
    const std::uint32_t y3 = lo0;
    x0 = y0;
    x1 = y1;
    x2 = y2;
    x3 = y3;
}

// 53-bit mantissa uniform in (0, 1]: never zero, safe under log().
inline double uniform_open(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
    return (static_cast<double>(bits & ((1ull << 53) - 1)) + 1.0) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::uint64_t key, std::uint32_t c0,
                                        std::uint32_t c1, std::uint32_t c2,
                                        std::uint32_t c3) {
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    std::uint32_t x0 = c0, x1 = c1, x2 = c2, x3 = c3;
    for (int r = 0; r < 10; ++r) {
        philox_round(x0, x1, x2, x3, k0, k1);
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return {x0, x1, x2, x3};
}

void normal_pair(std::uint64_t key, std::uint32_t c0, std::uint32_t c1,
                 std::uint32_t c2, double& z0, double& z1) {
    const auto block = philox4x32(key, c0, c1, c2, 0u);
    const double u1 = uniform_open(block[0], block[1]);
    const double u2 = uniform_open(block[2], block[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double two_pi = 2.0 * std::acos(-1.0);
    z0 = r * std::cos(two_pi * u2);
    z1 = r * std::sin(two_pi * u2);
}

Vec BrownianNoise::increment(std::uint32_t particle, std::uint32_t step, double dt) const {
    Vec db = zero_vec();
    const double s = std::sqrt(dt);
    double z0 = 0.0, z1 = 0.0;
    normal_pair(seed_, particle, step, 0u, z0, z1);
    db[0] = s * z0;
    if (dim_ >= 2) db[1] = s * z1;
    if (dim_ >= 3) {
        double z2 = 0.0, z3 = 0.0;
        normal_pair(seed_, particle, step, 1u, z2, z3);
        db[2] = s * z2;
    }
    return db;
}

}  // namespace mflab
