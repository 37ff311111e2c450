#include "mflab/fft.hpp"

#include <cmath>

#include "mflab/errors.hpp"

namespace mflab {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft_inplace(std::complex<double>* a, std::size_t n, bool inverse) {
    if (n == 0 || (n & (n - 1)) != 0) throw NumericalError("fft: size must be a power of two");
    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double pi = std::acos(-1.0);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * pi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) a[i] *= inv;
    }
}

void fft_nd(std::vector<std::complex<double>>& data, const std::size_t* ext, int dim,
            bool inverse) {
    std::size_t total = 1;
    for (int k = 0; k < dim; ++k) total *= ext[k];
    if (data.size() != total) throw StructureError("fft_nd: extent/product mismatch");

    std::vector<std::complex<double>> line;
    std::size_t stride = 1;
    for (int axis = 0; axis < dim; ++axis) {
        const std::size_t n = ext[axis];
        line.resize(n);
        const std::size_t lines = total / n;
        for (std::size_t l = 0; l < lines; ++l) {
            // Decompose the line id into (inner, outer) around this axis.
            const std::size_t inner = l % stride;
            const std::size_t outer = l / stride;
            const std::size_t base = outer * stride * n + inner;
            for (std::size_t i = 0; i < n; ++i) line[i] = data[base + i * stride];
            fft_inplace(line.data(), n, inverse);
            for (std::size_t i = 0; i < n; ++i) data[base + i * stride] = line[i];
        }
        stride *= n;
    }
}

}  // namespace mflab
