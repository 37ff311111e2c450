#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace mflab {

std::size_t next_pow2(std::size_t n);

// In-place radix-2 Cooley-Tukey; size must be a power of two.
// inverse = true applies the conjugate transform and the 1/n factor.
void fft_inplace(std::complex<double>* data, std::size_t n, bool inverse);

// Transform along every axis of a dense row-major-by-axis array with extents
// ext[0..dim), ext[0] fastest. All extents must be powers of two.
void fft_nd(std::vector<std::complex<double>>& data, const std::size_t* ext, int dim,
            bool inverse);

}  // namespace mflab
