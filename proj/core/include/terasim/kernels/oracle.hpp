#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace terasim::kernels {

using cvec = std::vector<std::complex<double>>;

// O(n^2) reference DFT, X[k] = sum_n x[n] exp(-2*pi*i*n*k/n).
cvec dft_naive(const cvec& x);

// O(n log n) double-precision FFT (n a power of two); agrees with dft_naive
// to floating-point rounding.
cvec fft_float(const cvec& x);

// out[b][sc] = sum_a w[b][a] * y[a][sc]; w is rows x cols row-major.
// y holds `cols` rows of `sc_count` samples each (row stride = sc_stride).
cvec beamform_float(const cvec& w, uint32_t beams, uint32_t antennas,
                    const cvec& y, uint32_t sc_count, uint32_t sc_stride);

// h[b][t][sc] = bf[b][sc] * conj(pilot[t][sc]).
cvec chest_float(const cvec& bf, uint32_t beams, const cvec& pilot, uint32_t tx,
                 uint32_t sc_count);

// Solves (H^H H + sigma2 I) x = H^H y by Gaussian elimination with partial
// pivoting; h is beams x tx row-major, y has `beams` entries.
cvec mmse_solve_float(const cvec& h, uint32_t beams, uint32_t tx,
                      const cvec& y, double sigma2);

// True iff H^H H + sigma2 I is numerically positive definite.
bool mmse_pd_float(const cvec& h, uint32_t beams, uint32_t tx, double sigma2);

}  // namespace terasim::kernels
