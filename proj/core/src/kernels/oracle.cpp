#include "terasim/kernels/oracle.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace terasim::kernels {

namespace {
using cpx = std::complex<double>;
constexpr double kTau = 2.0 * std::numbers::pi;
}  // namespace

cvec dft_naive(const cvec& x) {
  const size_t n = x.size();
  cvec out(n);
  for (size_t k = 0; k < n; ++k) {
    cpx acc = 0.0;
    for (size_t j = 0; j < n; ++j)
      acc += x[j] * std::polar(1.0, -kTau * double(j * k % n) / double(n));
    out[k] = acc;
  }
  return out;
}

cvec fft_float(const cvec& x) {
  size_t n = x.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft_float: length must be a power of two");
  cvec a = x, b(n);
  cvec* src = &a;
  cvec* dst = &b;
  // Stockham autosort, decimation in frequency, radix 2.
  for (size_t len = n, s = 1; len > 1; len /= 2, s *= 2) {
    size_t m = len / 2;
    for (size_t p = 0; p < m; ++p) {
      cpx w = std::polar(1.0, -kTau * double(p) / double(len));
      for (size_t q = 0; q < s; ++q) {
        cpx u = (*src)[q + s * p];
        cpx v = (*src)[q + s * (p + m)];
        (*dst)[q + s * (2 * p + 0)] = u + v;
        (*dst)[q + s * (2 * p + 1)] = (u - v) * w;
      }
    }
    std::swap(src, dst);
  }
  return *src;
}

cvec beamform_float(const cvec& w, uint32_t beams, uint32_t antennas,
                    const cvec& y, uint32_t sc_count, uint32_t sc_stride) {
  cvec out(size_t(beams) * sc_count);
  for (uint32_t b = 0; b < beams; ++b)
    for (uint32_t sc = 0; sc < sc_count; ++sc) {
      cpx acc = 0.0;
      for (uint32_t a = 0; a < antennas; ++a)
        acc += w[size_t(b) * antennas + a] * y[size_t(a) * sc_stride + sc];
      out[size_t(b) * sc_count + sc] = acc;
    }
  return out;
}

cvec chest_float(const cvec& bf, uint32_t beams, const cvec& pilot, uint32_t tx,
                 uint32_t sc_count) {
  cvec out(size_t(beams) * tx * sc_count);
  for (uint32_t b = 0; b < beams; ++b)
    for (uint32_t t = 0; t < tx; ++t)
      for (uint32_t sc = 0; sc < sc_count; ++sc)
        out[(size_t(b) * tx + t) * sc_count + sc] =
            bf[size_t(b) * sc_count + sc] * std::conj(pilot[size_t(t) * sc_count + sc]);
  return out;
}

namespace {
// Dense complex linear solve, partial pivoting.
cvec solve_dense(std::vector<cpx> a, cvec rhs, uint32_t n) {
  for (uint32_t col = 0; col < n; ++col) {
    uint32_t piv = col;
    for (uint32_t r = col + 1; r < n; ++r)
      if (std::abs(a[size_t(r) * n + col]) > std::abs(a[size_t(piv) * n + col])) piv = r;
    if (std::abs(a[size_t(piv) * n + col]) == 0.0)
      throw std::runtime_error("mmse_solve_float: singular system");
    if (piv != col) {
      for (uint32_t c = 0; c < n; ++c)
        std::swap(a[size_t(piv) * n + c], a[size_t(col) * n + c]);
      std::swap(rhs[piv], rhs[col]);
    }
    for (uint32_t r = col + 1; r < n; ++r) {
      cpx f = a[size_t(r) * n + col] / a[size_t(col) * n + col];
      for (uint32_t c = col; c < n; ++c)
        a[size_t(r) * n + c] -= f * a[size_t(col) * n + c];
      rhs[r] -= f * rhs[col];
    }
  }
  cvec x(n);
  for (uint32_t ri = n; ri-- > 0;) {
    cpx acc = rhs[ri];
    for (uint32_t c = ri + 1; c < n; ++c) acc -= a[size_t(ri) * n + c] * x[c];
    x[ri] = acc / a[size_t(ri) * n + ri];
  }
  return x;
}

std::vector<cpx> gram_matrix(const cvec& h, uint32_t beams, uint32_t tx, double sigma2) {
  std::vector<cpx> a(size_t(tx) * tx, 0.0);
  for (uint32_t i = 0; i < tx; ++i)
    for (uint32_t j = 0; j < tx; ++j) {
      cpx acc = 0.0;
      for (uint32_t b = 0; b < beams; ++b)
        acc += std::conj(h[size_t(b) * tx + i]) * h[size_t(b) * tx + j];
      if (i == j) acc += sigma2;
      a[size_t(i) * tx + j] = acc;
    }
  return a;
}
}  // namespace

cvec mmse_solve_float(const cvec& h, uint32_t beams, uint32_t tx,
                      const cvec& y, double sigma2) {
  auto a = gram_matrix(h, beams, tx, sigma2);
  cvec rhs(tx, 0.0);
  for (uint32_t i = 0; i < tx; ++i)
    for (uint32_t b = 0; b < beams; ++b)
      rhs[i] += std::conj(h[size_t(b) * tx + i]) * y[b];
  return solve_dense(std::move(a), std::move(rhs), tx);
}

bool mmse_pd_float(const cvec& h, uint32_t beams, uint32_t tx, double sigma2) {
  auto a = gram_matrix(h, beams, tx, sigma2);
  // Cholesky; fails iff some pivot is non-positive.
  for (uint32_t j = 0; j < tx; ++j) {
    double d = a[size_t(j) * tx + j].real();
    for (uint32_t k = 0; k < j; ++k) d -= std::norm(a[size_t(j) * tx + k]);
    if (!(d > 0.0)) return false;
    double l = std::sqrt(d);
    a[size_t(j) * tx + j] = l;
    for (uint32_t i = j + 1; i < tx; ++i) {
      cpx s = a[size_t(i) * tx + j];
      for (uint32_t k = 0; k < j; ++k)
        s -= a[size_t(i) * tx + k] * std::conj(a[size_t(j) * tx + k]);
      a[size_t(i) * tx + j] = s / l;
    }
  }
  return true;
}

}  // namespace terasim::kernels
