// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <vector>

#include "kernels_impl.hpp"

namespace misi::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// [re0, im0, re1, im1] lane sums: returns {sum of even lanes, sum of odd lanes}.
inline void hsum_pairs(__m256d v, double& even, double& odd) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  even = _mm_cvtsd_f64(s);
  odd = _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

inline __m256d load2(const cplx* p) { return _mm256_loadu_pd(reinterpret_cast<const double*>(p)); }
inline void store2(cplx* p, __m256d v) { _mm256_storeu_pd(reinterpret_cast<double*>(p), v); }
inline __m256d swap_reim(__m256d v) { return _mm256_permute_pd(v, 0b0101); }
inline __m256d dup_re(__m256d v) { return _mm256_movedup_pd(v); }
inline __m256d dup_im(__m256d v) { return _mm256_permute_pd(v, 0b1111); }

// Same per-element accumulation as cdot_tile below, so a GEMM entry equals the
// matching single dot product bitwise.
template <bool Conj>
cplx cdot(const cplx* x, const cplx* y, std::size_t k) {
  __m256d rr = _mm256_setzero_pd(), ri = _mm256_setzero_pd();
  std::size_t p = 0;
  for (; p + 2 <= k; p += 2) {
    const __m256d x0 = load2(x + p), y0 = load2(y + p);
    rr = _mm256_fmadd_pd(x0, y0, rr);
    ri = _mm256_fmadd_pd(x0, swap_reim(y0), ri);
  }
  double rre, rim, ire, iim;
  hsum_pairs(rr, rre, rim);
  hsum_pairs(ri, ire, iim);
  double re = Conj ? rre + rim : rre - rim;
  double im = Conj ? ire - iim : ire + iim;
  for (std::size_t q = p; q < k; ++q) {
    if (Conj) {
      re += x[q].real() * y[q].real() + x[q].imag() * y[q].imag();
      im += x[q].real() * y[q].imag() - x[q].imag() * y[q].real();
    } else {
      re += x[q].real() * y[q].real() - x[q].imag() * y[q].imag();
      im += x[q].real() * y[q].imag() + x[q].imag() * y[q].real();
    }
  }
  return {re, im};
}

cplx cdotu(const cplx* a, const cplx* b, std::size_t n) { return cdot<false>(a, b, n); }
cplx cdotc(const cplx* a, const cplx* b, std::size_t n) { return cdot<true>(a, b, n); }

double cnorm2(const cplx* a, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a0 = load2(a + i), a1 = load2(a + i + 2);
    s0 = _mm256_fmadd_pd(a0, a0, s0);
    s1 = _mm256_fmadd_pd(a1, a1, s1);
  }
  for (; i + 2 <= n; i += 2) {
    const __m256d a0 = load2(a + i);
    s0 = _mm256_fmadd_pd(a0, a0, s0);
  }
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
  return s;
}

void cmul(const cplx* a, const cplx* b, cplx* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d av = load2(a + i), bv = load2(b + i);
    const __m256d t = _mm256_mul_pd(dup_im(av), swap_reim(bv));
    store2(out + i, _mm256_fmaddsub_pd(dup_re(av), bv, t));
  }
  for (; i < n; ++i) {
    const double re = a[i].real() * b[i].real() - a[i].imag() * b[i].imag();
    const double im = a[i].real() * b[i].imag() + a[i].imag() * b[i].real();
    out[i] = {re, im};
  }
}

void cmulc(const cplx* a, const cplx* b, cplx* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d av = load2(a + i), bv = load2(b + i);
    const __m256d t = _mm256_mul_pd(dup_im(av), swap_reim(bv));
    store2(out + i, _mm256_fmsubadd_pd(dup_re(av), bv, t));
  }
  for (; i < n; ++i) {
    const double re = a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    const double im = a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
    out[i] = {re, im};
  }
}

void caxpy(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
  const __m256d ar = _mm256_set1_pd(alpha.real());
  const __m256d ai = _mm256_set1_pd(alpha.imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d xv = load2(x + i);
    const __m256d prod = _mm256_fmaddsub_pd(ar, xv, _mm256_mul_pd(ai, swap_reim(xv)));
    store2(y + i, _mm256_add_pd(load2(y + i), prod));
  }
  for (; i < n; ++i) {
    const double re = y[i].real() + (alpha.real() * x[i].real() - alpha.imag() * x[i].imag());
    const double im = y[i].imag() + (alpha.real() * x[i].imag() + alpha.imag() * x[i].real());
    y[i] = {re, im};
  }
}

void caxpyc(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
  const __m256d av = _mm256_setr_pd(alpha.real(), alpha.imag(), alpha.real(), alpha.imag());
  const __m256d aswap = swap_reim(av);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d xv = load2(x + i);
    const __m256d prod = _mm256_fmsubadd_pd(dup_re(xv), av, _mm256_mul_pd(dup_im(xv), aswap));
    store2(y + i, _mm256_add_pd(load2(y + i), prod));
  }
  for (; i < n; ++i) {
    const double re = y[i].real() + (alpha.real() * x[i].real() + alpha.imag() * x[i].imag());
    const double im = y[i].imag() + (alpha.imag() * x[i].real() - alpha.real() * x[i].imag());
    y[i] = {re, im};
  }
}

// C[m x n] = A[m x k] * B[k x n]; 4 x 8 register tiles, scalar edges.
void dgemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
              std::size_t k) {
  const std::size_t n8 = n - n % 8;
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* a0 = a + i * k;
    const double* a1 = a0 + k;
    const double* a2 = a1 + k;
    const double* a3 = a2 + k;
    for (std::size_t j = 0; j < n8; j += 8) {
      __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
      __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
      __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
      __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d b0 = _mm256_loadu_pd(b + p * n + j);
        const __m256d b1 = _mm256_loadu_pd(b + p * n + j + 4);
        __m256d av = _mm256_broadcast_sd(a0 + p);
        c00 = _mm256_fmadd_pd(av, b0, c00);
        c01 = _mm256_fmadd_pd(av, b1, c01);
        av = _mm256_broadcast_sd(a1 + p);
        c10 = _mm256_fmadd_pd(av, b0, c10);
        c11 = _mm256_fmadd_pd(av, b1, c11);
        av = _mm256_broadcast_sd(a2 + p);
        c20 = _mm256_fmadd_pd(av, b0, c20);
        c21 = _mm256_fmadd_pd(av, b1, c21);
        av = _mm256_broadcast_sd(a3 + p);
        c30 = _mm256_fmadd_pd(av, b0, c30);
        c31 = _mm256_fmadd_pd(av, b1, c31);
      }
      double* ci = c + i * n + j;
      _mm256_storeu_pd(ci, c00);
      _mm256_storeu_pd(ci + 4, c01);
      _mm256_storeu_pd(ci + n, c10);
      _mm256_storeu_pd(ci + n + 4, c11);
      _mm256_storeu_pd(ci + 2 * n, c20);
      _mm256_storeu_pd(ci + 2 * n + 4, c21);
      _mm256_storeu_pd(ci + 3 * n, c30);
      _mm256_storeu_pd(ci + 3 * n + 4, c31);
    }
  }
  for (; i < m; ++i) {
    for (std::size_t j = 0; j < n8; j += 8) {
      __m256d c0 = _mm256_setzero_pd(), c1 = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d av = _mm256_broadcast_sd(a + i * k + p);
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + p * n + j), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + p * n + j + 4), c1);
      }
      _mm256_storeu_pd(c + i * n + j, c0);
      _mm256_storeu_pd(c + i * n + j + 4, c1);
    }
  }
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = n8; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[r * k + p] * b[p * n + j];
      c[r * n + j] = s;
    }
}

// rows x cols -> cols x rows
void transpose(const double* src, double* dst, std::size_t rows, std::size_t cols) {
  constexpr std::size_t kBlock = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += kBlock)
    for (std::size_t c0 = 0; c0 < cols; c0 += kBlock)
      for (std::size_t r = r0; r < std::min(rows, r0 + kBlock); ++r)
        for (std::size_t c = c0; c < std::min(cols, c0 + kBlock); ++c) dst[c * rows + r] = src[r * cols + c];
}

std::vector<double>& pack_buffer() {
  thread_local std::vector<double> buf;
  return buf;
}

void dgemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
              std::size_t k) {
  std::vector<double>& bt = pack_buffer();
  bt.resize(k * n);
  transpose(b, bt.data(), n, k);
  dgemm_nn(a, bt.data(), c, m, n, k);
}

void dgemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
              std::size_t k) {
  std::vector<double>& at = pack_buffer();
  at.resize(m * k);
  transpose(a, at.data(), k, m);
  dgemm_nn(at.data(), b, c, m, n, k);
}

// 2 x 2 tile of complex dot products over k. Conj selects sum conj(a) b.
template <bool Conj>
void cdot_tile(const cplx* a0, const cplx* a1, const cplx* b0, const cplx* b1, std::size_t k, cplx out[4]) {
  __m256d rr[4], ri[4];
  for (int t = 0; t < 4; ++t) rr[t] = ri[t] = _mm256_setzero_pd();
  std::size_t p = 0;
  for (; p + 2 <= k; p += 2) {
    const __m256d x0 = load2(a0 + p), x1 = load2(a1 + p);
    const __m256d y0 = load2(b0 + p), y1 = load2(b1 + p);
    const __m256d s0 = swap_reim(y0), s1 = swap_reim(y1);
    rr[0] = _mm256_fmadd_pd(x0, y0, rr[0]);
    ri[0] = _mm256_fmadd_pd(x0, s0, ri[0]);
    rr[1] = _mm256_fmadd_pd(x0, y1, rr[1]);
    ri[1] = _mm256_fmadd_pd(x0, s1, ri[1]);
    rr[2] = _mm256_fmadd_pd(x1, y0, rr[2]);
    ri[2] = _mm256_fmadd_pd(x1, s0, ri[2]);
    rr[3] = _mm256_fmadd_pd(x1, y1, rr[3]);
    ri[3] = _mm256_fmadd_pd(x1, s1, ri[3]);
  }
  const cplx* as[2] = {a0, a1};
  const cplx* bs[2] = {b0, b1};
  for (int t = 0; t < 4; ++t) {
    double rre, rim, ire, iim;
    hsum_pairs(rr[t], rre, rim);
    hsum_pairs(ri[t], ire, iim);
    double re = Conj ? rre + rim : rre - rim;
    double im = Conj ? ire - iim : ire + iim;
    const cplx* x = as[t / 2];
    const cplx* y = bs[t % 2];
    for (std::size_t q = p; q < k; ++q) {
      if (Conj) {
        re += x[q].real() * y[q].real() + x[q].imag() * y[q].imag();
        im += x[q].real() * y[q].imag() - x[q].imag() * y[q].real();
      } else {
        re += x[q].real() * y[q].real() - x[q].imag() * y[q].imag();
        im += x[q].real() * y[q].imag() + x[q].imag() * y[q].real();
      }
    }
    out[t] = {re, im};
  }
}

template <bool Conj>
void cgemm_dot(const cplx* a, const cplx* b, cplx* c, std::size_t m, std::size_t n, std::size_t k) {
  const auto single = Conj ? cdotc : cdotu;
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
      cplx t[4];
      cdot_tile<Conj>(a + i * k, a + (i + 1) * k, b + j * k, b + (j + 1) * k, k, t);
      c[i * n + j] = t[0];
      c[i * n + j + 1] = t[1];
      c[(i + 1) * n + j] = t[2];
      c[(i + 1) * n + j + 1] = t[3];
    }
    for (; j < n; ++j) {
      c[i * n + j] = single(a + i * k, b + j * k, k);
      c[(i + 1) * n + j] = single(a + (i + 1) * k, b + j * k, k);
    }
  }
  for (; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = single(a + i * k, b + j * k, k);
}

void cgemm_nt(const cplx* a, const cplx* b, cplx* c, std::size_t m, std::size_t n, std::size_t k) {
  cgemm_dot<false>(a, b, c, m, n, k);
}

void cgemm_ct(const cplx* a, const cplx* b, cplx* c, std::size_t m, std::size_t n, std::size_t k) {
  cgemm_dot<true>(a, b, c, m, n, k);
}

}  // namespace

const KernelTable kAvx2Table{"avx2", cdotu,  cdotc,    cnorm2,   cmul,     cmulc,    caxpy,
                             caxpyc, dgemm_nt, dgemm_nn, dgemm_tn, cgemm_nt, cgemm_ct};

}  // namespace misi::kernels::detail
