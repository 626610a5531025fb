#include "kernels_impl.hpp"

namespace misi::kernels::detail {
namespace {

// Complex arithmetic is spelled out on (re, im) pairs so results do not depend
// on the library's NaN-recovery path in operator*.

cplx cdotu(const cplx* a, const cplx* b, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += a[i].real() * b[i].real() - a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() + a[i].imag() * b[i].real();
  }
  return {re, im};
}

cplx cdotc(const cplx* a, const cplx* b, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  return {re, im};
}

double cnorm2(const cplx* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
  return s;
}

void cmul(const cplx* a, const cplx* b, cplx* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double re = a[i].real() * b[i].real() - a[i].imag() * b[i].imag();
    const double im = a[i].real() * b[i].imag() + a[i].imag() * b[i].real();
    out[i] = {re, im};
  }
}

void cmulc(const cplx* a, const cplx* b, cplx* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double re = a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    const double im = a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
    out[i] = {re, im};
  }
}

void caxpy(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
  const double ar = alpha.real(), ai = alpha.imag();
  for (std::size_t i = 0; i < n; ++i) {
    const double re = y[i].real() + (ar * x[i].real() - ai * x[i].imag());
    const double im = y[i].imag() + (ar * x[i].imag() + ai * x[i].real());
    y[i] = {re, im};
  }
}

void caxpyc(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
  const double ar = alpha.real(), ai = alpha.imag();
  for (std::size_t i = 0; i < n; ++i) {
    const double re = y[i].real() + (ar * x[i].real() + ai * x[i].imag());
    const double im = y[i].imag() + (ai * x[i].real() - ar * x[i].imag());
    y[i] = {re, im};
  }
}

void dgemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
              std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c[i * n + j] = s;
    }
  }
}

void dgemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
              std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void dgemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
              std::size_t k) {
  for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a + p * m;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double api = ap[i];
      double* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void cgemm_nt(const cplx* a, const cplx* b, cplx* c, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = cdotu(a + i * k, b + j * k, k);
}

void cgemm_ct(const cplx* a, const cplx* b, cplx* c, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = cdotc(a + i * k, b + j * k, k);
}

}  // namespace

const KernelTable kScalarTable{"scalar", cdotu,    cdotc,    cnorm2,   cmul,     cmulc,   caxpy,
                               caxpyc,   dgemm_nt, dgemm_nn, dgemm_tn, cgemm_nt, cgemm_ct};

}  // namespace misi::kernels::detail
