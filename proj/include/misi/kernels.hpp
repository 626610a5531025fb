#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference implementation
// and, on x86-64, an AVX2/FMA variant selected at runtime. Variants differ only in
// floating-point reduction order; each variant is deterministic on its own.

#include <cstddef>
#include <span>
#include <string_view>

#include "misi/types.hpp"

namespace misi::kernels {

struct KernelTable {
  const char* name;
  // sum_i a_i * b_i
  cplx (*cdotu)(const cplx* a, const cplx* b, std::size_t n);
  // sum_i conj(a_i) * b_i
  cplx (*cdotc)(const cplx* a, const cplx* b, std::size_t n);
  double (*cnorm2)(const cplx* a, std::size_t n);
  // out = a * b
  void (*cmul)(const cplx* a, const cplx* b, cplx* out, std::size_t n);
  // out = conj(a) * b
  void (*cmulc)(const cplx* a, const cplx* b, cplx* out, std::size_t n);
  // y += alpha * x
  void (*caxpy)(cplx alpha, const cplx* x, cplx* y, std::size_t n);
  // y += alpha * conj(x)
  void (*caxpyc)(cplx alpha, const cplx* x, cplx* y, std::size_t n);
  // C[m x n] = A[m x k] * B[n x k]^T
  void (*dgemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                   std::size_t k);
  // C[m x n] = A[m x k] * B[k x n]
  void (*dgemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                   std::size_t k);
  // C[m x n] = A[k x m]^T * B[k x n]
  void (*dgemm_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                   std::size_t k);
  // complex C[m x n] = A[m x k] * B[n x k]^T (no conjugation)
  void (*cgemm_nt)(const cplx* a, const cplx* b, cplx* c, std::size_t m, std::size_t n, std::size_t k);
  // complex C[m x n] = conj(A[m x k]) * B[n x k]^T
  void (*cgemm_ct)(const cplx* a, const cplx* b, cplx* c, std::size_t m, std::size_t n, std::size_t k);
};

const KernelTable& scalar_table();
/// nullptr when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

/// Table used by the library. Chosen once from CPU features; the MISI_SIMD
/// environment variable ("scalar", "avx2") overrides.
const KernelTable& active();

/// Force a variant by name ("scalar", "avx2", "auto"). Returns false if unavailable.
/// Not thread-safe against concurrent kernel calls.
bool select(std::string_view name);

inline cplx dotu(std::span<const cplx> a, std::span<const cplx> b) {
  return active().cdotu(a.data(), b.data(), a.size());
}
inline cplx dotc(std::span<const cplx> a, std::span<const cplx> b) {
  return active().cdotc(a.data(), b.data(), a.size());
}
inline double norm2(std::span<const cplx> a) { return active().cnorm2(a.data(), a.size()); }
inline void mul(std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> out) {
  active().cmul(a.data(), b.data(), out.data(), a.size());
}
inline void mulc(std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> out) {
  active().cmulc(a.data(), b.data(), out.data(), a.size());
}
inline void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
  active().caxpy(alpha, x.data(), y.data(), x.size());
}
inline void axpyc(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
  active().caxpyc(alpha, x.data(), y.data(), x.size());
}

}  // namespace misi::kernels
