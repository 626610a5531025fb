#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "misi/types.hpp"

namespace misi::test {

inline ComplexBatch random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  ComplexBatch b(rows, cols);
  for (auto& v : b.data()) v = cplx(n(rng), n(rng));
  return b;
}

inline ComplexGrid random_grid(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  ComplexGrid g(n);
  for (auto& v : g.values()) v = cplx(d(rng), d(rng));
  return g;
}

// plain loops, independent of the kernel tables
inline cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline double sq_norm(std::span<const cplx> a) {
  double s = 0.0;
  for (const auto& v : a) s += std::norm(v);
  return s;
}

inline double rel_diff(std::span<const cplx> a, std::span<const cplx> b) {
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) num += std::norm(a[i] - b[i]);
  const double den = sq_norm(b);
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline double rel_err(cplx a, cplx b) {
  const double d = std::abs(b);
  return d > 0.0 ? std::abs(a - b) / d : std::abs(a);
}

}  // namespace misi::test
