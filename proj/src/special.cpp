#include "misi/special.hpp"

#include <cmath>

#include "misi/error.hpp"

namespace misi::special {

double bessel_j(int n, double x) {
  if (n < 0) return (n % 2 == 0 ? 1.0 : -1.0) * bessel_j(-n, x);
  return std::cyl_bessel_j(static_cast<double>(n), x);
}

double bessel_y(int n, double x) {
  if (n < 0) return (n % 2 == 0 ? 1.0 : -1.0) * bessel_y(-n, x);
  return std::cyl_neumann(static_cast<double>(n), x);
}

cplx hankel2(int n, double x) {
  if (!(x > 0.0)) throw ValueError("hankel2: argument must be positive");
  return {bessel_j(n, x), -bessel_y(n, x)};
}

std::vector<cplx> bessel_j_sequence(cplx z, int nmax) {
  if (nmax < 0) throw ValueError("bessel_j_sequence: nmax must be non-negative");
  std::vector<cplx> out(static_cast<std::size_t>(nmax) + 1);
  if (std::abs(z) == 0.0) {
    out[0] = 1.0;
    return out;
  }
  // Start well above both the requested order and |z|; recurrence
  // J_{k-1} = (2k/z) J_k - J_{k+1} is stable downward.
  const int start = 2 * ((std::max(nmax, static_cast<int>(std::abs(z))) + 40 +
                          static_cast<int>(std::sqrt(40.0 * (std::abs(z) + 1.0)))) /
                         2);
  cplx next = 0.0, cur = 1e-300;
  cplx norm = 0.0;
  const cplx two_over_z = 2.0 / z;
  for (int k = start; k >= 1; --k) {
    const cplx prev = two_over_z * static_cast<double>(k) * cur - next;
    next = cur;
    cur = prev;  // cur = J_{k-1} (unnormalised)
    const int order = k - 1;
    if (order <= nmax) out[static_cast<std::size_t>(order)] = cur;
    if (order > 0 && order % 2 == 0) norm += 2.0 * cur;
    if (std::abs(cur) > 1e250) {
      // rescale everything accumulated so far
      const double s = 1e-250;
      cur *= s;
      next *= s;
      norm *= s;
      for (int i = order; i <= nmax; ++i) out[static_cast<std::size_t>(i)] *= s;
    }
  }
  norm += cur;  // J_0 term
  for (auto& v : out) v /= norm;
  return out;
}

std::vector<cplx> hankel2_sequence(double x, int nmax) {
  if (!(x > 0.0)) throw ValueError("hankel2_sequence: argument must be positive");
  std::vector<cplx> out(static_cast<std::size_t>(nmax) + 1);
  double y_prev = bessel_y(0, x);
  double y_cur = bessel_y(1, x);
  for (int n = 0; n <= nmax; ++n) {
    double yn;
    if (n == 0) {
      yn = y_prev;
    } else if (n == 1) {
      yn = y_cur;
    } else {
      const double y_next = 2.0 * (n - 1) / x * y_cur - y_prev;
      y_prev = y_cur;
      y_cur = y_next;
      yn = y_cur;
    }
    out[static_cast<std::size_t>(n)] = {bessel_j(n, x), -yn};
  }
  return out;
}

}  // namespace misi::special
