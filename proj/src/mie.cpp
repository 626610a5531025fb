#include <cmath>
#include <string>

#include "misi/error.hpp"
#include "misi/forward.hpp"
#include "misi/special.hpp"

namespace misi {
namespace {

// J_0..J_nmax at complex argument; the real-argument path is used when possible so
// that an index-matched cylinder cancels exactly.
std::vector<cplx> bessel_seq(cplx z, int nmax) {
  if (z.imag() == 0.0 && z.real() > 0.0) {
    std::vector<cplx> out(static_cast<std::size_t>(nmax) + 1);
    for (int n = 0; n <= nmax; ++n) out[static_cast<std::size_t>(n)] = special::bessel_j(n, z.real());
    return out;
  }
  return special::bessel_j_sequence(z, nmax);
}

template <class Seq>
cplx deriv(const Seq& s, int n, cplx x) {
  if (n == 0) return -s[1];
  return s[static_cast<std::size_t>(n) - 1] - static_cast<double>(n) / x * s[static_cast<std::size_t>(n)];
}

}  // namespace

std::vector<cplx> mie_cylinder(double eps_r, double sigma, double radius, double freq,
                               std::span<const Point2> points, Point2 tx, std::optional<int> fixed_order) {
  if (!(radius > 0.0) || !(freq > 0.0)) throw ValueError("mie: radius and frequency must be positive");
  if (!(eps_r >= 1.0) || !(sigma >= 0.0)) throw ValueError("mie: need eps_r >= 1 and sigma >= 0");
  const double kb = wavenumber(freq);
  const cplx eps_c(eps_r, -sigma / (angular_frequency(freq) * kEps0));
  const cplx k1 = kb * std::sqrt(eps_c);
  const double rt = std::hypot(tx.x, tx.y);
  if (!(rt > radius)) throw ValueError("mie: source must lie outside the cylinder");
  const double phit = std::atan2(tx.y, tx.x);

  const int n_min = static_cast<int>(std::ceil(kb * radius)) + 10;
  const int n_cap = fixed_order ? *fixed_order : n_min + 40;

  const auto jb = bessel_seq(cplx(kb * radius), n_cap + 1);
  const auto hb = special::hankel2_sequence(kb * radius, n_cap + 1);
  const auto j1 = bessel_seq(k1 * radius, n_cap + 1);
  const auto ht = special::hankel2_sequence(kb * rt, n_cap + 1);

  // Per order n: incident coefficient i_n = H_n(kb rt); outside a_n H_n(kb r), inside b_n J_n(k1 r).
  std::vector<cplx> a(static_cast<std::size_t>(n_cap) + 1), b(a.size());
  for (int n = 0; n <= n_cap; ++n) {
    const auto un = static_cast<std::size_t>(n);
    const cplx jn = jb[un], jd = deriv(jb, n, cplx(kb * radius));
    const cplx hn = hb[un], hd = deriv(hb, n, cplx(kb * radius));
    const cplx j1n = j1[un], j1d = deriv(j1, n, k1 * radius);
    const cplx in = ht[un];
    const cplx num = kb * (jd * j1n) - k1 * (jn * j1d);
    const cplx den = k1 * hn * j1d - kb * hd * j1n;
    a[un] = in * num / den;
    b[un] = (in * jn + a[un] * hn) / j1n;
  }

  std::vector<cplx> out(points.size());
  const cplx pref(0.0, -0.25);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double r = std::hypot(points[i].x, points[i].y);
    const double dphi = std::atan2(points[i].y, points[i].x) - phit;
    const bool inside = r < radius;
    if (!inside && r == 0.0) throw ValueError("mie: invalid observation point");
    const std::vector<cplx> radial =
        inside ? bessel_seq(k1 * r, n_cap) : special::hankel2_sequence(kb * r, n_cap);
    const auto& coef = inside ? b : a;
    cplx sum = coef[0] * radial[0];
    bool converged = false;
    for (int n = 1; n <= n_cap; ++n) {
      const auto un = static_cast<std::size_t>(n);
      const cplx term = 2.0 * coef[un] * radial[un] * std::cos(static_cast<double>(n) * dphi);
      sum += term;
      if (!fixed_order && n >= n_min && std::abs(term) <= 1e-12 * std::abs(sum)) {
        converged = true;
        break;
      }
    }
    if (!fixed_order && !converged && std::abs(sum) > 0.0)
      throw NumericError("mie: series did not converge within " + std::to_string(n_cap) + " orders");
    out[i] = pref * sum;
  }
  return out;
}

}  // namespace misi
