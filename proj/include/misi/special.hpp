#pragma once

#include <vector>

#include "misi/types.hpp"

namespace misi::special {

double bessel_j(int n, double x);
double bessel_y(int n, double x);

/// Second-kind Hankel function H_n^(2)(x) = J_n(x) - j Y_n(x), real x > 0, n >= 0.
cplx hankel2(int n, double x);

/// J_0(z) .. J_nmax(z) for complex z by Miller backward recurrence normalised
/// with J_0 + 2 sum_k J_2k = 1. Intended for |Im z| small relative to |z| + nmax.
std::vector<cplx> bessel_j_sequence(cplx z, int nmax);

/// H_0^(2)(x) .. H_nmax^(2)(x) for real x > 0 by forward recurrence on Y_n
/// (stable for Y) and std J_n.
std::vector<cplx> hankel2_sequence(double x, int nmax);

}  // namespace misi::special
