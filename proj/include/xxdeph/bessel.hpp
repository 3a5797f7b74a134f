#pragma once

#include <vector>

namespace xxdeph {

// J_0(z) .. J_nmax(z) by Miller's backward recurrence, normalized with
// J_0 + 2 sum_k J_2k = 1. Start order nmax + 20 + ceil(|z|) + ceil(12 |z|^{1/3}).
std::vector<double> bessel_j_sequence(double z, int nmax);

// Integer order J_n(z); negative n via J_{-n} = (-1)^n J_n.
double bessel_jn(int n, double z);

} // namespace xxdeph
