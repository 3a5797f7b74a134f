#pragma once

#include <complex>
#include <span>
#include <vector>

namespace xxdeph {

// out[k] = (1/L) sum_{n=1}^{L} e^{2 pi i n x_k / L} w[n-1]
// Horner evaluation, O(L) per site, blocks of sites vectorized.
void mode_sum(std::span<const std::complex<double>> w, std::span<const long> xs,
              std::span<std::complex<double>> out, int threads = 1);

// Real variant for conjugate-symmetric weights: w[L-1-n] == conj(w[n-1]) for n = 1..L-1
// and w[L-1] real. Touches only n <= L/2, so about half the work of mode_sum.
void mode_sum_real(std::span<const std::complex<double>> w, std::span<const long> xs,
                   std::span<double> out, int threads = 1);

// Fixed-order pairwise summation (thread-count independent).
double pairwise_sum(std::span<const double> v);
std::complex<double> pairwise_sum(std::span<const std::complex<double>> v);

} // namespace xxdeph
