#include "xxdeph/mode_sum.hpp"

#include "xxdeph/errors.hpp"
#include "xxdeph/model.hpp"
#include "xxdeph/parallel.hpp"

#include <algorithm>

namespace xxdeph {

namespace {

constexpr int B = 32; // sites per Horner block

// acc_j = sum_{n=1}^{nt} w[n-1] zeta_j^n for a block of sites.
void horner_block(const std::complex<double>* w, long nt, const double* zr, const double* zi,
                  int nb, double* ar, double* ai) {
    double xr[B], xi[B], yr[B], yi[B];
    for (int j = 0; j < B; ++j) {
        xr[j] = j < nb ? zr[j] : 0.0;
        xi[j] = j < nb ? zi[j] : 0.0;
        yr[j] = w[nt - 1].real();
        yi[j] = w[nt - 1].imag();
    }
    for (long n = nt - 1; n >= 1; --n) {
        const double wr = w[n - 1].real(), wi = w[n - 1].imag();
#pragma GCC ivdep
        for (int j = 0; j < B; ++j) {
            const double r = yr[j] * xr[j] - yi[j] * xi[j] + wr;
            const double i = yr[j] * xi[j] + yi[j] * xr[j] + wi;
            yr[j] = r;
            yi[j] = i;
        }
    }
    for (int j = 0; j < nb; ++j) {
        ar[j] = yr[j] * xr[j] - yi[j] * xi[j];
        ai[j] = yr[j] * xi[j] + yi[j] * xr[j];
    }
}

} // namespace

void mode_sum(std::span<const std::complex<double>> w, std::span<const long> xs,
              std::span<std::complex<double>> out, int threads) {
    const long L = static_cast<long>(w.size());
    if (L < 1 || out.size() != xs.size()) throw ConfigError("mode_sum: size mismatch");
    const std::size_t nblocks = (xs.size() + B - 1) / B;
    parallel_for(nblocks, threads, [&](std::size_t b0, std::size_t b1) {
        double zr[B], zi[B], ar[B], ai[B];
        for (std::size_t b = b0; b < b1; ++b) {
            const std::size_t s0 = b * B;
            const int nb = static_cast<int>(std::min<std::size_t>(B, xs.size() - s0));
            for (int j = 0; j < nb; ++j) {
                auto z = unit_root(xs[s0 + j], L);
                zr[j] = z.real();
                zi[j] = z.imag();
            }
            horner_block(w.data(), L, zr, zi, nb, ar, ai);
            for (int j = 0; j < nb; ++j) out[s0 + j] = {ar[j] / L, ai[j] / L};
        }
    });
}

void mode_sum_real(std::span<const std::complex<double>> w, std::span<const long> xs,
                   std::span<double> out, int threads) {
    const long L = static_cast<long>(w.size());
    if (L < 1 || out.size() != xs.size()) throw ConfigError("mode_sum_real: size mismatch");
    const long h = (L - 1) / 2;
    const std::size_t nblocks = (xs.size() + B - 1) / B;
    parallel_for(nblocks, threads, [&](std::size_t b0, std::size_t b1) {
        double zr[B], zi[B], ar[B], ai[B];
        for (std::size_t b = b0; b < b1; ++b) {
            const std::size_t s0 = b * B;
            const int nb = static_cast<int>(std::min<std::size_t>(B, xs.size() - s0));
            for (int j = 0; j < nb; ++j) {
                auto z = unit_root(xs[s0 + j], L);
                zr[j] = z.real();
                zi[j] = z.imag();
            }
            if (h >= 1) {
                horner_block(w.data(), h, zr, zi, nb, ar, ai);
            } else {
                std::fill(ar, ar + nb, 0.0);
            }
            for (int j = 0; j < nb; ++j) {
                double v = w[L - 1].real() + 2.0 * ar[j];
                if (L % 2 == 0) {
                    long x = xs[s0 + j] % 2;
                    v += (x == 0 ? 1.0 : -1.0) * w[L / 2 - 1].real();
                }
                out[s0 + j] = v / L;
            }
        }
    });
}

namespace {
template <class T>
T pairwise(const T* v, std::size_t n) {
    if (n <= 16) {
        T s{};
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    std::size_t h = n / 2;
    return pairwise(v, h) + pairwise(v + h, n - h);
}
} // namespace

double pairwise_sum(std::span<const double> v) { return pairwise(v.data(), v.size()); }

std::complex<double> pairwise_sum(std::span<const std::complex<double>> v) {
    return pairwise(v.data(), v.size());
}

} // namespace xxdeph
