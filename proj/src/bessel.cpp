#include "xxdeph/bessel.hpp"

#include "xxdeph/errors.hpp"

#include <cmath>

namespace xxdeph {

std::vector<double> bessel_j_sequence(double z, int nmax) {
    if (nmax < 0) throw ConfigError("bessel_j_sequence: nmax must be >= 0");
    std::vector<double> J(nmax + 1, 0.0);
    if (z == 0.0) {
        J[0] = 1.0;
        return J;
    }
    const double az = std::abs(z);
    // n + 20 + |z| plus a margin on the Airy scale z^{1/3} of the turning-point region
    int N = nmax + 20 + static_cast<int>(std::ceil(az)) + static_cast<int>(std::ceil(12.0 * std::cbrt(az)));
    if (N % 2) ++N;

    double bp1 = 0.0, b = 1e-30, norm = 0.0;
    // b holds the unnormalized J_k while stepping k = N .. 0
    for (int k = N; k >= 1; --k) {
        double bm1 = (2.0 * k / az) * b - bp1;
        bp1 = b;
        b = bm1;
        const int km1 = k - 1;
        if (km1 <= nmax) J[km1] = b;
        if (km1 == 0)
            norm += b;
        else if (km1 % 2 == 0)
            norm += 2.0 * b;
        if (std::abs(b) > 1e250) {
            b *= 1e-250;
            bp1 *= 1e-250;
            norm *= 1e-250;
            for (int i = km1; i <= nmax; ++i) J[i] *= 1e-250;
        }
    }
    for (double& v : J) v /= norm;
    if (z < 0)
        for (int i = 1; i <= nmax; i += 2) J[i] = -J[i];
    return J;
}

double bessel_jn(int n, double z) {
    int an = std::abs(n);
    double v = bessel_j_sequence(z, an)[an];
    return (n < 0 && an % 2) ? -v : v;
}

} // namespace xxdeph
