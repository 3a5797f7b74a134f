#include "xxdeph/thermo.hpp"

#include "xxdeph/bessel.hpp"
#include "xxdeph/errors.hpp"
#include "xxdeph/mode_sum.hpp"
#include "xxdeph/parallel.hpp"
#include "xxdeph/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace xxdeph {

namespace {
constexpr cplx I{0.0, 1.0};
constexpr double pi = std::numbers::pi;

double wrap_q(double q) {
    q = std::fmod(q, 2 * pi);
    if (q > pi) q -= 2 * pi;
    if (q <= -pi) q += 2 * pi;
    return q;
}
} // namespace

cplx f_thermo_omega(cplx s, double omega, double gamma) {
    const double a = 4.0 * gamma;
    const cplx st = s + a;
    const cplx R = sqrt_segment(st, omega);
    // R - a = (s (s + 2a) + w^2)/(R + a) avoids cancellation for small s and w
    if (R.real() >= 0.0) return (R + a) / (s * (s + 2.0 * a) + omega * omega);
    return 1.0 / (R - a);
}

cplx f_thermo(cplx s, double q, const ChainParams& p) {
    return f_thermo_omega(s, dispersion(q, p.J), p.gamma);
}

cplx f_telegrapher(cplx s, double q, const ChainParams& p) {
    const double k = wrap_q(q);
    const cplx den = s * s + 4.0 * p.gamma * s + 8.0 * p.J * p.J * k * k;
    if (std::abs(den) < 1e-300) throw SingularInputError("telegrapher kernel evaluated at a pole");
    return (s + 4.0 * p.gamma) / den;
}

cplx gl0_thermo_omega(cplx s, double omega, double gamma, int l) {
    if (l < 0) throw ConfigError("gl0_thermo needs l >= 0");
    const cplx F = f_thermo_omega(s, omega, gamma);
    if (l == 0) return F;
    const cplx st = s + 4.0 * gamma;
    const cplx R = sqrt_segment(st, omega);
    return F * std::pow(I * omega / (st + R), l);
}

cplx gl0_thermo(cplx s, double q, int l, const ChainParams& p) {
    return gl0_thermo_omega(s, dispersion(q, p.J), p.gamma, l);
}

cplx ThermoKernel::operator()(cplx s) const {
    ChainParams p;
    p.J = J;
    p.gamma = gamma;
    const double w = dispersion(q, J);
    switch (kind) {
    case KernelKind::exact:
        return gl0_thermo_omega(s, w, gamma, l);
    case KernelKind::telegrapher:
        return f_telegrapher(s, q, p);
    case KernelKind::ballistic_offdiag: {
        const cplx st = s + 4.0 * gamma;
        const cplx R = sqrt_segment(st, w);
        return std::pow(I * w, l) / (R * std::pow(st + R, l));
    }
    case KernelKind::diffusive_offdiag: {
        if (!(gamma > 0)) throw ConfigError("diffusive kernel needs gamma > 0");
        const double k = wrap_q(q);
        return std::pow(I * J / (2.0 * gamma), l) * std::pow(k, l) /
               (s + 2.0 * J * J * k * k / gamma);
    }
    }
    return 0.0;
}

namespace {

PipelineOptions pipeline_from(const DensityOptions& opt) {
    PipelineOptions po;
    po.kernel = KernelChoice::thermodynamic;
    po.inversion = opt.method;
    po.talbot = opt.talbot;
    po.enclose = opt.enclose;
    po.threads = opt.threads;
    return po;
}

} // namespace

std::vector<double> density_thermo_profile(const std::vector<long>& xs, double t,
                                           const DiagonalInitialState& init,
                                           const ChainParams& p, const DensityOptions& opt) {
    return density_profile(init, p, t, xs, pipeline_from(opt));
}

double density_thermo(long x, double t, const DiagonalInitialState& init, const ChainParams& p,
                      const DensityOptions& opt) {
    return density_thermo_profile({x}, t, init, p, opt)[0];
}

std::vector<double> density_thermo_profile(const std::vector<long>& xs, double t,
                                           const std::function<cplx(double)>& cq,
                                           const ChainParams& p, const DensityOptions& opt) {
    const int nq = opt.nq > 0 ? opt.nq : std::max(p.L, 2048);
    if (nq < 2) throw ConfigError("q grid needs at least 2 points");
    // Delta state on the nq ring carries c(q) = 1; the continuum data enter as weights.
    ChainParams pg(nq, p.J, p.gamma);
    auto unit = DiagonalInitialState::delta(nq, 0);
    auto w = density_modes(unit, pg, t, pipeline_from(opt));
    for (int n = 1; n <= nq; ++n) w[n - 1] *= cq(2.0 * pi * n / nq);
    std::vector<cplx> out(xs.size());
    mode_sum(w, xs, out, opt.threads);
    std::vector<double> re(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) re[i] = out[i].real();
    return re;
}

double density_shorttime(long x, double t, const ChainParams& p) {
    if (!(t >= 0)) throw ConfigError("density_shorttime needs t >= 0");
    const double j = bessel_jn(static_cast<int>(std::abs(x)), 4.0 * p.J * t);
    return j * j * std::exp(-4.0 * p.gamma * t);
}

double diffusion_constant(const ChainParams& p) {
    if (!(p.gamma > 0)) throw ConfigError("diffusion constant undefined for gamma = 0");
    return 2.0 * p.J * p.J / p.gamma;
}

double density_longtime(double x, double t, const ChainParams& p) {
    const double D = diffusion_constant(p);
    if (!(t > 0)) throw ConfigError("density_longtime needs t > 0");
    return std::exp(-x * x / (4.0 * D * t)) / std::sqrt(4.0 * pi * D * t);
}

double hermite_he(int n, double z) {
    if (n < 0) throw ConfigError("Hermite order must be >= 0");
    double h0 = 1.0, h1 = z;
    if (n == 0) return h0;
    for (int k = 1; k < n; ++k) {
        double h2 = z * h1 - k * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

cplx offdiag_longtime(double x, int l, double t, const ChainParams& p) {
    if (l < 0) throw ConfigError("offdiag_longtime needs l >= 0");
    const double D = diffusion_constant(p);
    if (!(t > 0)) throw ConfigError("offdiag_longtime needs t > 0");
    const double sigma = std::sqrt(2.0 * D * t);
    const double y = x + 0.5 * l;
    const double z = y / sigma;
    const double gauss = std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * pi));
    // d^l/dy^l gauss = (-1)^l He_l(y/sigma) gauss / sigma^l
    const double deriv = (l % 2 ? -1.0 : 1.0) * hermite_he(l, z) * gauss / std::pow(sigma, l);
    return std::pow(I * p.J / (2.0 * p.gamma), l) * deriv;
}

std::vector<cplx> offdiag_ballistic_profile(const std::vector<long>& xs, int l, double t,
                                            const ChainParams& p, const DensityOptions& opt) {
    if (l < 1) throw ConfigError("offdiag_ballistic needs l >= 1");
    if (!(t >= 0)) throw ConfigError("offdiag_ballistic needs t >= 0");
    if (t == 0.0) return std::vector<cplx>(xs.size(), 0.0);
    const int nq = opt.nq > 0 ? opt.nq : std::max(p.L, 2048);
    TalbotConfig cfg = opt.talbot;
    cfg.conjugate_symmetric = true;
    if (opt.enclose != Enclosure::never) cfg.imag_extent = 8.0 * p.J;
    TalbotRule rule(t, cfg);
    const auto& s = rule.nodes();
    const double damp = std::exp(-4.0 * p.gamma * t);
    const double sign = l % 2 ? -1.0 : 1.0;
    std::vector<cplx> w(nq);
    parallel_for(nq, opt.threads, [&](std::size_t b, std::size_t e) {
        std::vector<cplx> v(s.size());
        for (std::size_t j = b; j < e; ++j) {
            const int n = static_cast<int>(j) + 1;
            const double w_n = n == nq ? 0.0 : dispersion(2.0 * pi * n / nq, p.J);
            if (w_n == 0.0) {
                w[j] = 0.0;
                continue;
            }
            for (std::size_t k = 0; k < s.size(); ++k) {
                const cplx R = sqrt_segment(s[k], w_n);
                v[k] = std::pow(w_n / (s[k] + R), l) / R;
            }
            const double f = rule.combine(v).real();
            w[j] = sign * unit_root(static_cast<long long>(n) * l, 2LL * nq) * damp * f;
        }
    });
    std::vector<cplx> out(xs.size());
    mode_sum(w, xs, out, opt.threads);
    return out;
}

cplx offdiag_ballistic(long x, int l, double t, const ChainParams& p, const DensityOptions& opt) {
    return offdiag_ballistic_profile({x}, l, t, p, opt)[0];
}

} // namespace xxdeph
