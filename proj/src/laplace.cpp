#include "xxdeph/laplace.hpp"

#include "xxdeph/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace xxdeph {

namespace {
constexpr cplx I{0.0, 1.0};
constexpr double pi = std::numbers::pi;
} // namespace

void TalbotConfig::validate() const {
    if (M < 8 || M % 2) throw ConfigError("Talbot node count M must be even and >= 8");
    if (!(imag_extent >= 0.0)) throw ConfigError("Talbot imag_extent must be >= 0");
    if (!(stretch >= 1.0)) throw ConfigError("Talbot stretch must be >= 1");
    if (max_nodes < M) throw ConfigError("Talbot max_nodes must be >= M");
    if (!std::isfinite(shift)) throw ConfigError("Talbot shift must be finite");
}

TalbotRule::TalbotRule(double t, const TalbotConfig& cfg, int refine)
    : sym_(cfg.conjugate_symmetric), t_(t) {
    cfg.validate();
    if (!(t > 0.0)) throw ConfigError("Talbot inversion needs t > 0");
    const double lambda = 2.0 * cfg.M / (5.0 * t);
    double nu = 1.0;
    if (cfg.imag_extent > 0.0)
        nu = std::max(1.0, cfg.stretch * cfg.imag_extent / (lambda * pi / 2.0));
    long n = static_cast<long>(std::ceil(cfg.M * nu / 2.0)) * 2;
    if (n > cfg.max_nodes) {
        n = cfg.max_nodes - cfg.max_nodes % 2;
        nu = std::max(1.0, static_cast<double>(n) / cfg.M);
    }
    lambda_ = lambda;
    nu_ = nu;
    n *= refine;
    const double h = pi / n;
    const long kmin = sym_ ? 0 : -(n - 1);
    s_.reserve(n);
    w_.reserve(n);
    for (long k = kmin; k <= n - 1; ++k) {
        const double th = k * h;
        cplx s, ds;
        if (k == 0) {
            s = cfg.shift + lambda;
            ds = I * lambda * nu;
        } else {
            const double cot = std::cos(th) / std::sin(th);
            const double sn = std::sin(th);
            s = cfg.shift + lambda * cplx(th * cot, nu * th);
            ds = lambda * cplx(cot - th / (sn * sn), nu);
        }
        s_.push_back(s);
        w_.push_back(std::exp(s * t) * ds / (2.0 * I * static_cast<double>(n)));
    }
}

cplx TalbotRule::apply(const LaplaceKernel& F) const {
    std::vector<cplx> v(s_.size());
    for (std::size_t k = 0; k < s_.size(); ++k) {
        v[k] = F(s_[k]);
        if (!std::isfinite(v[k].real()) || !std::isfinite(v[k].imag()))
            throw ContourCollisionError("kernel not finite on the Talbot contour", s_[k]);
    }
    return combine(v);
}

TalbotResult talbot_invert(const LaplaceKernel& F, double t, const TalbotConfig& cfg) {
    TalbotRule rule(t, cfg);
    TalbotResult r;
    r.value = rule.apply(F);
    r.nodes = static_cast<int>(rule.nodes().size());
    if (cfg.precision_mode == PrecisionMode::checked) {
        TalbotRule fine(t, cfg, 2);
        const cplx v2 = fine.apply(F);
        r.error_estimate = std::abs(v2 - r.value);
        r.value = v2;
        r.nodes += static_cast<int>(fine.nodes().size());
    }
    return r;
}

cplx sqrt_segment(cplx s, double omega) {
    if (s == 0.0) return omega;
    const cplx r = omega / s;
    return s * std::sqrt(1.0 + r * r);
}

double pv_quadrature(const std::function<double(double)>& f, double a, double b, double c,
                     double tol) {
    if (!(a < c && c < b)) throw ConfigError("pv_quadrature needs a < c < b");
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    // fold the symmetric part around c: the odd singular part cancels
    const double d = std::min(c - a, b - c);
    auto folded = [&](double u) { return f(c + u) + f(c - u); };
    // c carries a rounding error of one ulp, which leaves a residue ~ R ulp(c)/u^2 in the fold;
    // below u0 the (even, smooth) folded integrand is taken as constant.
    const double u1 = 1e-3 * d;
    const double R = 0.5 * u1 * std::abs(f(c + u1) - f(c - u1));
    const double ulp = std::nextafter(std::abs(c), INFINITY) - std::abs(c);
    const double u0 = std::min(1e-2 * d, std::max(1e-4 * d, 100.0 * R * ulp / tol));
    double e1 = 0.0, e2 = 0.0, l1 = 0.0, l2 = 0.0;
    const double f0 = folded(u0);
    double i1 = GK::integrate(folded, u0, d, 20, tol, &e1, &l1) + u0 * f0;
    l1 += u0 * std::abs(f0);
    double i2 = 0.0;
    if (c - a > d) i2 = GK::integrate(f, a, c - d, 20, tol, &e2, &l2);
    else if (b - c > d) i2 = GK::integrate(f, c + d, b, 20, tol, &e2, &l2);
    const double val = i1 + i2;
    const double scale = std::max(1.0, l1 + l2);
    if (!std::isfinite(val) || e1 + e2 > 100.0 * tol * scale)
        throw QuadratureError("principal-value quadrature did not reach tolerance", a, b, e1 + e2);
    return val;
}

ContourPieces contour_invert(double t, double omega, double gamma) {
    if (!(t > 0.0)) throw ConfigError("contour inversion needs t > 0");
    if (!(omega >= 0.0) || !(gamma >= 0.0)) throw ConfigError("contour inversion needs omega, gamma >= 0");
    const double a = 4.0 * gamma;
    if (std::abs(a - omega) < 1e-8)
        throw MarginalRegimeError("marginal regime 4 gamma = omega: no closed contour form");
    ContourPieces out;
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double w2 = omega * omega;
    // branch cut in y = w sin(phi):
    // (2/pi) int_0^{pi/2} cos(w t sin phi) w^2 cos^2 phi / (w^2 cos^2 phi - a^2) dphi
    auto h = [&](double ph) {
        const double c = std::cos(ph);
        const double c2 = w2 * c * c;
        return std::cos(omega * t * std::sin(ph)) * c2 / (c2 - a * a);
    };
    double cut = 0.0;
    if (a > omega) {
        out.regime = PoleRegime::real_poles;
        const double sp = std::sqrt(a * a - w2);
        out.pole_term = a * std::exp(t * sp) / sp;
        if (omega > 0.0) {
            double err = 0.0, l1 = 0.0;
            cut = GK::integrate(h, 0.0, pi / 2, 20, 1e-11, &err, &l1);
            if (err > 1e-9 * std::max(1.0, l1))
                throw QuadratureError("branch-cut quadrature did not converge", 0.0, pi / 2, err);
        }
    } else {
        out.regime = PoleRegime::imaginary_poles;
        const double y0 = std::sqrt(w2 - a * a);
        out.pole_term = a > 0.0 ? a * std::sin(t * y0) / y0 : 0.0;
        if (a == 0.0) {
            double err = 0.0, l1 = 0.0;
            cut = GK::integrate([&](double ph) { return std::cos(omega * t * std::sin(ph)); }, 0.0,
                                pi / 2, 20, 1e-11, &err, &l1);
        } else {
            const double ph0 = std::acos(a / omega);
            cut = pv_quadrature(h, 0.0, pi / 2, ph0);
        }
    }
    out.branchcut_term = 2.0 / pi * cut;
    return out;
}

ContourPieces contour_invert(double t, double q, const ChainParams& p) {
    p.validate();
    return contour_invert(t, dispersion(q, p.J), p.gamma);
}

} // namespace xxdeph
