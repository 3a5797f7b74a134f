#include "xxdeph/ed_oracle.hpp"

#include "xxdeph/bessel.hpp"
#include "xxdeph/errors.hpp"
#include "xxdeph/log.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

namespace xxdeph {

namespace {
constexpr cplx I{0.0, 1.0};
}

cplx boundary_twist(double q, int L, Boundary b) {
    if (b == Boundary::untwisted) return 1.0;
    return std::exp(I * (0.5 * L * (q - std::numbers::pi)));
}

cplx boundary_twist_mode(int n, int L, Boundary b) {
    if (b == Boundary::untwisted) return 1.0;
    static const cplx mi[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}}; // (-i)^k
    cplx v = mi[((L % 4) + 4) % 4];
    return (n % 2 == 0) ? v : -v;
}

bool folds_reflection(cplx theta) { return std::abs(theta.imag()) <= 1e-12; }

namespace {
GeneratorA make_generator(double q, double omega, cplx theta, const ChainParams& p) {
    p.validate();
    const int L = p.L;
    GeneratorA A;
    A.q = q;
    A.L = L;
    A.entries = Eigen::MatrixXcd::Zero(L, L);
    const cplx h = 0.5 * I * omega;
    // row 0 sees g_1 and g_{-1} = conj(theta) g_{L-1}; for real theta the reflection
    // symmetry g_{-l} = g_l folds this into iw g_1 (odd L has theta = +-i and cannot fold)
    if (folds_reflection(theta)) {
        A.entries(0, 1) = I * omega;
    } else {
        A.entries(0, 1) += h;
        A.entries(0, L - 1) += h * std::conj(theta);
    }
    for (int l = 1; l < L; ++l) {
        A.entries(l, l) = -4.0 * p.gamma;
        A.entries(l, l - 1) += h;
        if (l + 1 < L) A.entries(l, l + 1) = h;
    }
    // g_L = theta g_0 closes the chain at the last row
    A.entries(L - 1, 0) += h * theta;
    return A;
}
} // namespace

GeneratorA build_generator(double q, const ChainParams& p, Boundary b) {
    return make_generator(q, dispersion(q, p.J), boundary_twist(q, p.L, b), p);
}

GeneratorA build_generator(const MomentumMode& m, const ChainParams& p, Boundary b) {
    return make_generator(m.q, m.omega, boundary_twist_mode(m.n, p.L, b), p);
}

void correlation_rhs(const Eigen::MatrixXcd& C, const ChainParams& p, Eigen::MatrixXcd& out) {
    const int L = static_cast<int>(C.rows());
    out.resize(L, L);
    const double a = 2.0 * p.J; // -2iJ * s = (a s_im, -a s_re)
    const double d = -4.0 * p.gamma;
    for (int y = 0; y < L; ++y) {
        const cplx* c = &C(0, y);
        const cplx* cl = &C(0, (y + L - 1) % L);
        const cplx* cr = &C(0, (y + 1) % L);
        cplx* o = &out(0, y);
        auto one = [&](int x, cplx up, cplx dn) {
            const cplx s = up + dn - cr[x] - cl[x];
            o[x] = {a * s.imag() + d * c[x].real(), -a * s.real() + d * c[x].imag()};
        };
        one(0, c[1 % L], c[L - 1]);
        for (int x = 1; x < L - 1; ++x) {
            const double sr = c[x + 1].real() + c[x - 1].real() - cr[x].real() - cl[x].real();
            const double si = c[x + 1].imag() + c[x - 1].imag() - cr[x].imag() - cl[x].imag();
            o[x] = {a * si + d * c[x].real(), -a * sr + d * c[x].imag()};
        }
        if (L > 1) one(L - 1, c[0], c[L - 2]);
        o[y] -= d * c[y]; // the diagonal is not damped
    }
}

namespace {

void validate_direct(const CorrelationMatrix& C0, const ChainParams& p,
                     const std::vector<double>& times, const DirectOptions& opt) {
    p.validate();
    if (C0.L() != p.L) throw ConfigError("initial correlation matrix size differs from L");
    if (p.L > opt.max_L)
        throw ConfigError("direct evolution limited to L <= " + std::to_string(opt.max_L));
    if (C0.hermiticity_error() > 1e-10) throw ConfigError("initial correlation matrix not Hermitian");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= C0.time)) throw ConfigError("output times must not precede the initial time");
        if (i > 0 && !(times[i] > times[i - 1]))
            throw ConfigError("output times must be strictly increasing");
    }
}

// Dormand-Prince 5(4), FSAL
long run_dopri(Eigen::MatrixXcd& y, double t0, const ChainParams& p,
               const std::vector<double>& times, const DirectOptions& opt,
               const DirectObserver& emit, long& rejected) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const int L = static_cast<int>(y.rows());
    Eigen::MatrixXcd k1(L, L), k2(L, L), k3(L, L), k4(L, L), k5(L, L), k6(L, L), k7(L, L);
    Eigen::MatrixXcd tmp(L, L), ynew(L, L);
    correlation_rhs(y, p, k1);
    double t = t0;
    double h = 0.05 / (8.0 * p.J + 4.0 * p.gamma);
    long steps = 0;
    rejected = 0;
    for (double tout : times) {
        if (tout == t) {
            emit(t, y);
            continue;
        }
        while (t < tout) {
            if (steps > opt.max_steps)
                throw StepSizeError("direct evolution exceeded the step budget", t);
            bool last = false;
            double hh = h;
            if (t + hh >= tout) {
                hh = tout - t;
                last = true;
            }
            tmp = y + hh * a21 * k1;
            correlation_rhs(tmp, p, k2);
            tmp = y + hh * (a31 * k1 + a32 * k2);
            correlation_rhs(tmp, p, k3);
            tmp = y + hh * (a41 * k1 + a42 * k2 + a43 * k3);
            correlation_rhs(tmp, p, k4);
            tmp = y + hh * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            correlation_rhs(tmp, p, k5);
            tmp = y + hh * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            correlation_rhs(tmp, p, k6);
            ynew = y + hh * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            correlation_rhs(ynew, p, k7);
            tmp = hh * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            double err = 0.0;
            for (Eigen::Index i = 0; i < tmp.size(); ++i) {
                double sc = opt.atol + opt.rtol * std::max(std::abs(y.data()[i]),
                                                           std::abs(ynew.data()[i]));
                err = std::max(err, std::abs(tmp.data()[i]) / sc);
            }
            ++steps;
            if (!std::isfinite(err)) throw StepSizeError("non-finite state in direct evolution", t);
            if (err <= 1.0) {
                t = last ? tout : t + hh;
                y.swap(ynew);
                k1.swap(k7);
                double fac = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
                if (!last) h = hh * std::clamp(fac, 0.2, 5.0);
            } else {
                ++rejected;
                h = hh * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
                if (h < opt.h_min)
                    throw StepSizeError("step size underflow in direct evolution", t);
            }
        }
        emit(t, y);
    }
    return steps;
}

// out = (1/rho) (H(v) - 2 i gamma Q(v)); H(v) = 2J (neighbour stencil), Q flips the diagonal sign
void chebyshev_operator(const Eigen::MatrixXcd& v, const ChainParams& p, double rho,
                        Eigen::MatrixXcd& out) {
    const int L = static_cast<int>(v.rows());
    const double a = 2.0 * p.J / rho;
    const double g = 2.0 * p.gamma / rho; // -i g v = (g v_im, -g v_re)
    for (int y = 0; y < L; ++y) {
        const cplx* c = &v(0, y);
        const cplx* cl = &v(0, (y + L - 1) % L);
        const cplx* cr = &v(0, (y + 1) % L);
        cplx* o = &out(0, y);
        auto one = [&](int x, cplx up, cplx dn) {
            const cplx s = up + dn - cr[x] - cl[x];
            o[x] = {a * s.real() + g * c[x].imag(), a * s.imag() - g * c[x].real()};
        };
        one(0, c[1 % L], c[L - 1]);
        for (int x = 1; x < L - 1; ++x) {
            const double sr = c[x + 1].real() + c[x - 1].real() - cr[x].real() - cl[x].real();
            const double si = c[x + 1].imag() + c[x - 1].imag() - cr[x].imag() - cl[x].imag();
            o[x] = {a * sr + g * c[x].imag(), a * si - g * c[x].real()};
        }
        if (L > 1) one(L - 1, c[0], c[L - 2]);
        o[y] -= 2.0 * cplx{g * c[y].imag(), -g * c[y].real()}; // Q = -1 on the diagonal
    }
}

struct ChebyshevPlan {
    double rho = 0;
    double eta = 0;   // growth exponent of T_k over the operator's numerical range
    double z_max = 0; // largest rho*dt per sub-step
};

ChebyshevPlan plan_chebyshev(const ChainParams& p) {
    ChebyshevPlan pl;
    pl.rho = 8.0 * p.J * 1.05;
    const double a = 8.0 * p.J / pl.rho, b = 2.0 * p.gamma / pl.rho;
    // smallest Bernstein ellipse containing [-a,a] x [-b,b]
    if (b == 0.0) {
        pl.eta = 0.0;
    } else {
        double lo = 1e-12, hi = 10.0;
        for (int it = 0; it < 200; ++it) {
            double m = 0.5 * (lo + hi);
            double ca = a / std::cosh(m), sb = b / std::sinh(m);
            (ca * ca + sb * sb <= 1.0 ? hi : lo) = m;
        }
        pl.eta = hi;
    }
    pl.z_max = 200.0;
    while (pl.z_max > 2.0 &&
           (pl.z_max + 4.0 * std::cbrt(pl.z_max) + 10.0) * pl.eta > 3.0)
        pl.z_max *= 0.9;
    return pl;
}

long run_chebyshev(Eigen::MatrixXcd& y, double t0, const ChainParams& p, const ChebyshevPlan& pl,
                   const std::vector<double>& times, const DirectObserver& emit) {
    const int L = static_cast<int>(y.rows());
    Eigen::MatrixXcd prev(L, L), cur(L, L), next(L, L), acc(L, L);
    double t = t0;
    long applications = 0;
    for (double tout : times) {
        const double span = tout - t;
        if (span > 0) {
            const int nsub = std::max(1, static_cast<int>(std::ceil(pl.rho * span / pl.z_max)));
            const double dt = span / nsub;
            const double z = pl.rho * dt;
            auto Jk = bessel_j_sequence(z, static_cast<int>(z + 30.0 * std::cbrt(z + 1) + 60));
            // truncation: past the turning point, once |J_k| e^{k eta} is negligible
            int K = static_cast<int>(Jk.size()) - 1;
            int quiet = 0;
            for (int k = static_cast<int>(z) + 1; k < static_cast<int>(Jk.size()); ++k) {
                if (std::abs(Jk[k]) * std::exp(k * pl.eta) < 1e-17)
                    ++quiet;
                else
                    quiet = 0;
                if (quiet >= 3) {
                    K = k;
                    break;
                }
            }
            const double damp = std::exp(-2.0 * p.gamma * dt);
            static const cplx mi[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
            for (int s = 0; s < nsub; ++s) {
                prev = y;
                acc = Jk[0] * prev;
                chebyshev_operator(prev, p, pl.rho, cur);
                ++applications;
                acc += (2.0 * Jk[1]) * mi[1] * cur;
                for (int k = 2; k <= K; ++k) {
                    chebyshev_operator(cur, p, pl.rho, next);
                    ++applications;
                    next = 2.0 * next - prev;
                    acc += (2.0 * Jk[k]) * mi[k % 4] * next;
                    prev.swap(cur);
                    cur.swap(next);
                }
                y = damp * acc;
                if (!y.allFinite()) throw StepSizeError("Chebyshev propagation diverged", t + (s + 1) * dt);
            }
            t = tout;
        }
        emit(t, y);
    }
    return applications;
}

} // namespace

EvolutionResult evolve_direct(const CorrelationMatrix& C0, const ChainParams& p,
                              const std::vector<double>& times, const DirectOptions& opt,
                              const DirectObserver& observer) {
    validate_direct(C0, p, times, opt);
    EvolutionResult r;
    Eigen::MatrixXcd y = C0.entries;
    auto emit = [&](double t, const Eigen::MatrixXcd& C) {
        r.times.push_back(t);
        observer(t, C);
    };
    if (opt.method == DirectMethod::chebyshev) {
        auto plan = plan_chebyshev(p);
        if (plan.z_max >= 5.0) {
            r.method = "chebyshev";
            r.steps = run_chebyshev(y, C0.time, p, plan, times, emit);
            return r;
        }
        warn("Chebyshev propagator inefficient at this dephasing rate; using Dormand-Prince");
    }
    r.method = "dopri45";
    r.steps = run_dopri(y, C0.time, p, times, opt, emit, r.rejected);
    return r;
}

EvolutionResult evolve_direct(const CorrelationMatrix& C0, const ChainParams& p,
                              const std::vector<double>& times, const DirectOptions& opt) {
    std::vector<CorrelationMatrix> states;
    auto r = evolve_direct(C0, p, times, opt, [&](double t, const Eigen::MatrixXcd& C) {
        CorrelationMatrix m;
        m.entries = C;
        m.time = t;
        states.push_back(std::move(m));
    });
    r.states = std::move(states);
    return r;
}

SpectralPropagator::SpectralPropagator(const GeneratorA& A, const SpectralOptions& opt)
    : A_(A.entries) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A_);
    if (es.info() != Eigen::Success) {
        fallback_ = true;
    } else {
        V_ = es.eigenvectors();
        lambda_ = es.eigenvalues();
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V_);
        const auto& sv = svd.singularValues();
        cond_ = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1)
                                      : std::numeric_limits<double>::infinity();
        if (!(cond_ <= opt.cond_limit)) fallback_ = true;
        else lu_.compute(V_);
    }
    if (fallback_)
        warn("generator eigenvectors ill conditioned (q=" + std::to_string(A.q) +
             "); using the matrix exponential");
}

Eigen::VectorXcd SpectralPropagator::apply(const Eigen::VectorXcd& g0, double t) const {
    if (g0.size() != A_.rows()) throw ConfigError("spectral evolution: vector length differs from L");
    if (t == 0.0) return g0;
    if (fallback_) {
        Eigen::MatrixXcd At = A_ * t;
        Eigen::MatrixXcd E = At.exp();
        return E * g0;
    }
    Eigen::VectorXcd c = lu_.solve(g0);
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= std::exp(lambda_[i] * t);
    return V_ * c;
}

Eigen::VectorXcd evolve_spectral(const Eigen::VectorXcd& g0, const GeneratorA& A, double t,
                                 const SpectralOptions& opt) {
    if (t < 0) throw ConfigError("spectral evolution needs t >= 0");
    if (t == 0.0) return g0;
    return SpectralPropagator(A, opt).apply(g0, t);
}

std::vector<CorrelatorModes> evolve_modes_spectral(const DiagonalInitialState& init,
                                                   const ChainParams& p,
                                                   const std::vector<double>& times, int lmax,
                                                   Boundary b) {
    p.validate();
    if (init.L() != p.L) throw ConfigError("initial state length differs from L");
    if (lmax < 0 || lmax > p.L - 1) throw ConfigError("lmax must lie in [0, L-1]");
    std::vector<CorrelatorModes> out(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        out[k].L = p.L;
        out[k].t = times[k];
        out[k].g = Eigen::MatrixXcd::Zero(lmax + 1, p.L);
    }
    for (const auto& m : momentum_grid(p.L, p.J)) {
        SpectralPropagator prop(build_generator(m, p, b));
        Eigen::VectorXcd g0 = Eigen::VectorXcd::Zero(p.L);
        g0[0] = init.cq()[m.n - 1];
        for (std::size_t k = 0; k < times.size(); ++k)
            out[k].g.col(m.n - 1) = prop.apply(g0, times[k]).head(lmax + 1);
    }
    return out;
}

} // namespace xxdeph
