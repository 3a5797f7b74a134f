#pragma once

#include "xxdeph/laplace.hpp"
#include "xxdeph/model.hpp"

#include <functional>
#include <vector>

namespace xxdeph {

// F(s, q) = 1/(sqrt(st^2 + w^2) - 4 gamma), st = s + 4 gamma; square root cut on [-iw, iw].
cplx f_thermo(cplx s, double q, const ChainParams& p);
cplx f_thermo_omega(cplx s, double omega, double gamma);

// (s + 4 gamma)/(s^2 + 4 gamma s + 8 (J q)^2), q taken in (-pi, pi].
cplx f_telegrapher(cplx s, double q, const ChainParams& p);

// G_{l,0} in the thermodynamic limit: F (i w/(st + R))^l, R = sqrt(st^2 + w^2).
cplx gl0_thermo(cplx s, double q, int l, const ChainParams& p);
cplx gl0_thermo_omega(cplx s, double omega, double gamma, int l);

enum class KernelKind { exact, telegrapher, ballistic_offdiag, diffusive_offdiag };

struct ThermoKernel {
    KernelKind kind = KernelKind::exact;
    double J = 1.0, gamma = 0.0, q = 0.0;
    int l = 0;
    cplx operator()(cplx s) const;
};

enum class InversionMethod { talbot, contour };

// Whether the Talbot contour is widened to enclose all singularities (|Im| <= 8J).
// automatic: only while exp(-4 gamma t) is not negligible and the node budget allows.
enum class Enclosure { never, always, automatic };

struct DensityOptions {
    InversionMethod method = InversionMethod::talbot;
    int nq = 0; // continuum grid size; 0 means max(L, 2048)
    TalbotConfig talbot{};
    Enclosure enclose = Enclosure::automatic;
    int threads = 1;
};

// C_xx(t) = sum over the state's momentum grid of e^{iqx} e^{-4 gamma t} L^{-1}[F](t) c(q) / L.
double density_thermo(long x, double t, const DiagonalInitialState& init, const ChainParams& p,
                      const DensityOptions& opt = {});
std::vector<double> density_thermo_profile(const std::vector<long>& xs, double t,
                                           const DiagonalInitialState& init,
                                           const ChainParams& p, const DensityOptions& opt = {});
// Continuum initial data c(q) on a uniform grid of opt.nq points (p.L is not used).
std::vector<double> density_thermo_profile(const std::vector<long>& xs, double t,
                                           const std::function<cplx(double)>& cq,
                                           const ChainParams& p, const DensityOptions& opt = {});

// [J_x(4Jt)]^2 e^{-4 gamma t}
double density_shorttime(long x, double t, const ChainParams& p);
// e^{-x^2/(4Dt)}/sqrt(4 pi D t), D = 2J^2/gamma
double density_longtime(double x, double t, const ChainParams& p);
double diffusion_constant(const ChainParams& p);

// Short-time off-diagonal C_{x+l,x} for c_x = delta_{x,0}: ballistic kernel
// w^l/(R (s+R)^l) inverted per mode, times e^{-4 gamma t}. Pairs are centred at x + l/2.
std::vector<cplx> offdiag_ballistic_profile(const std::vector<long>& xs, int l, double t,
                                            const ChainParams& p, const DensityOptions& opt = {});
cplx offdiag_ballistic(long x, int l, double t, const ChainParams& p,
                       const DensityOptions& opt = {});

// Long-time C_{x+l,x} ~ (iJ/(2 gamma))^l d^l/dy^l Gauss(y), y = x + l/2, variance 2Dt.
cplx offdiag_longtime(double x, int l, double t, const ChainParams& p);

// Probabilists' Hermite polynomial He_n(z).
double hermite_he(int n, double z);

} // namespace xxdeph
