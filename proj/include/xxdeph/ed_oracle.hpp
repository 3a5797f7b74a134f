#pragma once

#include "xxdeph/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace xxdeph {

// The g_l chain is periodic up to a phase: g_{l+L} = theta g_l, theta = e^{iL(q-pi)/2}.
// `untwisted` drops the phase (theta = 1), which is exact only when theta happens to be 1.
enum class Boundary { twisted, untwisted };

cplx boundary_twist(double q, int L, Boundary b = Boundary::twisted);
// Row 0 takes the folded form A(0,1) = iw only when theta is real (even L or untwisted);
// otherwise it couples g_1 and conj(theta) g_{L-1} with weight iw/2 each.
bool folds_reflection(cplx theta);
// Exact value for grid mode n: (-1)^n (-i)^L.
cplx boundary_twist_mode(int n, int L, Boundary b = Boundary::twisted);

struct GeneratorA {
    double q = 0.0;
    int L = 0;
    Eigen::MatrixXcd entries;
};

// Reduced generator of dg/dt = A g for l = 0..L-1.
GeneratorA build_generator(double q, const ChainParams& p, Boundary b = Boundary::twisted);
GeneratorA build_generator(const MomentumMode& m, const ChainParams& p,
                           Boundary b = Boundary::twisted);

struct EvolutionResult {
    std::vector<double> times;
    std::vector<CorrelationMatrix> states;
    std::string method;
    long steps = 0;
    long rejected = 0;
};

enum class DirectMethod { dopri45, chebyshev };

struct DirectOptions {
    DirectMethod method = DirectMethod::dopri45;
    double rtol = 1e-10;
    double atol = 1e-10;
    long max_steps = 50'000'000;
    double h_min = 1e-12;
    int max_L = 4096;
};

using DirectObserver = std::function<void(double t, const Eigen::MatrixXcd& C)>;

// dC/dt = -2i (T C - C T) - 4 gamma offdiag(C), periodic T.
// The observer variant does not keep states; returns the bookkeeping only.
EvolutionResult evolve_direct(const CorrelationMatrix& C0, const ChainParams& p,
                              const std::vector<double>& times, const DirectOptions& opt = {});
EvolutionResult evolve_direct(const CorrelationMatrix& C0, const ChainParams& p,
                              const std::vector<double>& times, const DirectOptions& opt,
                              const DirectObserver& observer);

// Right-hand side of the correlation-matrix ODE (exposed for tests).
void correlation_rhs(const Eigen::MatrixXcd& C, const ChainParams& p, Eigen::MatrixXcd& out);

struct SpectralOptions {
    double cond_limit = 1e12;
};

// g(t) = V e^{Lambda t} V^{-1} g(0); matrix exponential when V is ill conditioned.
Eigen::VectorXcd evolve_spectral(const Eigen::VectorXcd& g0, const GeneratorA& A, double t,
                                 const SpectralOptions& opt = {});

class SpectralPropagator {
public:
    explicit SpectralPropagator(const GeneratorA& A, const SpectralOptions& opt = {});
    Eigen::VectorXcd apply(const Eigen::VectorXcd& g0, double t) const;
    bool fallback() const { return fallback_; }
    double condition() const { return cond_; }
    const Eigen::VectorXcd& eigenvalues() const { return lambda_; }

private:
    Eigen::MatrixXcd A_, V_;
    Eigen::VectorXcd lambda_;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
    bool fallback_ = false;
    double cond_ = 1.0;
};

// All modes through the reduced generators; returns g_l(t, q_n) for l <= lmax.
std::vector<CorrelatorModes> evolve_modes_spectral(const DiagonalInitialState& init,
                                                   const ChainParams& p,
                                                   const std::vector<double>& times, int lmax,
                                                   Boundary b = Boundary::twisted);

} // namespace xxdeph
