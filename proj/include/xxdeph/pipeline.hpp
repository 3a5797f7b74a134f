#pragma once

#include "xxdeph/ed_oracle.hpp"
#include "xxdeph/laplace.hpp"
#include "xxdeph/model.hpp"
#include "xxdeph/thermo.hpp"

#include <vector>

namespace xxdeph {

// Laplace-domain kernel per momentum mode: the exact finite-L resolvent column, or its
// thermodynamic limit evaluated on the same grid.
enum class KernelChoice { finite, thermodynamic };

struct PipelineOptions {
    KernelChoice kernel = KernelChoice::finite;
    InversionMethod inversion = InversionMethod::talbot;
    Boundary boundary = Boundary::twisted;
    TalbotConfig talbot{};
    Enclosure enclose = Enclosure::automatic;
    double eval_budget = 4e8; // kernel evaluations allowed for enclosure in automatic mode
    int threads = 1;
};

struct PipelineReport {
    int nodes = 0;               // Talbot nodes per mode
    bool enclosed = false;       // contour encloses every singularity
    double max_error_estimate = 0.0; // only with PrecisionMode::checked
    int contour_fallbacks = 0;   // marginal modes sent to Talbot
};

// g_l(t, q_n) for l = 0..lmax from the resolvent column of every mode.
CorrelatorModes transfer_modes(const DiagonalInitialState& init, const ChainParams& p, double t,
                               int lmax, const PipelineOptions& opt = {},
                               PipelineReport* report = nullptr);

// g_0(t, q_n) for all n using the conjugate symmetry g_0(q_{L-n}) = conj g_0(q_n).
std::vector<cplx> density_modes(const DiagonalInitialState& init, const ChainParams& p, double t,
                                const PipelineOptions& opt = {}, PipelineReport* report = nullptr);

// C_xx(t) at the requested sites.
std::vector<double> density_profile(const DiagonalInitialState& init, const ChainParams& p,
                                    double t, const std::vector<long>& xs,
                                    const PipelineOptions& opt = {},
                                    PipelineReport* report = nullptr);

} // namespace xxdeph
