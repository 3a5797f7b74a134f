#pragma once

#include "xxdeph/ed_oracle.hpp"
#include "xxdeph/model.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace xxdeph {

using Mat2c = Eigen::Matrix2cd;

struct TransferPair {
    Mat2c T0; // [[s, -i w], [1, 0]]
    Mat2c T;  // [[-2iu, -1], [1, 0]], u = (s + 4 gamma)/w
    cplx u;
};

TransferPair make_transfer_pair(cplx s, double omega, const ChainParams& p);

struct BranchAngle {
    cplx alpha;
};

// alpha = pi/2 + i log(u + sqrt(u^2 + 1)), so that cos(alpha) = -iu.
BranchAngle arccos_branch(cplx u);

// T^m = (1/sin a) [[sin a(m+1), -sin am], [sin am, -sin a(m-1)]]
Mat2c bulk_power_closed(const BranchAngle& a, long m);

// [(s - A)^{-1}]_{0,0} and [(s - A)^{-1}]_{l,0} for the reduced generator of mode q.
// Evaluated in the overflow-free form G_{l,0} = G00 (S_{L-l} + theta S_l)/S_L, S_m = sin(alpha m),
// 1/G00 = s - iw (S_{L-1} + Re(theta) S_1)/S_L; this coincides with the three-term closed forms for every l.
cplx g00_finite(cplx s, double q, const ChainParams& p, Boundary b = Boundary::twisted);
cplx gl0_finite(cplx s, double q, int l, const ChainParams& p, Boundary b = Boundary::twisted);

// Same, but with an explicit (omega, theta) pair, used for grid modes where both are exact.
struct ModeKernel {
    double omega;
    cplx theta;
};
ModeKernel mode_kernel(double q, const ChainParams& p, Boundary b = Boundary::twisted);
ModeKernel mode_kernel(const MomentumMode& m, const ChainParams& p, Boundary b = Boundary::twisted);

// out[l] = G_{l,0}(s) for l = 0..lmax (one angle evaluation for all l).
void resolvent_column_finite(cplx s, const ModeKernel& k, const ChainParams& p, int lmax,
                             cplx* out);

// Literal three-term recursion form (kept for cross-checks; loses accuracy when Im(alpha) L is large).
cplx gl0_recursion_form(cplx s, double q, int l, cplx g00, const ChainParams& p);

// Generic transfer-product resolvent: unknowns z solve (P E - F) z = b with
// P = T0(s) T(s,1) ... T(s,L-1). Products are carried as scaled compound matrices
// so that subdominant directions survive for any L.
struct TransferProblem {
    int rank = 2;
    std::function<Eigen::MatrixXcd(cplx s)> boundary;
    std::function<Eigen::MatrixXcd(cplx s, long step)> bulk;
    bool uniform_bulk = true; // bulk(s, step) independent of step
    Eigen::MatrixXcd E, F;
    Eigen::VectorXcd b;
};

// XX dephasing chain as a rank-2 problem; unknowns (G_{L-1,0}, G_{0,0}).
TransferProblem xx_transfer_problem(double q, const ChainParams& p,
                                    Boundary bnd = Boundary::twisted);

struct GenericResolvent {
    Eigen::VectorXcd unknowns;
    double log_scale_det = 0.0; // log |det(P E - F)|
};

GenericResolvent resolvent_first_column_generic(const TransferProblem& prob, long L, cplx s,
                                                int rescale_every = 16);

// Three-site (nonlocal) dephasing bulk transfer matrix, 4x4.
Eigen::Matrix4cd nonlocal_bulk_transfer(cplx s, double q, double gamma, double J);
double spectral_radius(const Eigen::MatrixXcd& M);

} // namespace xxdeph
