#pragma once

#include "xxdeph/model.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace xxdeph {

using LaplaceKernel = std::function<cplx(cplx)>;

enum class PrecisionMode { fixed, checked };

// Fixed-Talbot contour s(th) = shift + lambda (th cot th + i nu th), th in (-pi, pi),
// lambda = 2M/(5t). With imag_extent > 0 the contour is widened (nu > 1) so that
// singularities up to |Im s| = imag_extent are enclosed, and the node count grows with nu.
struct TalbotConfig {
    int M = 24;                 // base node count; the double-precision optimum is near 20-30
    double shift = 0.0;
    double imag_extent = 0.0;   // 0: classic contour (nu = 1)
    double stretch = 2.0;       // enclosure margin kappa: lambda nu pi/2 >= kappa * imag_extent
    int max_nodes = 1 << 15;
    bool conjugate_symmetric = false; // F(conj s) = conj F(s): real result, half the nodes
    PrecisionMode precision_mode = PrecisionMode::fixed;

    void validate() const;
};

struct TalbotResult {
    cplx value;
    double error_estimate = std::numeric_limits<double>::quiet_NaN();
    int nodes = 0;
};

// Quadrature rule for one time; reusable for many kernels (one per mode).
class TalbotRule {
public:
    TalbotRule() = default;
    TalbotRule(double t, const TalbotConfig& cfg, int refine = 1);

    const std::vector<cplx>& nodes() const { return s_; }
    const std::vector<cplx>& weights() const { return w_; }
    bool conjugate_symmetric() const { return sym_; }
    double t() const { return t_; }
    double lambda() const { return lambda_; }
    double nu() const { return nu_; }

    // sum_k w_k F(s_k); with conjugate symmetry only the upper half is stored.
    template <class Values>
    cplx combine(const Values& F) const {
        cplx acc = 0.0;
        if (sym_) {
            acc = (w_[0] * F[0]).real();
            double im = 0.0;
            for (std::size_t k = 1; k < s_.size(); ++k) im += (w_[k] * F[k]).real();
            return acc + 2.0 * im;
        }
        for (std::size_t k = 0; k < s_.size(); ++k) acc += w_[k] * F[k];
        return acc;
    }

    cplx apply(const LaplaceKernel& F) const;

private:
    std::vector<cplx> s_, w_;
    bool sym_ = false;
    double t_ = 0.0, lambda_ = 0.0, nu_ = 1.0;
};

TalbotResult talbot_invert(const LaplaceKernel& F, double t, const TalbotConfig& cfg = {});

enum class PoleRegime { real_poles, imaginary_poles, marginal };

struct ContourPieces {
    cplx pole_term = 0.0;
    double branchcut_term = 0.0;
    PoleRegime regime = PoleRegime::real_poles;
    cplx total() const { return pole_term + branchcut_term; }
};

// Inverse transform of 1/(sqrt(s^2 + w^2) - 4 gamma) via residues and the branch-cut integral
// along [-iw, iw]. Throws MarginalRegimeError when |4 gamma - w| < 1e-8.
ContourPieces contour_invert(double t, double omega, double gamma);
ContourPieces contour_invert(double t, double q, const ChainParams& p);

// PV integral over [a, b] with a simple pole at c; the interval around c is folded onto itself
// so that the odd singular part cancels.
double pv_quadrature(const std::function<double(double)>& f, double a, double b, double c,
                     double tol = 1e-9);

// sqrt(s^2 + w^2) with its cut on the segment [-iw, iw]: s sqrt(1 + (w/s)^2).
cplx sqrt_segment(cplx s, double omega);

} // namespace xxdeph
