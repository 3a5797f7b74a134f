#include "xxdeph/transfer.hpp"

#include "xxdeph/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace xxdeph {

namespace {
constexpr cplx I{0.0, 1.0};
constexpr double pi = std::numbers::pi;

std::string fmt_s(cplx s) {
    std::ostringstream o;
    o.precision(17);
    o << s.real() << (s.imag() < 0 ? "" : "+") << s.imag() << "i";
    return o.str();
}

bool omega_vanishes(double omega, double J) { return omega < 1e-10 * J; }
} // namespace

TransferPair make_transfer_pair(cplx s, double omega, const ChainParams& p) {
    if (omega_vanishes(omega, p.J))
        throw SingularInputError("transfer matrices undefined for omega = 0");
    TransferPair tp;
    tp.u = (s + 4.0 * p.gamma) / omega;
    tp.T0 << s, -I * omega, 1.0, 0.0;
    tp.T << -2.0 * I * tp.u, -1.0, 1.0, 0.0;
    return tp;
}

BranchAngle arccos_branch(cplx u) {
    if (std::abs(u - I) < 1e-12 || std::abs(u + I) < 1e-12)
        throw SingularInputError("arccos branch point: u = +-i");
    const cplx r = std::sqrt(u * u + 1.0);
    // u + r without cancellation
    const cplx w = u.real() >= 0.0 ? u + r : -1.0 / (u - r);
    return {pi / 2 + I * std::log(w)};
}

Mat2c bulk_power_closed(const BranchAngle& a, long m) {
    if (m < 0) throw ConfigError("bulk_power_closed needs m >= 0");
    const cplx sa = std::sin(a.alpha);
    if (std::abs(sa) < 1e-12)
        throw DegenerateAngleError("sin(alpha) vanishes in the bulk power formula", 0.0);
    auto S = [&](long k) { return std::sin(a.alpha * static_cast<double>(k)); };
    Mat2c M;
    M << S(m + 1), -S(m), S(m), -S(m - 1);
    return M / sa;
}

ModeKernel mode_kernel(double q, const ChainParams& p, Boundary b) {
    return {dispersion(q, p.J), boundary_twist(q, p.L, b)};
}

ModeKernel mode_kernel(const MomentumMode& m, const ChainParams& p, Boundary b) {
    return {m.omega, boundary_twist_mode(m.n, p.L, b)};
}

namespace {

// Ratios S_m / S_L through z = e^{i alpha'}, |z| <= 1 (alpha' = +-alpha; the ratios are even in alpha).
struct SineRatios {
    cplx alpha; // Im >= 0
    long L;
    cplx denom; // 1 - z^{2L}
    cplx z, zLm1; // z and z^{L-1}, for the two ratios G00 needs

    cplx zpow(double k) const { return std::exp(I * alpha * k); }
    cplx operator()(long m) const {
        return zpow(double(L - m)) * (1.0 - zpow(2.0 * m)) / denom;
    }
    cplx first() const { return zLm1 * (1.0 - z * z) / denom; }      // S_1 / S_L
    cplx last() const { return z * (1.0 - zLm1 * zLm1) / denom; }    // S_{L-1} / S_L
};

bool make_ratios(cplx s, double omega, const ChainParams& p, SineRatios& r) {
    BranchAngle a = arccos_branch((s + 4.0 * p.gamma) / omega);
    r.alpha = a.alpha.imag() >= 0 ? a.alpha : -a.alpha;
    r.L = p.L;
    r.z = r.zpow(1.0);
    const cplx zL = r.zpow(double(p.L));
    r.zLm1 = std::abs(r.z) > 1e-150 ? zL / r.z : r.zpow(double(p.L - 1));
    r.denom = 1.0 - zL * zL;
    return std::abs(r.denom) > 1e-13;
}

cplx g00_from(cplx s, const ModeKernel& k, const ChainParams& p, const SineRatios& r) {
    const cplx r1 = r.last(), r0 = r.first();
    // G_1 + conj(theta) G_{L-1} = G00 (S_{L-1} + theta S_1 + conj(theta) S_1 + S_{L-1}) / S_L
    return 1.0 / (s - I * k.omega * (r1 + k.theta.real() * r0));
}

} // namespace

void resolvent_column_finite(cplx s, const ModeKernel& k, const ChainParams& p, int lmax,
                             cplx* out) {
    if (lmax < 0 || lmax > p.L - 1) throw ConfigError("resolvent column needs 0 <= l <= L-1");
    if (omega_vanishes(k.omega, p.J)) {
        out[0] = 1.0 / s;
        for (int l = 1; l <= lmax; ++l) out[l] = 0.0;
        return;
    }
    SineRatios r;
    cplx ss = s;
    if (!make_ratios(ss, k.omega, p, r)) {
        ss = s * (1.0 + 1e-9);
        if (!make_ratios(ss, k.omega, p, r))
            throw DegenerateAngleError("sin(alpha L) vanishes at s=" + fmt_s(s), s);
    }
    const cplx g00 = g00_from(ss, k, p, r);
    out[0] = g00;
    for (int l = 1; l <= lmax; ++l) out[l] = g00 * (r(p.L - l) + k.theta * r(l));
}

cplx g00_finite(cplx s, double q, const ChainParams& p, Boundary b) {
    p.validate();
    cplx out;
    resolvent_column_finite(s, mode_kernel(q, p, b), p, 0, &out);
    return out;
}

cplx gl0_finite(cplx s, double q, int l, const ChainParams& p, Boundary b) {
    p.validate();
    if (l < 0 || l > p.L - 1) throw ConfigError("gl0_finite needs 0 <= l <= L-1");
    std::vector<cplx> out(l + 1);
    resolvent_column_finite(s, mode_kernel(q, p, b), p, l, out.data());
    return out[l];
}

cplx gl0_recursion_form(cplx s, double q, int l, cplx g00, const ChainParams& p) {
    const double w = dispersion(q, p.J);
    const cplx a = arccos_branch((s + 4.0 * p.gamma) / w).alpha;
    const double dl = l;
    return (-1.0 / (I * w * std::sin(a))) *
           (std::sin(a * dl) + (I * w * std::sin(a * (dl - 1.0)) - s * std::sin(a * dl)) * g00);
}

TransferProblem xx_transfer_problem(double q, const ChainParams& p, Boundary bnd) {
    p.validate();
    const double w = dispersion(q, p.J);
    if (omega_vanishes(w, p.J))
        throw SingularInputError("omega = 0 mode has no transfer form (G00 = 1/s)");
    const cplx theta = boundary_twist(q, p.L, bnd);
    const double g = p.gamma;
    TransferProblem pr;
    pr.rank = 2;
    const bool fold = folds_reflection(theta);
    pr.boundary = [w, fold](cplx s) {
        Eigen::MatrixXcd M(2, 2);
        M << s, -I * w * (fold ? 1.0 : 0.5), 1.0, 0.0;
        return M;
    };
    pr.bulk = [w, g](cplx s, long) {
        Eigen::MatrixXcd M(2, 2);
        M << -2.0 * I * (s + 4.0 * g) / w, -1.0, 1.0, 0.0;
        return M;
    };
    pr.uniform_bulk = true;
    pr.E = Eigen::MatrixXcd::Zero(2, 2);
    pr.E(0, 0) = 1.0;
    pr.E(1, 1) = theta;
    pr.F = Eigen::MatrixXcd::Zero(2, 2);
    pr.F(1, 1) = 1.0;
    if (!fold) pr.F(0, 0) = 0.5 * I * w * std::conj(theta);
    pr.b = Eigen::VectorXcd::Zero(2);
    pr.b(0) = 1.0;
    return pr;
}

namespace {

using Subset = std::vector<int>;

std::vector<Subset> subsets(int n, int k) {
    std::vector<Subset> out;
    Subset cur;
    std::function<void(int)> rec = [&](int start) {
        if (static_cast<int>(cur.size()) == k) {
            out.push_back(cur);
            return;
        }
        for (int i = start; i < n; ++i) {
            cur.push_back(i);
            rec(i + 1);
            cur.pop_back();
        }
    };
    rec(0);
    return out;
}

cplx minor_det(const Eigen::MatrixXcd& M, const Subset& rows, const Subset& cols) {
    const int k = static_cast<int>(rows.size());
    if (k == 0) return 1.0;
    Eigen::MatrixXcd sub(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) sub(i, j) = M(rows[i], cols[j]);
    return sub.determinant();
}

// k-th compound matrix in lexicographic subset order
Eigen::MatrixXcd compound(const Eigen::MatrixXcd& M, const std::vector<Subset>& sets) {
    const int n = static_cast<int>(sets.size());
    Eigen::MatrixXcd C(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) C(i, j) = minor_det(M, sets[i], sets[j]);
    return C;
}

struct Scaled {
    cplx m = 0.0;
    double lg = 0.0;
};

Scaled scaled_sum(const std::vector<Scaled>& terms, double& largest_log) {
    double top = -std::numeric_limits<double>::infinity();
    for (auto& t : terms)
        if (t.m != 0.0) top = std::max(top, t.lg + std::log(std::abs(t.m)));
    largest_log = top;
    if (!std::isfinite(top)) return {0.0, 0.0};
    cplx acc = 0.0;
    for (auto& t : terms)
        if (t.m != 0.0) acc += t.m * std::exp(t.lg - top);
    return {acc, top};
}

} // namespace

GenericResolvent resolvent_first_column_generic(const TransferProblem& prob, long L, cplx s,
                                                int rescale_every) {
    const int r = prob.rank;
    if (r < 1 || r > 8) throw ConfigError("generic transfer engine supports rank 1..8");
    if (L < 1) throw ConfigError("generic transfer engine needs L >= 1");
    if (prob.E.rows() != r || prob.E.cols() != r || prob.F.rows() != r || prob.F.cols() != r ||
        prob.b.size() != r)
        throw ConfigError("closure matrices do not match the transfer rank");
    if (rescale_every < 1) rescale_every = 1;

    std::vector<std::vector<Subset>> sets(r + 1);
    for (int k = 1; k <= r; ++k) sets[k] = subsets(r, k);

    const Eigen::MatrixXcd T0 = prob.boundary(s);
    if (T0.rows() != r || T0.cols() != r) throw ConfigError("boundary builder returned wrong size");
    std::vector<Eigen::MatrixXcd> C(r + 1), Cb(r + 1);
    std::vector<double> lg(r + 1, 0.0);
    for (int k = 1; k <= r; ++k) C[k] = compound(T0, sets[k]);
    if (prob.uniform_bulk) {
        const Eigen::MatrixXcd T = prob.bulk(s, 1);
        for (int k = 1; k <= r; ++k) Cb[k] = compound(T, sets[k]);
    }
    auto rescale = [&]() {
        for (int k = 1; k <= r; ++k) {
            double m = C[k].cwiseAbs().maxCoeff();
            if (!std::isfinite(m))
                throw NumericalError("transfer product overflowed at s=" + fmt_s(s));
            if (m > 0) {
                C[k] /= m;
                lg[k] += std::log(m);
            }
        }
    };
    for (long step = 1; step <= L - 1; ++step) {
        if (!prob.uniform_bulk) {
            const Eigen::MatrixXcd T = prob.bulk(s, step);
            for (int k = 1; k <= r; ++k) Cb[k] = compound(T, sets[k]);
        }
        for (int k = 1; k <= r; ++k) C[k] = C[k] * Cb[k];
        if (step % rescale_every == 0) rescale();
    }
    rescale();

    // det([P | I] B) by Cauchy-Binet over r-subsets of the 2r columns
    auto subset_index = [&](const Subset& ss) -> int {
        const auto& all = sets[ss.size()];
        for (std::size_t i = 0; i < all.size(); ++i)
            if (all[i] == ss) return static_cast<int>(i);
        return -1;
    };
    const auto column_sets = subsets(2 * r, r);
    auto det_with = [&](const Eigen::MatrixXcd& Bm, double& largest) {
        std::vector<Scaled> terms;
        for (const auto& S : column_sets) {
            Subset S1, S2;
            for (int j : S) (j < r ? S1 : S2).push_back(j < r ? j : j - r);
            Subset R;
            for (int i = 0; i < r; ++i)
                if (std::find(S2.begin(), S2.end(), i) == S2.end()) R.push_back(i);
            int inv = 0;
            for (int a : S2)
                for (int b : R)
                    if (b > a) ++inv;
            Eigen::MatrixXcd Bs(r, r);
            for (int i = 0; i < r; ++i) Bs.row(i) = Bm.row(S[i]);
            const cplx bdet = Bs.determinant();
            if (bdet == 0.0) continue;
            Scaled t;
            const int k = static_cast<int>(S1.size());
            if (k == 0) {
                t.m = bdet;
            } else {
                t.m = C[k](subset_index(R), subset_index(S1)) * bdet;
                t.lg = lg[k];
            }
            if (inv % 2) t.m = -t.m;
            terms.push_back(t);
        }
        return scaled_sum(terms, largest);
    };
    Eigen::MatrixXcd B(2 * r, r);
    B.topRows(r) = prob.E;
    B.bottomRows(r) = -prob.F;
    double largest = 0.0;
    const Scaled det = det_with(B, largest);
    if (det.m == 0.0 || std::log(std::abs(det.m)) + det.lg < largest + std::log(1e-14))
        throw SingularInputError("singular transfer relation at s=" + fmt_s(s));

    GenericResolvent out;
    out.unknowns.resize(r);
    out.log_scale_det = det.lg + std::log(std::abs(det.m));
    for (int j = 0; j < r; ++j) {
        Eigen::MatrixXcd Bj = B;
        Bj.block(0, j, r, 1).setZero();
        Bj.block(r, j, r, 1) = prob.b; // -F^{(j)} column = b
        double lj = 0.0;
        const Scaled num = det_with(Bj, lj);
        out.unknowns[j] = num.m == 0.0 ? cplx(0.0) : (num.m / det.m) * std::exp(num.lg - det.lg);
    }
    return out;
}

Eigen::Matrix4cd nonlocal_bulk_transfer(cplx s, double q, double gamma, double J) {
    if (!(gamma > 0)) throw ConfigError("nonlocal bulk transfer needs gamma > 0");
    const cplx e1 = std::exp(I * q), e2 = std::exp(2.0 * I * q);
    const cplx den = e2 + 1.0;
    if (std::abs(den) < 1e-12)
        throw SingularInputError("nonlocal bulk transfer singular at q = pi/2, 3pi/2");
    Eigen::Matrix4cd M = Eigen::Matrix4cd::Zero();
    M(0, 0) = (2.0 * I * J / gamma) * (1.0 - e1) / den;
    M(0, 1) = (1.0 / gamma) * (2.0 * gamma - s) / den;
    M(0, 2) = (2.0 * I * J / gamma) * (1.0 - std::conj(e1)) / den;
    M(0, 3) = (std::conj(e2) - 1.0) / den;
    M(1, 0) = M(2, 1) = M(3, 2) = 1.0;
    return M;
}

double spectral_radius(const Eigen::MatrixXcd& M) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, false);
    if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed in spectral_radius");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace xxdeph
