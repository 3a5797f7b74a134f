#pragma once

#include <Eigen/Dense>

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

namespace xxdeph {

using cplx = std::complex<double>;

struct ChainParams {
    int L = 2;
    double J = 1.0;
    double gamma = 0.0;

    ChainParams() = default;
    ChainParams(int L_, double J_, double gamma_);
    void validate() const;
};

struct MomentumMode {
    int n;        // 1..L
    double q;     // 2 pi n / L
    double omega; // 8 J sin(q/2)
};

double dispersion(double q, double J);

// q_n = 2 pi n / L for n = 1..L; the n = L mode has omega = 0 exactly.
std::vector<MomentumMode> momentum_grid(int L, double J = 1.0);

// e^{2 pi i k / L}, with k reduced mod L first so that large products stay exact.
cplx unit_root(long long k, long long L);

// c_x = C_xx(0) and c(q_n) = sum_x e^{-i q_n x} c_x (index n-1).
class DiagonalInitialState {
public:
    DiagonalInitialState() = default;
    explicit DiagonalInitialState(Eigen::VectorXd c, std::string tag = "custom");
    DiagonalInitialState(Eigen::VectorXd c, Eigen::VectorXcd cq, std::string tag);

    static DiagonalInitialState delta(int L, int x0 = 0);
    // Up spins (C_xx = -1) on x < L/2, down spins (C_xx = +1) on x >= L/2.
    static DiagonalInitialState domain_wall(int L);
    static DiagonalInitialState uniform(int L, double value);
    static DiagonalInitialState from_csv(std::istream& in, std::string tag = "custom-csv");
    static DiagonalInitialState from_csv_file(const std::string& path);

    int L() const { return static_cast<int>(c_.size()); }
    const Eigen::VectorXd& c() const { return c_; }
    const Eigen::VectorXcd& cq() const { return cq_; }
    const std::string& tag() const { return tag_; }
    // True when c(q) is conjugate-symmetric (always, since c is real).
    double total() const { return c_.sum(); }

private:
    Eigen::VectorXd c_;
    Eigen::VectorXcd cq_;
    std::string tag_;
};

// Direct transform used for validation (O(L^2) for small L, FFT otherwise).
Eigen::VectorXcd momentum_transform(const Eigen::VectorXd& c);

struct CorrelationMatrix {
    Eigen::MatrixXcd entries;
    double time = 0.0;
    bool truncated = false; // true when bands beyond lmax were zero-filled

    int L() const { return static_cast<int>(entries.rows()); }
    double hermiticity_error() const;
    // max |Im C_xy| over even x-y and max |Re C_xy| over odd x-y (periodic distance)
    double parity_error() const;
    double trace() const; // real part of sum_x C_xx

    // Throws StructureError when any invariant is violated beyond tol.
    void check_invariants(double tol, double expected_trace) const;

    void write_csv(std::ostream& out) const;
    std::string to_json() const;
};

// g(l, n-1) = g_l(t, q_n) for l = 0..lmax.
struct CorrelatorModes {
    int L = 0;
    double t = 0.0;
    Eigen::MatrixXcd g;

    int lmax() const { return static_cast<int>(g.rows()) - 1; }
};

// Exact modes at t = 0: g_0 = c(q), g_l = 0 for l > 0.
CorrelatorModes initial_modes(const DiagonalInitialState& init, int lmax);

struct AssembleOptions {
    int max_dense_L = 4096;
    int threads = 1;
};

// C_{x+l,x} = (1/L) sum_n e^{i q_n x} i^l e^{i q_n l/2} g_l(q_n), Hermitian completion for the
// upper triangle. Bands with l > lmax are zero and flagged.
CorrelationMatrix assemble_correlations(const CorrelatorModes& modes,
                                        const AssembleOptions& opt = {});

// One band C_{x+l,x} at the requested sites only (no dense matrix; any L).
std::vector<cplx> correlation_band(const CorrelatorModes& modes, int l,
                                   const std::vector<long>& sites, int threads = 1);

} // namespace xxdeph
