#include "oracles.hpp"

#include "xxdeph/bessel.hpp"
#include "xxdeph/ed_oracle.hpp"
#include "xxdeph/errors.hpp"
#include "xxdeph/log.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace xxdeph;
using std::numbers::pi;

namespace {
const cplx I(0, 1);

CorrelationMatrix diagonal_state(const DiagonalInitialState& s) {
    CorrelationMatrix C;
    C.entries = s.c().cast<cplx>().asDiagonal();
    return C;
}

// Random Hermitian matrix with the parity structure of the dynamics.
Eigen::MatrixXcd random_structured(int L, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> N;
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(L, L);
    for (int x = 0; x < L; ++x)
        for (int y = 0; y <= x; ++y) {
            const int d = std::min((x - y) % L, (y - x + L) % L);
            cplx v = (d % 2 == 0) ? cplx(N(rng), 0) : cplx(0, N(rng));
            if (x == y) v = v.real();
            C(x, y) = v;
            C(y, x) = std::conj(v);
        }
    return C;
}

struct SilenceWarnings {
    std::vector<std::string> seen;
    WarningHandler prev;
    SilenceWarnings() { prev = set_warning_handler([this](const std::string& m) { seen.push_back(m); }); }
    ~SilenceWarnings() { set_warning_handler(prev); }
};
} // namespace

TEST_CASE("right-hand side equals the Liouvillian") {
    for (int L : {2, 3, 6, 7}) {
        ChainParams p(L, 0.8, 0.35);
        Eigen::MatrixXcd C = Eigen::MatrixXcd::Random(L, L);
        Eigen::MatrixXcd out;
        correlation_rhs(C, p, out);
        Eigen::VectorXcd v = Eigen::Map<Eigen::VectorXcd>(C.data(), L * L);
        Eigen::VectorXcd ref = oracle::liouvillian(L, p.J, p.gamma) * v;
        CHECK((Eigen::Map<Eigen::VectorXcd>(out.data(), L * L) - ref).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("Dormand-Prince against the matrix exponential") {
    const int L = 8;
    ChainParams p(L, 1.0, 0.3);
    CorrelationMatrix C0;
    C0.entries = random_structured(L, 5);
    auto r = evolve_direct(C0, p, {0.0, 0.7, 2.0});
    REQUIRE(r.states.size() == 3);
    CHECK(r.method == "dopri45");
    CHECK((r.states[0].entries - C0.entries).cwiseAbs().maxCoeff() == 0.0);
    for (int k = 1; k < 3; ++k) {
        auto ref = oracle::evolve_exact(C0.entries, p.J, p.gamma, r.times[k]);
        CHECK((r.states[k].entries - ref).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(r.states[k].time == r.times[k]);
    }
}

TEST_CASE("Chebyshev propagator at weak dephasing") {
    const int L = 8;
    ChainParams p(L, 1.0, 0.01);
    auto C0 = diagonal_state(DiagonalInitialState::domain_wall(L));
    DirectOptions opt;
    opt.method = DirectMethod::chebyshev;
    auto r = evolve_direct(C0, p, {1.0, 5.0, 12.5}, opt);
    CHECK(r.method == "chebyshev");
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        auto ref = oracle::evolve_exact(C0.entries, p.J, p.gamma, r.times[k]);
        CHECK((r.states[k].entries - ref).cwiseAbs().maxCoeff() < 1e-9);
    }

    SilenceWarnings quiet;
    ChainParams strong(L, 1.0, 0.5);
    auto r2 = evolve_direct(C0, strong, {1.0}, opt);
    CHECK(r2.method == "dopri45");
    CHECK(quiet.seen.size() == 1);
}

TEST_CASE("the identity is a fixed point") {
    ChainParams p(10, 1.0, 0.7);
    CorrelationMatrix C0;
    C0.entries = Eigen::MatrixXcd::Identity(10, 10);
    auto r = evolve_direct(C0, p, {3.0});
    CHECK((r.states[0].entries - C0.entries).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("no dephasing: Bessel propagation of a single site") {
    const int L = 8;
    ChainParams p(L, 1.0, 0.0);
    auto C0 = diagonal_state(DiagonalInitialState::delta(L, 0));
    auto r = evolve_direct(C0, p, {0.1, 0.25, 0.4, 1.5});
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        const double t = r.times[k];
        // amplitude of e^{-2iTt} on the ring: sum over images of (-i)^m J_m(4Jt)
        for (int x = 0; x < L; ++x) {
            cplx amp = 0;
            for (int w = -6; w <= 6; ++w) {
                const int m = x + w * L;
                amp += std::pow(-I, ((m % 4) + 4) % 4) * bessel_jn(m, 4 * t);
            }
            CHECK(std::abs(r.states[k].entries(x, x).real() - std::norm(amp)) < 1e-9);
        }
    }
}

TEST_CASE("spectral per-mode evolution equals direct evolution") {
    const int L = 6;
    ChainParams p(L, 1.0, 0.5);
    auto init = DiagonalInitialState::domain_wall(L);
    std::vector<double> ts = {0.3, 1.1, 2.5};
    auto modes = evolve_modes_spectral(init, p, ts, L - 1);
    auto r = evolve_direct(diagonal_state(init), p, ts);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        auto C = assemble_correlations(modes[k]);
        CHECK((C.entries - r.states[k].entries).cwiseAbs().maxCoeff() < 1e-8);
        auto ref = oracle::evolve_exact(diagonal_state(init).entries, p.J, p.gamma, ts[k]);
        CHECK((C.entries - ref).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("reduced generator entries") {
    ChainParams p(3, 1.0, 0.25);
    auto A = build_generator(pi, p, Boundary::untwisted);
    Eigen::Matrix3cd ref;
    ref << 0.0, 8.0 * I, 0.0,
           4.0 * I, -1.0, 4.0 * I,
           4.0 * I, 4.0 * I, -1.0;
    CHECK((A.entries - ref).cwiseAbs().maxCoeff() < 1e-14);

    // the twisted closure differs from the printed one in the corner, and for odd L
    // (theta = +-i) also in row 0, which then couples g_1 and conj(theta) g_{L-1}
    for (int L : {5, 6, 7, 8})
        for (const auto& m : momentum_grid(L)) {
            ChainParams pl(L, 1.0, 0.25);
            auto Au = build_generator(m, pl, Boundary::untwisted);
            auto At = build_generator(m, pl, Boundary::twisted);
            Eigen::MatrixXcd d = At.entries - Au.entries;
            const cplx theta = boundary_twist_mode(m.n, L);
            CHECK(std::abs(d(L - 1, 0) - 0.5 * I * m.omega * (theta - 1.0)) < 1e-13);
            d(L - 1, 0) = 0;
            CHECK(folds_reflection(theta) == (L % 2 == 0));
            if (!folds_reflection(theta)) {
                CHECK(std::abs(At.entries(0, 1) - 0.5 * I * m.omega) < 1e-14);
                CHECK(std::abs(At.entries(0, L - 1) - 0.5 * I * m.omega * std::conj(theta)) < 1e-14);
                d.row(0).setZero();
            }
            CHECK(d.cwiseAbs().maxCoeff() == 0.0);
            CHECK(std::abs(theta - boundary_twist(m.q, L)) < 1e-12);
        }
}

TEST_CASE("twisted generator reproduces the real-space dynamics") {
    for (int L : {5, 6, 7, 8}) {
        ChainParams p(L, 1.0, 0.3);
        for (const auto& m : momentum_grid(L)) {
            if (m.omega == 0.0) continue;
            auto A = build_generator(m, p);
            auto G = oracle::sector_generator(L, p.J, p.gamma, m.n);
            // rows l >= 1 agree; row 0 sees g_1 and g_{L-1}
            CHECK((A.entries.bottomRows(L - 1) - G.bottomRows(L - 1)).cwiseAbs().maxCoeff() < 1e-12);
            if (L % 2) {
                // theta = +-i: no folding, the generator is the sector generator itself
                CHECK((A.entries - G).cwiseAbs().maxCoeff() < 1e-12);
                continue;
            }
            // even L: the reduced form identifies g_{L-1} with a unimodular multiple of g_1
            // on the physical subspace g_{L-1} is a unimodular multiple of g_1
            const cplx kappa = (A.entries(0, 1) - G(0, 1)) / G(0, L - 1);
            CHECK(std::abs(std::abs(kappa) - 1.0) < 1e-12);
            CHECK(G.row(0).segment(2, L - 3).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("spectrum seen from g_0 matches the Liouvillian sector") {
    const int L = 8;
    ChainParams p(L, 1.0, 0.3);
    const int n = 2; // q = pi/2
    auto A = build_generator(momentum_grid(L)[n - 1], p);
    Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(L);
    e0[0] = 1;
    auto ritz = oracle::krylov_ritz(A.entries, e0);
    auto lam = SpectralPropagator(A).eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i) CHECK(lam[i].real() <= 1e-12);
    for (Eigen::Index i = 0; i < ritz.size(); ++i) {
        double best = 1e300;
        for (Eigen::Index j = 0; j < lam.size(); ++j) best = std::min(best, std::abs(ritz[i] - lam[j]));
        CHECK(best < 1e-8);
    }
    // every generator eigenvalue is an eigenvalue of the full Liouvillian
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(oracle::liouvillian(L, p.J, p.gamma));
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        double best = 1e300;
        for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j)
            best = std::min(best, std::abs(es.eigenvalues()[j] - lam[i]));
        CHECK(best < 1e-8);
    }
}

TEST_CASE("Zeno regime freezes the density") {
    const int L = 8;
    ChainParams p(L, 1.0, 50.0);
    auto init = DiagonalInitialState::domain_wall(L);
    auto r = evolve_direct(diagonal_state(init), p, {0.5});
    // effective hopping rate 2J^2/gamma = 0.04: density barely moves
    for (int x = 0; x < L; ++x) CHECK(std::abs(r.states[0].entries(x, x).real() - init.c()(x)) < 0.05);
    auto ref = oracle::evolve_exact(diagonal_state(init).entries, p.J, p.gamma, 0.5);
    CHECK((r.states[0].entries - ref).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("direct evolution input errors") {
    ChainParams p(6, 1.0, 0.1);
    auto C0 = diagonal_state(DiagonalInitialState::delta(6));
    CHECK_THROWS_AS(evolve_direct(C0, p, {1.0, 0.5}), ConfigError);
    CHECK_THROWS_AS(evolve_direct(C0, p, {1.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(evolve_direct(C0, p, {-1.0}), ConfigError);
    DirectOptions small;
    small.max_L = 4;
    CHECK_THROWS_AS(evolve_direct(C0, p, {1.0}, small), ConfigError);
    auto bad = C0;
    bad.entries(0, 1) = 1.0;
    CHECK_THROWS_AS(evolve_direct(bad, p, {1.0}), ConfigError);
    CHECK_THROWS_AS(evolve_direct(C0, ChainParams(5, 1.0, 0.1), {1.0}), ConfigError);
    DirectOptions tiny;
    tiny.max_steps = 3;
    CHECK_THROWS_AS(evolve_direct(C0, p, {50.0}, tiny), StepSizeError);
    CHECK_THROWS_AS(evolve_modes_spectral(DiagonalInitialState::delta(6), p, {1.0}, 6), ConfigError);
}

TEST_CASE("the printed closure is wrong when the twist is not one") {
    const int L = 6;
    ChainParams p(L, 1.0, 0.4);
    auto init = DiagonalInitialState::delta(L, 1);
    auto ref = oracle::evolve_exact(diagonal_state(init).entries, p.J, p.gamma, 1.5);
    auto tw = assemble_correlations(evolve_modes_spectral(init, p, {1.5}, L - 1)[0]);
    auto un = assemble_correlations(evolve_modes_spectral(init, p, {1.5}, L - 1, Boundary::untwisted)[0]);
    CHECK((tw.entries - ref).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((un.entries - ref).cwiseAbs().maxCoeff() > 1e-3);
}
