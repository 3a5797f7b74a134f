#include "xxdeph/ed_oracle.hpp"
#include "xxdeph/errors.hpp"
#include "xxdeph/log.hpp"
#include "xxdeph/observables.hpp"
#include "xxdeph/pipeline.hpp"
#include "xxdeph/thermo.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace xxdeph;
using cplx = std::complex<double>;

namespace {
struct SilenceWarnings {
    std::vector<std::string> seen;
    WarningHandler prev;
    SilenceWarnings() { prev = set_warning_handler([this](const std::string& m) { seen.push_back(m); }); }
    ~SilenceWarnings() { set_warning_handler(prev); }
};

CorrelationMatrix diagonal(const Eigen::VectorXd& c) {
    CorrelationMatrix C;
    C.entries = c.cast<cplx>().asDiagonal();
    return C;
}
} // namespace

TEST_CASE("magnetization sign convention and domain wall") {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(6);
    d(0) = 1.0;
    auto m = magnetization_profile(diagonal(d));
    CHECK(m[0] == -1.0);
    for (int x = 1; x < 6; ++x) CHECK(m[x] == 0.0);

    const int L = 10;
    auto w = DiagonalInitialState::domain_wall(L);
    auto mw = magnetization_profile(diagonal(w.c()));
    for (int x = 0; x < L; ++x) CHECK(mw[x] == (x < L / 2 ? 1.0 : -1.0));
    CHECK(transferred_magnetization(mw, L) == 0.0);

    auto C = diagonal(d);
    C.entries(2, 2) = cplx(0.0, 1e-6);
    CHECK_THROWS_AS(magnetization_profile(C), StructureError);
}

TEST_CASE("transferred magnetization definition") {
    CHECK(right_half_start(10) == 5);
    CHECK(right_half_start(9) == 4);
    CHECK(transferred_magnetization(std::vector<double>(10, 0.0), 10) == 5.0);
    CHECK_THROWS_AS(transferred_magnetization(std::vector<double>(9, 0.0), 10), ConfigError);
}

TEST_CASE("current vanishes initially and is symmetric about the wall") {
    const int L = 40;
    ChainParams p(L, 1.0, 0.05);
    auto w = DiagonalInitialState::domain_wall(L);
    auto C0 = diagonal(w.c());
    auto j0 = current_profile(C0, p.J);
    for (double v : j0) CHECK(v == 0.0);

    auto r = evolve_direct(C0, p, {0.3});
    auto j = current_profile(r.states[0], p.J);
    // the wall sits on bond (L/2-1, L/2); the opposite wall (L-1, 0) carries the reverse current
    const int b = L / 2 - 1;
    int arg = L / 4;
    for (int x = L / 4; x < L / 2 + L / 4; ++x)
        if (std::abs(j[x]) > std::abs(j[arg])) arg = x;
    CHECK(arg == b);
    CHECK(j[b] > 0);
    for (int k = 1; k < L / 4; ++k) CHECK(std::abs(j[b - k] - j[b + k]) < 1e-9);
    CHECK(std::abs(j[L - 1] + j[b]) < 1e-9);

    auto bad = C0;
    bad.entries(1, 0) = 0.3;
    CHECK_THROWS_AS(current_profile(bad, 1.0), StructureError);
}

TEST_CASE("lattice continuity on a direct trajectory") {
    const int L = 24;
    ChainParams p(L, 1.0, 0.2);
    Eigen::VectorXd c(L);
    for (int x = 0; x < L; ++x) c(x) = 0.6 * std::cos(0.9 * x) + (x == 5 ? 0.3 : 0.0);
    const double t = 1.1, dt = 1e-4;
    DirectOptions o;
    o.rtol = o.atol = 1e-13;
    auto r = evolve_direct(diagonal(c), p, {t - dt, t, t + dt}, o);
    auto mm = magnetization_profile(r.states[0]);
    auto mp = magnetization_profile(r.states[2]);
    auto j = current_profile(r.states[1], p.J);
    double worst = 0.0;
    for (int x = 0; x < L; ++x) {
        const double dmdt = (mp[x] - mm[x]) / (2 * dt);
        worst = std::max(worst, std::abs(dmdt + (j[x] - j[(x + L - 1) % L])));
    }
    CHECK(worst < 1e-6);

    // trace of the profile is conserved
    auto m0 = magnetization_profile(diagonal(c));
    double s0 = 0, s1 = 0;
    for (int x = 0; x < L; ++x) {
        s0 += m0[x];
        s1 += mp[x];
    }
    CHECK(std::abs(s0 - s1) < 1e-10);
}

TEST_CASE("transferred magnetization grows monotonically for the wall") {
    const int L = 60;
    ChainParams p(L, 1.0, 0.1);
    auto w = DiagonalInitialState::domain_wall(L);
    std::vector<double> ts;
    for (int k = 1; k <= 40; ++k) ts.push_back(0.25 * k);
    auto r = evolve_direct(diagonal(w.c()), p, ts);
    double prev = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double M = transferred_magnetization(magnetization_profile(r.states[i]), L);
        CHECK(M >= prev - 1e-8);
        prev = M;
        // mode route: same number from the density weights
        auto wts = density_modes(w, p, ts[i]);
        CHECK(std::abs(transferred_magnetization_modes(wts, L) - M) < 1e-8);
    }
    CHECK_THROWS_AS(transferred_magnetization_modes(std::vector<cplx>(5), L), ConfigError);
}

TEST_CASE("transferred magnetization from modes, odd and even L") {
    for (int L : {7, 12}) {
        Eigen::VectorXd c(L);
        for (int x = 0; x < L; ++x) c(x) = std::sin(1.7 * x + 0.2);
        DiagonalInitialState s(c);
        std::vector<cplx> w(L);
        for (int n = 0; n < L; ++n) w[n] = s.cq()[n];
        auto m = magnetization_profile(diagonal(c));
        CHECK(std::abs(transferred_magnetization_modes(w, L) - transferred_magnetization(m, L)) < 1e-12);
    }
}

TEST_CASE("log derivative is exact on power laws") {
    auto t = log_time_grid(1e-3, 1e3);
    CHECK(t.size() == 6 * 24 + 1);
    CHECK(t.front() == 1e-3);
    CHECK(t.back() == 1e3);
    for (double a : {1.0, 0.5, -1.5}) {
        TransportSeries s;
        s.times = t;
        for (double v : t) s.M.push_back(3.0 * std::pow(v, a));
        auto d = log_derivative(s);
        for (std::size_t i = 0; i < t.size(); ++i) {
            CHECK(d.valid[i]);
            CHECK(std::abs(d.beta[i] - a) < 1e-12);
        }
        LogDerivativeOptions sm;
        sm.smooth_half_window = 3;
        auto ds = log_derivative(s, sm);
        for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(ds.beta[i] - a) < 1e-10);
    }
}

TEST_CASE("log derivative flags nonpositive points") {
    TransportSeries s;
    s.times = {1, 2, 3, 4, 5, 6};
    s.M = {1, 2, 0, 4, 5, 6};
    auto d = log_derivative(s);
    CHECK(d.valid[0]);
    CHECK_FALSE(d.valid[1]);
    CHECK_FALSE(d.valid[2]);
    CHECK_FALSE(d.valid[3]);
    CHECK(d.valid[4]);
    CHECK(std::isnan(d.beta[2]));

    TransportSeries bad;
    bad.times = {1, 1};
    bad.M = {1, 1};
    CHECK_THROWS_AS(log_derivative(bad), ConfigError);
    bad.times = {0, 1};
    CHECK_THROWS_AS(log_derivative(bad), ConfigError);
    CHECK_THROWS_AS(log_time_grid(0.0, 1.0), ConfigError);
}

TEST_CASE("series export") {
    TransportSeries s;
    s.times = {1, 2, 4};
    s.M = {0.0, 2, 4};
    s.meta.L = 100;
    s.meta.gamma = 0.01;
    s.meta.tag = "domain-wall";
    s.meta.extra["window"] = "3..20";
    s = log_derivative(s);
    std::ostringstream out;
    s.write_csv(out);
    CHECK(out.str() == "t,M,beta\n1,0,nan\n2,2,nan\n4,4,1\n");
    auto j = nlohmann::json::parse(s.to_json());
    CHECK(j["meta"]["L"] == 100);
    CHECK(j["meta"]["initial"] == "domain-wall");
    CHECK(j["meta"]["window"] == "3..20");
    CHECK(j["beta"][0].is_null());
    CHECK(j["beta"][2].get<double>() == 1.0);
}

TEST_CASE("diffusion fit on synthetic Gaussians") {
    const double D = 20.0;
    std::vector<Profile> ps;
    for (double t : {100.0, 150.0, 200.0, 250.0, 300.0}) {
        Profile p;
        p.t = t;
        const double var = 2 * D * t;
        for (int x = -2000; x <= 2000; ++x) {
            p.x.push_back(x);
            p.value.push_back(std::exp(-x * x / (2 * var)) / std::sqrt(2 * std::numbers::pi * var));
        }
        ps.push_back(p);
    }
    auto f = fit_diffusion(ps);
    CHECK(std::abs(f.D - D) < 1e-6);
    CHECK(f.r2 > 0.999999);

    // the same spreading seen through a domain wall m = -erf(x / sqrt(2 var))
    std::vector<Profile> walls;
    for (const auto& p : ps) {
        Profile w;
        w.t = p.t;
        for (std::size_t i = 0; i < p.x.size(); ++i) {
            const double x = p.x[i] + 0.5;
            w.x.push_back(x);
            w.value.push_back(-std::erf(x / std::sqrt(4 * D * p.t)));
        }
        walls.push_back(w);
    }
    auto fw = fit_diffusion(walls, DiffusionMethod::wall_gradient);
    CHECK(std::abs(fw.D - D) / D < 1e-3);

    // noisy data warn
    SilenceWarnings quiet;
    std::vector<Profile> noisy = {ps[0], ps[4], ps[1]};
    noisy[1].t = ps[1].t;
    noisy[2].t = ps[2].t;
    fit_diffusion(noisy);
    CHECK(quiet.seen.size() == 1);
    CHECK_THROWS_AS(fit_diffusion({ps[0]}), ConfigError);
}

TEST_CASE("power-law fit") {
    std::vector<double> t, y;
    for (int k = 0; k < 12; ++k) {
        t.push_back(std::pow(10.0, 0.2 * k));
        y.push_back(0.7 * std::pow(t.back(), -1.5));
    }
    auto f = fit_powerlaw(t, y);
    CHECK(std::abs(f.exponent + 1.5) < 1e-12);
    CHECK(std::abs(f.prefactor - 0.7) < 1e-12);
    CHECK(f.std_error < 1e-12);
    CHECK(f.points == 12);
    CHECK_THROWS_AS(fit_powerlaw({1, 2, 3, 4}, {1, 2, 3, 4}), ConfigError);
    CHECK_THROWS_AS(fit_powerlaw({1, 2, 3, 4, 5}, {1, 2, -3, 4, 5}), ConfigError);
}

TEST_CASE("diffusion constant from the thermodynamic density") {
    // delta release at gamma = 1: the variance grows as 2 D t with D = 2 J^2 / gamma
    ChainParams p(2, 1.0, 1.0);
    DensityOptions o;
    o.nq = 1024;
    std::vector<Profile> ps;
    std::vector<long> xs;
    for (long x = -200; x <= 200; ++x) xs.push_back(x);
    for (double t = 10.0; t <= 30.0; t += 5.0) {
        Profile pr;
        pr.t = t;
        auto v = density_thermo_profile(xs, t, [](double) { return cplx(1.0); }, p, o);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            pr.x.push_back(double(xs[i]));
            pr.value.push_back(v[i]);
        }
        ps.push_back(pr);
    }
    auto f = fit_diffusion(ps);
    CHECK(std::abs(f.D - 2.0) / 2.0 < 0.05);
}
