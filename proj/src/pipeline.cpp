#include "xxdeph/pipeline.hpp"

#include "xxdeph/errors.hpp"
#include "xxdeph/log.hpp"
#include "xxdeph/mode_sum.hpp"
#include "xxdeph/parallel.hpp"
#include "xxdeph/transfer.hpp"

#include <atomic>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

namespace xxdeph {

namespace {

constexpr cplx I{0.0, 1.0};

cplx ipow(int l) {
    static const cplx v[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return v[((l % 4) + 4) % 4];
}

void warn_once_unenclosed() {
    static std::atomic<bool> done{false};
    if (!done.exchange(true))
        warn("Talbot contour does not enclose all singularities at some times; oscillatory "
             "components decaying like exp(-4 gamma t) may be lost there");
}

struct Plan {
    TalbotRule rule, fine;
    bool checked = false;
    bool enclosed = false;
};

Plan make_plan(double t, const ChainParams& p, const PipelineOptions& opt, std::size_t nmodes,
               bool sym) {
    TalbotConfig cfg = opt.talbot;
    cfg.conjugate_symmetric = sym;
    const double wmax = 8.0 * p.J;
    Plan pl;
    pl.checked = cfg.precision_mode == PrecisionMode::checked;
    const double lambda = 2.0 * cfg.M / (5.0 * t);
    bool want = opt.enclose == Enclosure::always ||
                (opt.enclose == Enclosure::automatic && std::exp(-4.0 * p.gamma * t) > 1e-13);
    if (want) {
        cfg.imag_extent = wmax;
        TalbotRule r(t, cfg);
        const double cost = double(r.nodes().size()) * double(nmodes) * (pl.checked ? 3 : 1);
        const bool capped = r.lambda() * r.nu() * std::numbers::pi / 2 < 0.999 * cfg.stretch * wmax;
        if (opt.enclose == Enclosure::always || (cost <= opt.eval_budget && !capped)) {
            pl.rule = std::move(r);
            if (pl.checked) pl.fine = TalbotRule(t, cfg, 2);
            pl.enclosed = !capped;
            return pl;
        }
    }
    cfg.imag_extent = 0.0;
    pl.rule = TalbotRule(t, cfg);
    if (pl.checked) pl.fine = TalbotRule(t, cfg, 2);
    pl.enclosed = lambda * std::numbers::pi / 2 >= wmax;
    if (!pl.enclosed && std::exp(-4.0 * p.gamma * t) > 1e-13) warn_once_unenclosed();
    return pl;
}

struct ModeJob {
    int n;
    double omega;
    cplx theta;
    cplx cq;
};

// Inverts i^{-l} G_{l,0} for l = 0..lmax and one mode; out[l] = g_l(t) / c(q).
void invert_mode(const ModeJob& m, const ChainParams& p, int lmax, const PipelineOptions& opt,
                 const Plan& plan, double t, cplx* out, double& err_est, bool& fallback) {
    fallback = false;
    if (m.n == p.L || m.omega < 1e-10 * p.J) {
        out[0] = 1.0;
        for (int l = 1; l <= lmax; ++l) out[l] = 0.0;
        return;
    }
    if (opt.inversion == InversionMethod::contour) {
        try {
            out[0] = std::exp(-4.0 * p.gamma * t) * contour_invert(t, m.omega, p.gamma).total();
            return;
        } catch (const MarginalRegimeError&) {
            fallback = true;
        }
    }
    const bool finite = opt.kernel == KernelChoice::finite;
    ModeKernel mk{m.omega, m.theta};
    std::vector<cplx> col(lmax + 1);
    auto run = [&](const TalbotRule& rule, cplx* res) {
        const auto& s = rule.nodes();
        std::vector<std::vector<cplx>> vals(lmax + 1, std::vector<cplx>(s.size()));
        for (std::size_t k = 0; k < s.size(); ++k) {
            if (finite) {
                resolvent_column_finite(s[k], mk, p, lmax, col.data());
                for (int l = 0; l <= lmax; ++l) vals[l][k] = ipow(-l) * col[l];
            } else {
                const cplx st = s[k] + 4.0 * p.gamma;
                const cplx R = sqrt_segment(st, m.omega);
                const cplx F = f_thermo_omega(s[k], m.omega, p.gamma);
                const cplx r = m.omega / (st + R);
                cplx acc = F;
                for (int l = 0; l <= lmax; ++l) {
                    vals[l][k] = acc;
                    acc *= r;
                }
            }
            for (int l = 0; l <= lmax; ++l)
                if (!std::isfinite(vals[l][k].real()) || !std::isfinite(vals[l][k].imag()))
                    throw ContourCollisionError("kernel not finite on the Talbot contour", s[k]);
        }
        for (int l = 0; l <= lmax; ++l) res[l] = ipow(l) * rule.combine(vals[l]);
    };
    run(plan.rule, out);
    if (plan.checked) {
        std::vector<cplx> fine(lmax + 1);
        run(plan.fine, fine.data());
        for (int l = 0; l <= lmax; ++l) {
            err_est = std::max(err_est, std::abs(fine[l] - out[l]));
            out[l] = fine[l];
        }
    }
}

void run_modes(const std::vector<ModeJob>& jobs, const ChainParams& p, double t, int lmax,
               const PipelineOptions& opt, std::vector<cplx>& result, PipelineReport* report) {
    const bool sym = opt.kernel == KernelChoice::thermodynamic || p.L % 2 == 0;
    Plan plan = make_plan(t, p, opt, jobs.size(), sym);
    result.assign(jobs.size() * (lmax + 1), 0.0);
    std::vector<double> errs(jobs.size(), 0.0);
    std::vector<char> fb(jobs.size(), 0);
    std::mutex mu;
    std::vector<std::pair<int, std::string>> failures;
    parallel_for(jobs.size(), opt.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t j = b; j < e; ++j) {
            try {
                bool f = false;
                invert_mode(jobs[j], p, lmax, opt, plan, t, &result[j * (lmax + 1)], errs[j], f);
                fb[j] = f;
                for (int l = 0; l <= lmax; ++l) result[j * (lmax + 1) + l] *= jobs[j].cq;
            } catch (const NumericalError& ex) {
                std::lock_guard<std::mutex> lk(mu);
                failures.emplace_back(jobs[j].n, ex.what());
            }
        }
    });
    if (!failures.empty()) {
        std::sort(failures.begin(), failures.end());
        throw ModeFailureError(std::move(failures));
    }
    if (report) {
        report->nodes = static_cast<int>(plan.rule.nodes().size());
        report->enclosed = plan.enclosed;
        report->max_error_estimate = 0.0;
        for (double e : errs) report->max_error_estimate = std::max(report->max_error_estimate, e);
        report->contour_fallbacks = 0;
        for (char f : fb) report->contour_fallbacks += f;
    }
}

void check_pipeline(const DiagonalInitialState& init, const ChainParams& p, double t,
                    const PipelineOptions& opt) {
    p.validate();
    opt.talbot.validate();
    if (init.L() != p.L) throw ConfigError("initial state length differs from L");
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("time must be finite and >= 0");
    if (opt.inversion == InversionMethod::contour && opt.kernel != KernelChoice::thermodynamic)
        throw ConfigError("contour inversion is available for the thermodynamic kernel only");
}

} // namespace

CorrelatorModes transfer_modes(const DiagonalInitialState& init, const ChainParams& p, double t,
                               int lmax, const PipelineOptions& opt, PipelineReport* report) {
    check_pipeline(init, p, t, opt);
    if (lmax < 0 || lmax > p.L - 1) throw ConfigError("lmax must lie in [0, L-1]");
    if (opt.inversion == InversionMethod::contour && lmax > 0)
        throw ConfigError("contour inversion covers the density (l = 0) only");
    if (t == 0.0) return initial_modes(init, lmax);
    const auto grid = momentum_grid(p.L, p.J);
    std::vector<ModeJob> jobs;
    jobs.reserve(p.L);
    for (const auto& m : grid)
        jobs.push_back({m.n, m.omega, boundary_twist_mode(m.n, p.L, opt.boundary), init.cq()[m.n - 1]});
    std::vector<cplx> res;
    run_modes(jobs, p, t, lmax, opt, res, report);
    CorrelatorModes out;
    out.L = p.L;
    out.t = t;
    out.g.resize(lmax + 1, p.L);
    for (int j = 0; j < p.L; ++j)
        for (int l = 0; l <= lmax; ++l) out.g(l, j) = res[std::size_t(j) * (lmax + 1) + l];
    return out;
}

std::vector<cplx> density_modes(const DiagonalInitialState& init, const ChainParams& p, double t,
                                const PipelineOptions& opt, PipelineReport* report) {
    check_pipeline(init, p, t, opt);
    const int L = p.L;
    std::vector<cplx> w(L);
    if (t == 0.0) {
        for (int j = 0; j < L; ++j) w[j] = init.cq()[j];
        return w;
    }
    std::vector<ModeJob> jobs;
    jobs.reserve(L / 2 + 1);
    for (int n = 1; n <= L / 2; ++n) {
        double omega = (2 * n == L) ? 8.0 * p.J : dispersion(2.0 * std::numbers::pi * n / L, p.J);
        jobs.push_back({n, omega, boundary_twist_mode(n, L, opt.boundary), init.cq()[n - 1]});
    }
    jobs.push_back({L, 0.0, boundary_twist_mode(L, L, opt.boundary), init.cq()[L - 1]});
    std::vector<cplx> res;
    run_modes(jobs, p, t, 0, opt, res, report);
    for (std::size_t j = 0; j + 1 < jobs.size(); ++j) {
        const int n = jobs[j].n;
        w[n - 1] = res[j];
        if (2 * n != L) w[L - n - 1] = std::conj(res[j]);
    }
    w[L - 1] = res.back();
    return w;
}

std::vector<double> density_profile(const DiagonalInitialState& init, const ChainParams& p,
                                    double t, const std::vector<long>& xs,
                                    const PipelineOptions& opt, PipelineReport* report) {
    auto w = density_modes(init, p, t, opt, report);
    std::vector<double> out(xs.size());
    mode_sum_real(w, xs, out, opt.threads);
    return out;
}

} // namespace xxdeph
