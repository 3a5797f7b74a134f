#include "cli.hpp"

#include "plot.hpp"

#include "xxdeph/ed_oracle.hpp"
#include "xxdeph/errors.hpp"
#include "xxdeph/mode_sum.hpp"
#include "xxdeph/observables.hpp"
#include "xxdeph/pipeline.hpp"
#include "xxdeph/thermo.hpp"
#include "xxdeph/transfer.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>
#include <sys/resource.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

namespace xxdeph::cli {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double peak_rss_mb() {
    rusage ru{};
    getrusage(RUSAGE_SELF, &ru);
    return ru.ru_maxrss / 1024.0;
}

class CsvFile {
public:
    CsvFile(const std::string& path, const std::string& header) : path_(path), f_(path) {
        if (!f_) throw ConfigError("cannot write " + path);
        f_ << header << '\n';
    }
    template <class... Ts>
    void row(const Ts&... v) {
        bool first = true;
        ((f_ << (first ? "" : ",") << cell(v), first = false), ...);
        f_ << '\n';
    }
    const std::string& path() const { return path_; }
    void close() {
        f_.close();
        if (!f_) throw ConfigError("failed writing " + path_);
    }

private:
    static std::string cell(double v) { return fmt(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(long v) { return std::to_string(v); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    std::string path_;
    std::ofstream f_;
};

CorrelationMatrix initial_matrix(const DiagonalInitialState& init) {
    CorrelationMatrix C;
    C.entries = Eigen::MatrixXcd::Zero(init.L(), init.L());
    C.entries.diagonal() = init.c().cast<cplx>();
    return C;
}

DirectOptions ed_options(const RunConfig& cfg) {
    DirectOptions o;
    o.max_L = 4096;
    (void)cfg;
    return o;
}

PipelineOptions pipeline_options(const RunConfig& cfg, bool thermo) {
    PipelineOptions o;
    o.kernel = thermo ? KernelChoice::thermodynamic : KernelChoice::finite;
    o.inversion = cfg.method == Method::transfer_contour ? InversionMethod::contour
                                                          : InversionMethod::talbot;
    o.boundary = cfg.boundary;
    o.talbot.M = cfg.talbot_M;
    o.talbot.precision_mode = cfg.checked ? PrecisionMode::checked : PrecisionMode::fixed;
    o.threads = cfg.threads;
    return o;
}

DensityOptions density_options(const RunConfig& cfg) {
    DensityOptions o;
    o.method = cfg.method == Method::transfer_contour ? InversionMethod::contour
                                                       : InversionMethod::talbot;
    o.nq = cfg.nq;
    o.talbot.M = cfg.talbot_M;
    o.talbot.precision_mode = cfg.checked ? PrecisionMode::checked : PrecisionMode::fixed;
    o.threads = cfg.threads;
    return o;
}

std::pair<double, double> fit_window(const RunConfig& cfg) {
    auto c = cfg.fit_window.find(':');
    return {std::stod(cfg.fit_window.substr(0, c)), std::stod(cfg.fit_window.substr(c + 1))};
}

json report_json(const PipelineReport& r) {
    return {{"talbot_nodes", r.nodes},
            {"enclosed", r.enclosed},
            {"max_error_estimate", r.max_error_estimate},
            {"contour_fallbacks", r.contour_fallbacks}};
}

struct Context {
    const RunConfig& cfg;
    std::ostream& log;
    RunOutcome out;
    json extra = json::object();
    std::string prefix() const { return cfg.output; }
};

// ---- commands ----------------------------------------------------------------------------

void cmd_evolve(Context& cx) {
    const auto& cfg = cx.cfg;
    const auto init = make_initial(cfg);
    const auto times = cfg.times.values(cfg.params.gamma);
    const int L = cfg.params.L;
    const double J = cfg.params.J;
    CsvFile csv(cx.prefix() + "_evolve.csv", "t,x,m,j");
    double worst = 0.0;
    auto emit = [&](double t, const CorrelationMatrix& C) {
        worst = std::max({worst, C.hermiticity_error(), L % 2 ? 0.0 : C.parity_error()});
        C.check_invariants(1e-8, init.total());
        auto m = magnetization_profile(C, 1e-8);
        auto j = current_profile(C, J, 1e-8);
        for (int x = 0; x < L; ++x) csv.row(t, x, m[x], j[x]);
    };
    if (cfg.method == Method::ed) {
        auto res = evolve_direct(initial_matrix(init), cfg.params, times, ed_options(cfg),
                                 [&](double t, const Eigen::MatrixXcd& E) {
                                     CorrelationMatrix C;
                                     C.entries = E;
                                     C.time = t;
                                     emit(t, C);
                                 });
        cx.extra["ed_steps"] = res.steps;
        cx.extra["ed_rejected"] = res.rejected;
    } else {
        const bool thermo = cfg.method == Method::transfer_contour;
        PipelineReport rep;
        for (double t : times) {
            auto modes = transfer_modes(init, cfg.params, t, L / 2, pipeline_options(cfg, thermo), &rep);
            AssembleOptions ao;
            ao.threads = cfg.threads;
            auto C = assemble_correlations(modes, ao);
            C.time = t;
            emit(t, C);
        }
        cx.extra["pipeline"] = report_json(rep);
    }
    cx.extra["max_structure_error"] = worst;
    csv.close();
    cx.out.outputs.push_back(csv.path());
}

void cmd_density(Context& cx) {
    const auto& cfg = cx.cfg;
    const auto init = make_initial(cfg);
    const auto times = cfg.times.values(cfg.params.gamma);
    const auto xs = site_window(cfg, 2000);
    CsvFile csv(cx.prefix() + "_density.csv", "t,x,value_re,value_im,method");
    const std::string method = to_string(cfg.method);
    // C_xx is real for diagonal initial data; the imaginary column is kept for the schema
    auto write = [&](double t, const std::vector<double>& c) {
        for (std::size_t i = 0; i < xs.size(); ++i) csv.row(t, xs[i], c[i], 0.0, method);
    };
    if (cfg.method == Method::ed) {
        evolve_direct(initial_matrix(init), cfg.params, times, ed_options(cfg),
                      [&](double t, const Eigen::MatrixXcd& C) {
                          std::vector<double> c(xs.size());
                          for (std::size_t i = 0; i < xs.size(); ++i) c[i] = C(xs[i], xs[i]).real();
                          write(t, c);
                      });
    } else if (cfg.method == Method::asymptotic) {
        for (double t : times) {
            std::vector<double> c(xs.size());
            const bool early = cfg.params.gamma * t < 1.0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const long d = xs[i] - cfg.x0;
                c[i] = early ? density_shorttime(d, t, cfg.params)
                             : density_longtime(double(d), t, cfg.params);
            }
            write(t, c);
        }
        cx.extra["asymptotic"] = "short-time Bessel form for gamma t < 1, Gaussian otherwise";
    } else if (cfg.nq > 0) {
        if (cfg.initial != InitialPreset::delta)
            throw ConfigError("nq > 0 (continuum grid) needs initial = delta");
        std::vector<long> rel(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) rel[i] = xs[i] - cfg.x0;
        for (double t : times)
            write(t, density_thermo_profile(rel, t, [](double) { return cplx{1.0, 0.0}; },
                                            cfg.params, density_options(cfg)));
        cx.extra["kernel"] = "thermodynamic, nq = " + std::to_string(cfg.nq);
    } else {
        const bool thermo = cfg.method == Method::transfer_contour;
        PipelineReport rep;
        json reps = json::array();
        for (double t : times) {
            write(t, density_profile(init, cfg.params, t, xs, pipeline_options(cfg, thermo), &rep));
            reps.push_back(report_json(rep));
        }
        cx.extra["pipeline"] = reps;
    }
    csv.close();
    cx.out.outputs.push_back(csv.path());
}

void cmd_offdiag(Context& cx) {
    const auto& cfg = cx.cfg;
    const auto init = make_initial(cfg);
    const auto times = cfg.times.values(cfg.params.gamma);
    const int L = cfg.params.L, lmax = std::max(1, cfg.lmax);
    CsvFile csv(cx.prefix() + "_offdiag.csv", "t,l,max_abs,argmax");
    std::vector<std::vector<double>> ys(lmax + 1);
    std::vector<double> ts;
    auto record = [&](double t, int l, double v, long arg) {
        csv.row(t, l, v, arg);
        ys[l].push_back(v);
    };
    if (cfg.method == Method::ed) {
        evolve_direct(initial_matrix(init), cfg.params, times, ed_options(cfg),
                      [&](double t, const Eigen::MatrixXcd& C) {
                          ts.push_back(t);
                          for (int l = 1; l <= lmax; ++l) {
                              double best = -1;
                              long arg = 0;
                              for (int x = 0; x < L; ++x) {
                                  double a = std::abs(C((x + l) % L, x));
                                  if (a > best) best = a, arg = x;
                              }
                              record(t, l, best, arg);
                          }
                      });
    } else if (cfg.method == Method::asymptotic) {
        if (!(cfg.params.gamma > 0)) throw ConfigError("asymptotic off-diagonals need gamma > 0");
        for (double t : times) {
            ts.push_back(t);
            for (int l = 1; l <= lmax; ++l) {
                double best = -1;
                long arg = 0;
                for (long d = -L / 2; d < L / 2; ++d) {
                    double a = t > 0 ? std::abs(offdiag_longtime(double(d), l, t, cfg.params)) : 0.0;
                    if (a > best) best = a, arg = d + cfg.x0;
                }
                record(t, l, best, arg);
            }
        }
    } else {
        const auto xs = site_window(cfg, 2000);
        PipelineReport rep;
        for (double t : times) {
            ts.push_back(t);
            auto modes = transfer_modes(init, cfg.params, t, lmax, pipeline_options(cfg, false), &rep);
            for (int l = 1; l <= lmax; ++l) {
                auto band = correlation_band(modes, l, xs, cfg.threads);
                double best = -1;
                long arg = 0;
                for (std::size_t i = 0; i < xs.size(); ++i)
                    if (std::abs(band[i]) > best) best = std::abs(band[i]), arg = xs[i];
                record(t, l, best, arg);
            }
        }
        cx.extra["pipeline"] = report_json(rep);
    }
    csv.close();
    cx.out.outputs.push_back(csv.path());

    // power-law fits in the gamma t window
    const auto [g0, g1] = fit_window(cfg);
    json fits = json::object();
    for (int l = 1; l <= lmax; ++l) {
        std::vector<double> ft, fy;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double gt = cfg.params.gamma * ts[i];
            if (gt >= g0 - 1e-12 && gt <= g1 + 1e-12 && ys[l][i] > 0) {
                ft.push_back(ts[i]);
                fy.push_back(ys[l][i]);
            }
        }
        if (ft.size() < 5) continue;
        auto f = fit_powerlaw(ft, fy);
        const double expected = -((l + 1) / 2 + 0.5);
        fits[std::to_string(l)] = {{"exponent", f.exponent}, {"std_error", f.std_error},
                                   {"expected", expected}, {"points", f.points}};
        cx.log << "l=" << l << "  fitted slope " << f.exponent << " +- " << f.std_error
               << "  (expected " << expected << ")\n";
    }
    cx.extra["fit_window_gamma_t"] = {g0, g1};
    cx.extra["fits"] = fits;
}

void cmd_beta(Context& cx) {
    const auto& cfg = cx.cfg;
    const auto init = make_initial(cfg);
    const auto times = cfg.times.values(cfg.params.gamma);
    const int L = cfg.params.L;
    for (double t : times)
        if (!(t > 0)) throw ConfigError("beta needs times > 0 (log derivative)");
    TransportSeries s;
    s.times = times;
    s.meta = {L, cfg.params.J, cfg.params.gamma, init.tag(), {}};
    s.meta.extra["method"] = to_string(cfg.method);
    if (cfg.method == Method::ed) {
        evolve_direct(initial_matrix(init), cfg.params, times, ed_options(cfg),
                      [&](double t, const Eigen::MatrixXcd& C) {
                          (void)t;
                          std::vector<double> m(L);
                          for (int x = 0; x < L; ++x) m[x] = -C(x, x).real();
                          s.M.push_back(transferred_magnetization(m, L));
                      });
    } else {
        const bool thermo = cfg.method == Method::transfer_contour;
        PipelineReport rep;
        for (double t : times) {
            auto w = density_modes(init, cfg.params, t, pipeline_options(cfg, thermo), &rep);
            s.M.push_back(transferred_magnetization_modes(w, L));
        }
    }
    LogDerivativeOptions lo;
    lo.smooth_half_window = cfg.smooth;
    s = log_derivative(std::move(s), lo);
    const std::string csv = cx.prefix() + "_beta.csv", js = cx.prefix() + "_beta.json";
    {
        std::ofstream f(csv);
        if (!f) throw ConfigError("cannot write " + csv);
        s.write_csv(f);
    }
    {
        std::ofstream f(js);
        if (!f) throw ConfigError("cannot write " + js);
        f << s.to_json() << '\n';
    }
    cx.out.outputs.push_back(csv);
    cx.out.outputs.push_back(js);
}

void cmd_compare(Context& cx) {
    const auto& cfg = cx.cfg;
    const auto init = make_initial(cfg);
    const auto times = cfg.times.values(cfg.params.gamma);
    const int L = cfg.params.L, lmax = cfg.lmax;
    auto ed = evolve_direct(initial_matrix(init), cfg.params, times, ed_options(cfg));
    CsvFile csv(cx.prefix() + "_compare.csv", "t,l,max_abs_diff");
    double worst = 0.0;
    PipelineReport rep;
    for (std::size_t k = 0; k < times.size(); ++k) {
        auto modes = transfer_modes(init, cfg.params, times[k], lmax, pipeline_options(cfg, false), &rep);
        AssembleOptions ao;
        ao.threads = cfg.threads;
        auto C = assemble_correlations(modes, ao);
        for (int l = 0; l <= lmax; ++l) {
            double d = 0.0;
            for (int x = 0; x < L; ++x) {
                const int y = (x + l) % L;
                d = std::max(d, std::abs(C.entries(y, x) - ed.states[k].entries(y, x)));
            }
            csv.row(times[k], l, d);
            worst = std::max(worst, d);
        }
    }
    csv.close();
    cx.out.outputs.push_back(csv.path());
    cx.log << "max |ED - transfer| = " << fmt(worst) << " (l <= " << lmax << ")\n";
    cx.extra["max_abs_diff"] = worst;
    cx.extra["pipeline"] = report_json(rep);
    if (worst > 1e-6) {
        cx.log << "compare: difference exceeds 1e-6\n";
        cx.out.status = numerical_error;
    }
}

void cmd_resolvent_dump(Context& cx) {
    const auto& cfg = cx.cfg;
    const int L = cfg.params.L;
    const bool have_dense = L <= 1024;
    CsvFile csv(cx.prefix() + "_resolvent.csv", "s_re,s_im,q,g00_re,g00_im");
    CsvFile column(cx.prefix() + "_resolvent_column.csv",
                   "s_re,s_im,q,l,re,im,dense_re,dense_im");
    json generic = json::array();
    std::vector<cplx> col(L);
    for (double q : cfg.q) {
        const auto mk = mode_kernel(q, cfg.params, cfg.boundary);
        Eigen::MatrixXcd A;
        if (have_dense) A = build_generator(q, cfg.params, cfg.boundary).entries;
        for (const cplx s : cfg.s) {
            resolvent_column_finite(s, mk, cfg.params, L - 1, col.data());
            csv.row(s.real(), s.imag(), q, col[0].real(), col[0].imag());
            Eigen::VectorXcd dense;
            if (have_dense) {
                Eigen::MatrixXcd M = s * Eigen::MatrixXcd::Identity(L, L) - A;
                Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(L);
                e0(0) = 1.0;
                dense = M.partialPivLu().solve(e0);
            }
            for (int l = 0; l < L; ++l) {
                if (have_dense)
                    column.row(s.real(), s.imag(), q, l, col[l].real(), col[l].imag(),
                               dense(l).real(), dense(l).imag());
                else
                    column.row(s.real(), s.imag(), q, l, col[l].real(), col[l].imag(), "", "");
            }
            json g = {{"s", {s.real(), s.imag()}}, {"q", q}};
            try {
                auto gen = resolvent_first_column_generic(xx_transfer_problem(q, cfg.params, cfg.boundary), L, s);
                g["G00"] = {gen.unknowns(1).real(), gen.unknowns(1).imag()};
                g["GL-1,0"] = {gen.unknowns(0).real(), gen.unknowns(0).imag()};
                g["log_abs_det"] = gen.log_scale_det;
            } catch (const SingularInputError&) {
                g["note"] = "omega = 0: G00 = 1/s";
            }
            generic.push_back(g);
            cx.log << "q=" << fmt(q) << " s=" << fmt(s.real()) << (s.imag() < 0 ? "" : "+")
                   << fmt(s.imag()) << "i  G00 = " << fmt(col[0].real())
                   << (col[0].imag() < 0 ? "" : "+") << fmt(col[0].imag()) << "i\n";
        }
    }
    csv.close();
    column.close();
    cx.out.outputs.push_back(csv.path());
    cx.out.outputs.push_back(column.path());
    cx.extra["generic"] = generic;
}

void cmd_bench(Context& cx) {
    const auto& cfg = cx.cfg;
    const double t = cfg.times.values(cfg.params.gamma).front();
    if (!(t > 0)) throw ConfigError("bench needs t > 0");
    std::vector<double> Ls = cfg.bench_L;
    if (cfg.raw.count("L") && !cfg.raw.count("bench-L")) Ls = {double(cfg.params.L)};
    CsvFile csv(cx.prefix() + "_bench.csv", "method,L,seconds,seconds_per_mode,peak_rss_mb");
    std::vector<double> lx, ly;
    json rows = json::array();
    for (double Ld : Ls) {
        ChainParams p(static_cast<int>(Ld), cfg.params.J, cfg.params.gamma);
        RunConfig c2 = cfg;
        c2.params = p;
        auto init = make_initial(c2);
        std::vector<long> xs(p.L);
        for (int x = 0; x < p.L; ++x) xs[x] = x;
        const auto t0 = Clock::now();
        PipelineReport rep;
        auto prof = density_profile(init, p, t, xs, pipeline_options(cfg, false), &rep);
        const double sec = seconds_since(t0);
        const double rss = peak_rss_mb();
        csv.row(std::string("transfer-talbot"), long(p.L), sec, sec / p.L, rss);
        cx.log << "transfer-talbot L=" << p.L << "  " << fmt(sec) << " s  (" << fmt(sec / p.L)
               << " s/mode, peak RSS " << fmt(rss) << " MB)\n";
        lx.push_back(std::log(Ld));
        ly.push_back(std::log(sec));
        rows.push_back({{"L", p.L}, {"seconds", sec}, {"peak_rss_mb", rss}, {"nodes", rep.nodes},
                        {"profile_sum", pairwise_sum(std::span<const double>(prof))}});
    }
    for (int L = 64; L <= cfg.bench_ed_max && L <= 4096; L *= 2) {
        ChainParams p(L, cfg.params.J, cfg.params.gamma);
        RunConfig c2 = cfg;
        c2.params = p;
        auto init = make_initial(c2);
        const auto t0 = Clock::now();
        evolve_direct(initial_matrix(init), p, {t}, ed_options(cfg));
        const double sec = seconds_since(t0);
        csv.row(std::string("ed"), long(L), sec, sec / L, peak_rss_mb());
        cx.log << "ed L=" << L << "  " << fmt(sec) << " s\n";
    }
    csv.close();
    cx.out.outputs.push_back(csv.path());
    cx.extra["runs"] = rows;
    if (lx.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
        mx /= lx.size();
        my /= lx.size();
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i)
            sxx += (lx[i] - mx) * (lx[i] - mx), sxy += (lx[i] - mx) * (ly[i] - my);
        const double expo = sxy / sxx;
        const bool pass = expo >= 1.8 && expo <= 2.3;
        cx.extra["runtime_exponent"] = expo;
        cx.extra["exponent_in_range"] = pass;
        cx.log << "runtime exponent " << fmt(expo) << (pass ? " (in [1.8, 2.3])" : " (OUT of [1.8, 2.3])")
               << '\n';
        if (!pass && lx.size() >= 3) cx.out.status = numerical_error;
    }
}

std::string plot_data(const RunOutcome& out) {
    if (out.outputs.empty()) throw ConfigError("no data file for the plot script");
    return out.outputs.front();
}

json config_json(const RunConfig& cfg) {
    json j = json::object();
    for (const auto& [k, v] : cfg.raw) j[k] = v;
    j["command"] = to_string(cfg.command);
    j["method"] = to_string(cfg.method);
    j["L"] = cfg.params.L;
    j["J"] = cfg.params.J;
    j["gamma"] = cfg.params.gamma;
    j["times"] = cfg.times.spec;
    j["threads"] = cfg.threads;
    j["talbot-M"] = cfg.talbot_M;
    j["output"] = cfg.output;
    return j;
}

} // namespace

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (v == 0.0) return "0"; // also folds -0
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string git_blob_hash(const std::string& content) {
    const std::string head = "blob " + std::to_string(content.size()) + std::string(1, '\0');
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int n = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw Error("OpenSSL context allocation failed");
    EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
    EVP_DigestUpdate(ctx, head.data(), head.size());
    EVP_DigestUpdate(ctx, content.data(), content.size());
    EVP_DigestFinal_ex(ctx, md, &n);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string s;
    for (unsigned i = 0; i < n; ++i) {
        s += hex[md[i] >> 4];
        s += hex[md[i] & 15];
    }
    return s;
}

std::string file_blob_hash(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return git_blob_hash(ss.str());
}

RunOutcome run(const RunConfig& cfg, std::ostream& log) {
    const auto t0 = Clock::now();
    Context cx{cfg, log, {}, json::object()};
    switch (cfg.command) {
    case Command::evolve: cmd_evolve(cx); break;
    case Command::density: cmd_density(cx); break;
    case Command::offdiag: cmd_offdiag(cx); break;
    case Command::beta: cmd_beta(cx); break;
    case Command::compare: cmd_compare(cx); break;
    case Command::resolvent_dump: cmd_resolvent_dump(cx); break;
    case Command::bench: cmd_bench(cx); break;
    }
    const double wall = seconds_since(t0);

    if (!cfg.plot.empty()) {
        const auto fig = parse_figure(cfg.plot);
        const std::string gp = cfg.output + "_" + cfg.plot + ".gp";
        emit_plot_script({plot_data(cx.out)}, fig, gp);
        cx.out.outputs.push_back(gp);
    }

    json m;
    m["schema"] = "xxdeph-run-manifest";
    m["schema_version"] = 1;
    m["config"] = config_json(cfg);
    json outs = json::array();
    std::string all;
    for (const auto& p : cx.out.outputs) {
        const std::string h = file_blob_hash(p);
        outs.push_back({{"path", p}, {"blob", h}});
        all += p + ' ' + h + '\n';
    }
    m["outputs"] = outs;
    // hash over the config and every artifact: equal configs with equal outputs share it
    m["content_hash"] = git_blob_hash(m["config"].dump() + '\n' + all);
    m["wall_time_s"] = wall;
    m["status"] = cx.out.status;
    m["details"] = cx.extra;
    const std::string mpath = cfg.output + "_manifest.json";
    std::ofstream f(mpath);
    if (!f) throw ConfigError("cannot write " + mpath);
    f << m.dump(2) << '\n';
    cx.out.outputs.push_back(mpath);
    return cx.out;
}

namespace {

const char* help_footer = R"(CSV schemas:
  evolve          t,x,m,j            m = -C_xx, j = 4J Im C_{x+1,x}
  density         t,x,value_re,value_im,method   value = C_xx (m = -value_re)
  offdiag         t,l,max_abs,argmax max over x of |C_{x+l,x}|
  beta            t,M,beta           plus <output>_beta.json with a meta block
  compare         t,l,max_abs_diff
  resolvent-dump  s_re,s_im,q,g00_re,g00_im      one row per (q, s); --q "q1,q2" --s "re,im;re,im"
                  <output>_resolvent_column.csv: s_re,s_im,q,l,re,im,dense_re,dense_im
  bench           method,L,seconds,seconds_per_mode,peak_rss_mb
Every run writes <output>_manifest.json (schema_version 1).
Time grids: "1,2,5" | lin:a:b:n | log:a:b:n | logd:a:b:per_decade; append g to the scheme
(ling, logg, logdg) to give the bounds in units of gamma t.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.)";

} // namespace

int main_entry(int argc, char** argv) {
    CLI::App app{"XX chain with dephasing: correlation dynamics and transport"};
    app.require_subcommand(1);
    app.footer(help_footer);
    static const std::vector<std::pair<std::string, std::string>> commands = {
        {"evolve", "full profiles m, j at each time (L <= 4096)"},
        {"density", "density profile C_xx at selected sites"},
        {"offdiag", "max_x |C_{x+l,x}| time series and power-law fits"},
        {"beta", "transferred magnetization M(t) and beta = dlogM/dlogt"},
        {"compare", "elementwise ED vs transfer-Talbot"},
        {"resolvent-dump", "resolvent column G_{l,0}(s) for one momentum"},
        {"bench", "runtime scaling of the transfer pipeline"}};
    std::map<std::string, std::map<std::string, std::string>> vals;
    std::map<std::string, std::string> config_file;
    std::map<std::string, bool> checked_flag;
    for (const auto& [name, desc] : commands) {
        auto* sub = app.add_subcommand(name, desc);
        auto& v = vals[name];
        for (const auto& k : known_keys()) {
            if (k == "checked") continue;
            sub->add_option("--" + k, v[k], "see key '" + k + "'");
        }
        sub->add_option("--t", v["t"], "single time (alias of --times)");
        sub->add_option("--config", config_file[name], "key = value file");
        sub->add_flag("--checked", checked_flag[name], "refined Talbot rule with error estimate");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : config_error;
    }
    try {
        const std::string name = app.get_subcommands().front()->get_name();
        auto* sub = app.get_subcommand(name);
        KeyValues kv;
        auto given = [&](const std::string& k) { return sub->count("--" + k) > 0; };
        std::string preset = given("preset") ? vals[name]["preset"] : "";
        KeyValues file;
        if (given("config")) file = parse_key_values_file(config_file[name]);
        if (preset.empty() && file.count("preset")) preset = file["preset"];
        if (!preset.empty()) kv = preset_values(preset);
        for (const auto& [k, v] : file) kv[k] = v;
        for (const auto& k : known_keys())
            if (k != "checked" && given(k)) kv[k] = vals[name][k];
        if (given("t")) kv["times"] = vals[name]["t"];
        if (checked_flag[name]) kv["checked"] = "true";
        const RunConfig cfg = build_config(name, kv);
        const auto out = run(cfg, std::cout);
        for (const auto& p : out.outputs) std::cout << "wrote " << p << '\n';
        return out.status;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return config_error;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return numerical_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return numerical_error;
    }
}

} // namespace xxdeph::cli
