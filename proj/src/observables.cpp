#include "xxdeph/observables.hpp"

#include "xxdeph/errors.hpp"
#include "xxdeph/log.hpp"
#include "xxdeph/mode_sum.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace xxdeph {

namespace {
constexpr double nan = std::numeric_limits<double>::quiet_NaN();

void write_double(std::ostream& out, double v) {
    if (std::isnan(v)) out << "nan";
    else out << v;
}
} // namespace

std::vector<double> magnetization_profile(const CorrelationMatrix& C, double tol) {
    const int L = C.L();
    std::vector<double> m(L);
    for (int x = 0; x < L; ++x) {
        const cplx c = C.entries(x, x);
        if (std::abs(c.imag()) > tol)
            throw StructureError("diagonal entry " + std::to_string(x) + " has imaginary part " +
                                 std::to_string(c.imag()));
        m[x] = -c.real();
    }
    return m;
}

std::vector<double> current_profile(const CorrelationMatrix& C, double J, double tol) {
    const int L = C.L();
    std::vector<double> j(L);
    for (int x = 0; x < L; ++x) {
        const cplx c = C.entries((x + 1) % L, x);
        if (std::abs(c.real()) > tol)
            throw StructureError("first off-diagonal at " + std::to_string(x) +
                                 " has real part " + std::to_string(c.real()));
        j[x] = 4.0 * J * c.imag();
    }
    return j;
}

int right_half_start(int L) { return L / 2; } // ceil((L-1)/2)

double transferred_magnetization(const std::vector<double>& m, int L) {
    if (static_cast<int>(m.size()) != L) throw ConfigError("profile length differs from L");
    const int a = right_half_start(L);
    return pairwise_sum(std::span<const double>(m).subspan(a)) + 0.5 * L;
}

double transferred_magnetization_modes(const std::vector<cplx>& w, int L) {
    if (static_cast<int>(w.size()) != L) throw ConfigError("weight length differs from L");
    const int a = right_half_start(L);
    // sum_{x=a}^{L-1} z^x = (z^a - 1)/(1 - z) for z = e^{i q_n} != 1
    std::vector<double> terms(L);
    for (int n = 1; n < L; ++n) {
        const cplx z = unit_root(n, L);
        const cplx za = unit_root(static_cast<long long>(n) * a, L);
        terms[n - 1] = (w[n - 1] * (za - 1.0) / (1.0 - z)).real();
    }
    terms[L - 1] = w[L - 1].real() * (L - a);
    // m = -C_xx
    return -pairwise_sum(std::span<const double>(terms)) / L + 0.5 * L;
}

void TransportSeries::check() const {
    if (M.size() != times.size()) throw ConfigError("series: M and times differ in length");
    if (!beta.empty() && beta.size() != times.size())
        throw ConfigError("series: beta and times differ in length");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw ConfigError("series: times must increase strictly");
}

void TransportSeries::write_csv(std::ostream& out) const {
    check();
    out << "t,M,beta\n";
    const auto old = out.precision(17);
    for (std::size_t i = 0; i < times.size(); ++i) {
        write_double(out, times[i]);
        out << ',';
        write_double(out, M[i]);
        out << ',';
        write_double(out, beta.empty() ? nan : beta[i]);
        out << '\n';
    }
    out.precision(old);
}

std::string TransportSeries::to_json() const {
    check();
    nlohmann::json j;
    j["meta"] = {{"L", meta.L}, {"J", meta.J}, {"gamma", meta.gamma}, {"initial", meta.tag}};
    for (const auto& [k, v] : meta.extra) j["meta"][k] = v;
    j["t"] = times;
    j["M"] = M;
    auto b = nlohmann::json::array();
    for (std::size_t i = 0; i < beta.size(); ++i) {
        if (valid.empty() || valid[i]) b.push_back(beta[i]);
        else b.push_back(nullptr);
    }
    j["beta"] = b;
    return j.dump(2);
}

namespace {

// Local quadratic fit of y(x) around index i; returns dy/dx at x_i.
double local_slope(const std::vector<double>& x, const std::vector<double>& y, int i, int k) {
    const int n = static_cast<int>(x.size());
    int lo = std::max(0, i - k), hi = std::min(n - 1, i + k);
    const int deg = hi - lo >= 2 ? 2 : 1;
    Eigen::MatrixXd A(hi - lo + 1, deg + 1);
    Eigen::VectorXd b(hi - lo + 1);
    for (int r = lo; r <= hi; ++r) {
        const double d = x[r] - x[i];
        A(r - lo, 0) = 1.0;
        A(r - lo, 1) = d;
        if (deg == 2) A(r - lo, 2) = d * d;
        b(r - lo) = y[r];
    }
    Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    return c(1);
}

} // namespace

TransportSeries log_derivative(TransportSeries s, const LogDerivativeOptions& opt) {
    s.check();
    const int n = static_cast<int>(s.times.size());
    s.beta.assign(n, nan);
    s.valid.assign(n, 0);
    if (n < 2) return s;
    std::vector<double> lx(n), ly(n);
    std::vector<char> ok(n);
    for (int i = 0; i < n; ++i) {
        if (!(s.times[i] > 0)) throw ConfigError("log_derivative needs t > 0");
        ok[i] = s.M[i] > 0;
        lx[i] = std::log(s.times[i]);
        ly[i] = ok[i] ? std::log(s.M[i]) : nan;
    }
    const int k = opt.smooth_half_window;
    for (int i = 0; i < n; ++i) {
        int lo = i > 0 ? i - 1 : i, hi = i < n - 1 ? i + 1 : i;
        if (k > 0) {
            lo = std::max(0, i - k);
            hi = std::min(n - 1, i + k);
        }
        bool good = true;
        for (int r = lo; r <= hi; ++r) good = good && ok[r];
        if (!good) continue;
        s.beta[i] = k > 0 ? local_slope(lx, ly, i, k) : (ly[hi] - ly[lo]) / (lx[hi] - lx[lo]);
        s.valid[i] = 1;
    }
    return s;
}

std::vector<double> log_time_grid(double t0, double t1, int per_decade) {
    if (!(t0 > 0) || !(t1 > t0) || per_decade < 1) throw ConfigError("invalid log time grid");
    const double decades = std::log10(t1 / t0);
    const int n = std::max(2, static_cast<int>(std::ceil(decades * per_decade - 1e-9)) + 1);
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = t0 * std::pow(10.0, decades * i / (n - 1));
    t.back() = t1;
    return t;
}

double profile_variance(const std::vector<double>& x, const std::vector<double>& rho) {
    if (x.size() != rho.size() || x.empty()) throw ConfigError("profile sizes differ");
    double s0 = 0, s1 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s0 += rho[i];
        s1 += rho[i] * x[i];
    }
    if (!(std::abs(s0) > 0)) throw ConfigError("profile has zero weight");
    const double mu = s1 / s0;
    double s2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s2 += rho[i] * (x[i] - mu) * (x[i] - mu);
    return s2 / s0;
}

DiffusionFit fit_diffusion(const std::vector<Profile>& profiles, DiffusionMethod method) {
    if (profiles.size() < 2) throw ConfigError("fit_diffusion needs at least two profiles");
    DiffusionFit f;
    std::vector<double> ts;
    for (const auto& p : profiles) {
        if (method == DiffusionMethod::spread) {
            f.variances.push_back(profile_variance(p.x, p.value));
        } else {
            if (p.x.size() < 3) throw ConfigError("wall profile too short");
            std::vector<double> xm, rho;
            for (std::size_t i = 0; i + 1 < p.x.size(); ++i) {
                xm.push_back(0.5 * (p.x[i] + p.x[i + 1]));
                rho.push_back(-0.5 * (p.value[i + 1] - p.value[i]));
            }
            f.variances.push_back(profile_variance(xm, rho));
        }
        ts.push_back(p.t);
    }
    const std::size_t n = ts.size();
    double mt = 0, mv = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mt += ts[i];
        mv += f.variances[i];
    }
    mt /= n;
    mv /= n;
    double stt = 0, stv = 0, svv = 0;
    for (std::size_t i = 0; i < n; ++i) {
        stt += (ts[i] - mt) * (ts[i] - mt);
        stv += (ts[i] - mt) * (f.variances[i] - mv);
        svv += (f.variances[i] - mv) * (f.variances[i] - mv);
    }
    if (!(stt > 0)) throw ConfigError("fit_diffusion needs distinct times");
    const double slope = stv / stt;
    f.D = slope / 2.0;
    f.intercept = mv - slope * mt;
    f.r2 = svv > 0 ? stv * stv / (stt * svv) : 1.0;
    if (f.r2 < 0.99) {
        std::ostringstream m;
        m << "diffusion fit is poor (R^2 = " << f.r2 << ")";
        warn(m.str());
    }
    return f;
}

PowerLawFit fit_powerlaw(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size()) throw ConfigError("fit_powerlaw: size mismatch");
    if (t.size() < 5) throw ConfigError("fit_powerlaw needs at least 5 points");
    const std::size_t n = t.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(t[i] > 0) || !(y[i] > 0)) throw ConfigError("fit_powerlaw needs t, y > 0");
        lx[i] = std::log(t[i]);
        ly[i] = std::log(y[i]);
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0)) throw ConfigError("fit_powerlaw needs distinct times");
    PowerLawFit f;
    f.exponent = sxy / sxx;
    const double b = my - f.exponent * mx;
    f.prefactor = std::exp(b);
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - b - f.exponent * lx[i];
        sse += r * r;
    }
    f.std_error = std::sqrt(sse / (n - 2) / sxx);
    f.points = static_cast<int>(n);
    return f;
}

} // namespace xxdeph
