#include "xxdeph/model.hpp"

#include "xxdeph/errors.hpp"
#include "xxdeph/mode_sum.hpp"

#include <json.hpp>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <sstream>

namespace xxdeph {

namespace {
constexpr double pi = std::numbers::pi;
constexpr cplx I{0.0, 1.0};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        auto b = cell.find_first_not_of(" \t\r");
        auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    return out;
}
} // namespace

ChainParams::ChainParams(int L_, double J_, double gamma_) : L(L_), J(J_), gamma(gamma_) {
    validate();
}

void ChainParams::validate() const {
    if (L < 2) throw ConfigError("chain length L must be >= 2 (got " + std::to_string(L) + ")");
    if (!(J > 0.0) || !std::isfinite(J)) throw ConfigError("hopping J must be finite and > 0");
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
        throw ConfigError("dephasing gamma must be finite and >= 0");
}

double dispersion(double q, double J) { return 8.0 * J * std::sin(0.5 * q); }

cplx unit_root(long long k, long long L) {
    k %= L;
    if (k < 0) k += L;
    if (k == 0) return {1.0, 0.0};
    if (2 * k == L) return {-1.0, 0.0};
    if (4 * k == L) return {0.0, 1.0};
    if (4 * k == 3 * L) return {0.0, -1.0};
    // use the smaller angle for accuracy
    double a = 2.0 * pi * static_cast<double>(k) / static_cast<double>(L);
    if (2 * k > L) {
        a = -2.0 * pi * static_cast<double>(L - k) / static_cast<double>(L);
    }
    return {std::cos(a), std::sin(a)};
}

std::vector<MomentumMode> momentum_grid(int L, double J) {
    if (L < 2) throw ConfigError("momentum grid needs L >= 2");
    std::vector<MomentumMode> modes(L);
    for (int n = 1; n <= L; ++n) {
        double q = 2.0 * pi * n / L;
        double w = (n == L) ? 0.0 : (2 * n == L ? 8.0 * J : dispersion(q, J));
        modes[n - 1] = {n, q, w};
    }
    return modes;
}

Eigen::VectorXcd momentum_transform(const Eigen::VectorXd& c) {
    const long L = c.size();
    Eigen::VectorXcd cq(L);
    if (L <= 4096) {
        for (long n = 1; n <= L; ++n) {
            cplx acc = 0.0;
            for (long x = 0; x < L; ++x) acc += c[x] * unit_root(-n * x, L);
            cq[n - 1] = acc;
        }
        return cq;
    }
    Eigen::FFT<double> fft;
    std::vector<double> in(c.data(), c.data() + L);
    std::vector<cplx> out;
    fft.fwd(out, in);
    for (long n = 1; n <= L; ++n) cq[n - 1] = out[n % L];
    return cq;
}

DiagonalInitialState::DiagonalInitialState(Eigen::VectorXd c, std::string tag)
    : c_(std::move(c)), tag_(std::move(tag)) {
    if (c_.size() < 2) throw ConfigError("initial state needs L >= 2 entries");
    for (long x = 0; x < c_.size(); ++x)
        if (!(std::abs(c_[x]) <= 1.0 + 1e-12))
            throw ConfigError("initial diagonal entry c_" + std::to_string(x) + " outside [-1, 1]");
    cq_ = momentum_transform(c_);
}

DiagonalInitialState::DiagonalInitialState(Eigen::VectorXd c, Eigen::VectorXcd cq, std::string tag)
    : c_(std::move(c)), cq_(std::move(cq)), tag_(std::move(tag)) {
    if (c_.size() < 2 || cq_.size() != c_.size())
        throw ConfigError("initial state: c and c(q) must have equal length >= 2");
    for (long x = 0; x < c_.size(); ++x)
        if (!(std::abs(c_[x]) <= 1.0 + 1e-12))
            throw ConfigError("initial diagonal entry c_" + std::to_string(x) + " outside [-1, 1]");
    if (c_.size() <= (1L << 22)) {
        Eigen::VectorXcd ref = momentum_transform(c_);
        double scale = std::max(1.0, ref.cwiseAbs().maxCoeff());
        if ((ref - cq_).cwiseAbs().maxCoeff() > 1e-12 * scale * std::log2(double(c_.size()) + 2))
            throw ConfigError("initial state: stored c(q) inconsistent with c");
    }
}

DiagonalInitialState DiagonalInitialState::delta(int L, int x0) {
    if (L < 2) throw ConfigError("delta state needs L >= 2");
    if (x0 < 0 || x0 >= L) throw ConfigError("delta site outside the chain");
    Eigen::VectorXd c = Eigen::VectorXd::Zero(L);
    c[x0] = 1.0;
    Eigen::VectorXcd cq(L);
    for (long n = 1; n <= L; ++n) cq[n - 1] = unit_root(-n * static_cast<long long>(x0), L);
    return DiagonalInitialState(std::move(c), std::move(cq), "delta");
}

DiagonalInitialState DiagonalInitialState::domain_wall(int L) {
    if (L < 2) throw ConfigError("domain wall needs L >= 2");
    const long h = L / 2;
    Eigen::VectorXd c(L);
    for (long x = 0; x < L; ++x) c[x] = x < h ? -1.0 : 1.0;
    // c(q) = sum_all z^x - 2 sum_{x<h} z^x, z = e^{-iq}; finite geometric sums
    Eigen::VectorXcd cq(L);
    for (long n = 1; n <= L; ++n) {
        if (n == L) {
            cq[n - 1] = static_cast<double>(L - 2 * h);
            continue;
        }
        cplx z = unit_root(-n, L);
        cplx zh = unit_root(-n * h, L);
        cq[n - 1] = -2.0 * (1.0 - zh) / (1.0 - z);
    }
    return DiagonalInitialState(std::move(c), std::move(cq), "domain-wall");
}

DiagonalInitialState DiagonalInitialState::uniform(int L, double value) {
    if (L < 2) throw ConfigError("uniform state needs L >= 2");
    Eigen::VectorXd c = Eigen::VectorXd::Constant(L, value);
    Eigen::VectorXcd cq = Eigen::VectorXcd::Zero(L);
    cq[L - 1] = value * L;
    return DiagonalInitialState(std::move(c), std::move(cq), "uniform");
}

DiagonalInitialState DiagonalInitialState::from_csv(std::istream& in, std::string tag) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("initial-state CSV is empty");
    auto header = split_csv(line);
    int col = -1;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == "c") col = static_cast<int>(i);
    if (col < 0) throw ConfigError("initial-state CSV has no column \"c\"");
    std::vector<double> vals;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_csv(line);
        if (static_cast<int>(cells.size()) <= col)
            throw ConfigError("initial-state CSV line " + std::to_string(lineno) + " is short");
        try {
            std::size_t pos = 0;
            double v = std::stod(cells[col], &pos);
            if (pos != cells[col].size()) throw std::invalid_argument("trailing");
            vals.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError("initial-state CSV line " + std::to_string(lineno) +
                              ": cannot parse \"" + cells[col] + "\"");
        }
    }
    Eigen::VectorXd c = Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
    return DiagonalInitialState(std::move(c), std::move(tag));
}

DiagonalInitialState DiagonalInitialState::from_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open initial-state CSV " + path);
    return from_csv(f, "custom-csv");
}

double CorrelationMatrix::hermiticity_error() const {
    return (entries - entries.adjoint()).cwiseAbs().maxCoeff();
}

double CorrelationMatrix::parity_error() const {
    const int n = L();
    double err = 0.0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const cplx v = entries(x, y);
            err = std::max(err, ((x - y) % 2 == 0) ? std::abs(v.imag()) : std::abs(v.real()));
        }
    return err;
}

double CorrelationMatrix::trace() const { return entries.diagonal().real().sum(); }

void CorrelationMatrix::check_invariants(double tol, double expected_trace) const {
    double h = hermiticity_error();
    if (h > tol)
        throw StructureError("Hermiticity violated by " + std::to_string(h) + " at t=" +
                             std::to_string(time));
    if (L() % 2 == 0) {
        double p = parity_error();
        if (p > tol)
            throw StructureError("even/odd structure violated by " + std::to_string(p) +
                                 " at t=" + std::to_string(time));
    }
    double tr = std::abs(trace() - expected_trace);
    if (tr > tol)
        throw StructureError("trace drift " + std::to_string(tr) + " at t=" + std::to_string(time));
}

void CorrelationMatrix::write_csv(std::ostream& out) const {
    out << "x,y,re,im\n" << std::setprecision(17);
    for (int x = 0; x < L(); ++x)
        for (int y = 0; y < L(); ++y)
            out << x << ',' << y << ',' << entries(x, y).real() << ',' << entries(x, y).imag()
                << '\n';
}

std::string CorrelationMatrix::to_json() const {
    nlohmann::json j;
    j["L"] = L();
    j["t"] = time;
    j["truncated"] = truncated;
    auto arr = nlohmann::json::array();
    for (int x = 0; x < L(); ++x) {
        auto row = nlohmann::json::array();
        for (int y = 0; y < L(); ++y) row.push_back({entries(x, y).real(), entries(x, y).imag()});
        arr.push_back(std::move(row));
    }
    j["entries"] = std::move(arr);
    return j.dump();
}

CorrelatorModes initial_modes(const DiagonalInitialState& init, int lmax) {
    CorrelatorModes m;
    m.L = init.L();
    m.t = 0.0;
    m.g = Eigen::MatrixXcd::Zero(lmax + 1, m.L);
    m.g.row(0) = init.cq().transpose();
    return m;
}

namespace {
void check_modes(const CorrelatorModes& m) {
    if (m.L < 2 || m.g.cols() != m.L)
        throw ConfigError("correlator modes: expected " + std::to_string(m.L) +
                          " momentum columns, got " + std::to_string(m.g.cols()));
    if (m.g.rows() < 1) throw ConfigError("correlator modes: no diagonals supplied");
}

std::vector<cplx> band_weights(const CorrelatorModes& m, int l) {
    std::vector<cplx> w(m.L);
    const cplx il = std::pow(I, l % 4);
    for (long n = 1; n <= m.L; ++n)
        w[n - 1] = il * unit_root(n * static_cast<long long>(l), 2LL * m.L) * m.g(l, n - 1);
    return w;
}
} // namespace

std::vector<cplx> correlation_band(const CorrelatorModes& modes, int l,
                                   const std::vector<long>& sites, int threads) {
    check_modes(modes);
    if (l < 0 || l > modes.lmax())
        throw ConfigError("requested diagonal l=" + std::to_string(l) + " beyond lmax=" +
                          std::to_string(modes.lmax()));
    auto w = band_weights(modes, l);
    std::vector<cplx> out(sites.size());
    mode_sum(w, sites, out, threads);
    return out;
}

CorrelationMatrix assemble_correlations(const CorrelatorModes& modes, const AssembleOptions& opt) {
    check_modes(modes);
    const int L = modes.L;
    if (L > opt.max_dense_L)
        throw ConfigError("dense reconstruction limited to L <= " + std::to_string(opt.max_dense_L) +
                          "; use correlation_band for larger chains");
    CorrelationMatrix C;
    C.time = modes.t;
    C.entries = Eigen::MatrixXcd::Zero(L, L);
    const int half = L / 2;
    const int top = std::min(modes.lmax(), half);
    C.truncated = top < half;
    std::vector<long> xs(L);
    for (int x = 0; x < L; ++x) xs[x] = x;
    std::vector<cplx> band(L);
    for (int l = 0; l <= top; ++l) {
        auto w = band_weights(modes, l);
        mode_sum(w, xs, band, opt.threads);
        for (int x = 0; x < L; ++x) {
            int r = (x + l) % L;
            C.entries(r, x) = band[x];
            if (l > 0 && 2 * l != L) C.entries(x, r) = std::conj(band[x]);
        }
    }
    return C;
}

} // namespace xxdeph
