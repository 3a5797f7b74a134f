#include "config.hpp"

#include "xxdeph/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace xxdeph::cli {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got \"" + v + "\"");
    }
}

// Integers may be written as 1e5.
long to_long(const std::string& key, const std::string& v) {
    double d = to_double(key, v);
    if (d != std::floor(d) || std::abs(d) > 9e15)
        throw ConfigError(key + ": expected an integer, got \"" + v + "\"");
    return static_cast<long>(d);
}

int to_int(const std::string& key, const std::string& v) {
    long l = to_long(key, v);
    if (l > 2147483647L || l < -2147483647L) throw ConfigError(key + ": value out of range");
    return static_cast<int>(l);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": expected true/false, got \"" + v + "\"");
}

Command parse_command(const std::string& c) {
    if (c == "evolve") return Command::evolve;
    if (c == "density") return Command::density;
    if (c == "offdiag") return Command::offdiag;
    if (c == "beta") return Command::beta;
    if (c == "compare") return Command::compare;
    if (c == "resolvent-dump") return Command::resolvent_dump;
    if (c == "bench") return Command::bench;
    throw ConfigError("unknown command \"" + c + "\"");
}

Method parse_method(const std::string& m) {
    if (m == "ed") return Method::ed;
    if (m == "transfer-talbot") return Method::transfer_talbot;
    if (m == "transfer-contour") return Method::transfer_contour;
    if (m == "asymptotic") return Method::asymptotic;
    throw ConfigError("method: expected ed | transfer-talbot | transfer-contour | asymptotic, got \"" +
                      m + "\"");
}

} // namespace

std::vector<double> TimeGrid::values(double gamma) const {
    const std::string s = trim(spec);
    if (s.empty()) throw ConfigError("times: empty grid");
    std::vector<double> t;
    auto colon = s.find(':');
    if (colon == std::string::npos) {
        for (const auto& item : split(s, ',')) t.push_back(to_double("times", item));
    } else {
        std::string scheme = s.substr(0, colon);
        auto parts = split(s.substr(colon + 1), ':');
        if (parts.size() != 3) throw ConfigError("times: expected scheme:a:b:n, got \"" + s + "\"");
        const bool scaled = scheme == "ling" || scheme == "logg" || scheme == "logdg";
        if (scaled) scheme.pop_back();
        double a = to_double("times", parts[0]), b = to_double("times", parts[1]);
        if (scaled) {
            if (!(gamma > 0)) throw ConfigError("times: gamma-scaled grid needs gamma > 0");
            a /= gamma;
            b /= gamma;
        }
        const long n = to_long("times", parts[2]);
        if (!(b > a) || n < 1) throw ConfigError("times: need b > a and a positive count");
        if (scheme == "lin") {
            if (n == 1) t.push_back(a);
            for (long i = 0; i < n && n > 1; ++i) t.push_back(a + (b - a) * i / (n - 1));
        } else if (scheme == "log" || scheme == "logd") {
            if (!(a > 0)) throw ConfigError("times: log grid needs a > 0");
            long m = n;
            if (scheme == "logd") m = std::max(2L, static_cast<long>(std::ceil(std::log10(b / a) * n - 1e-9)) + 1);
            for (long i = 0; i < m; ++i) t.push_back(m == 1 ? a : a * std::pow(b / a, double(i) / (m - 1)));
            t.back() = b;
        } else {
            throw ConfigError("times: unknown scheme \"" + scheme + "\" (lin, log, logd, +g)");
        }
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] >= 0)) throw ConfigError("times must be >= 0");
        if (i && !(t[i] > t[i - 1])) throw ConfigError("times must increase strictly");
    }
    return t;
}

KeyValues parse_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
        if (std::find(known_keys().begin(), known_keys().end(), k) == known_keys().end())
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key \"" + k + "\"");
        kv[k] = v;
    }
    return kv;
}

KeyValues parse_key_values_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    return parse_key_values(f);
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "L", "J", "gamma", "initial", "initial-csv", "x0", "times", "method", "nq", "lmax",
        "output", "threads", "sites", "talbot-M", "checked", "boundary", "smooth", "plot",
        "fit-window", "bench-L", "bench-ed-max", "q", "s", "preset"};
    return keys;
}

KeyValues preset_values(const std::string& name) {
    if (name == "fig2")
        return {{"L", "100000"}, {"J", "1"}, {"gamma", "0.01"}, {"initial", "domain-wall"},
                {"times", "5,20,100,500"}, {"method", "transfer-talbot"},
                {"sites", "48500:51500"}, {"plot", "fig2"}, {"output", "fig2"}};
    if (name == "fig3")
        return {{"L", "100000"}, {"J", "1"}, {"gamma", "0.01"}, {"initial", "domain-wall"},
                {"times", "logdg:0.001:30:24"}, {"method", "transfer-talbot"},
                {"plot", "fig3b"}, {"output", "fig3"}};
    if (name == "fig4")
        return {{"L", "200"}, {"J", "1"}, {"gamma", "0.5"}, {"initial", "delta"}, {"x0", "100"},
                {"times", "logdg:0.1:20:24"}, {"method", "ed"}, {"lmax", "4"},
                {"fit-window", "3:20"}, {"plot", "fig4"}, {"output", "fig4"}};
    throw ConfigError("unknown preset \"" + name + "\" (fig2, fig3, fig4)");
}

std::string to_string(Command c) {
    switch (c) {
    case Command::evolve: return "evolve";
    case Command::density: return "density";
    case Command::offdiag: return "offdiag";
    case Command::beta: return "beta";
    case Command::compare: return "compare";
    case Command::resolvent_dump: return "resolvent-dump";
    case Command::bench: return "bench";
    }
    return "?";
}

std::string to_string(Method m) {
    switch (m) {
    case Method::ed: return "ed";
    case Method::transfer_talbot: return "transfer-talbot";
    case Method::transfer_contour: return "transfer-contour";
    case Method::asymptotic: return "asymptotic";
    }
    return "?";
}

RunConfig build_config(const std::string& command, const KeyValues& kv) {
    RunConfig c;
    c.command = parse_command(command);
    for (const auto& [k, v] : kv)
        if (std::find(known_keys().begin(), known_keys().end(), k) == known_keys().end())
            throw ConfigError("unknown key \"" + k + "\"");
    c.raw = kv;
    auto get = [&](const std::string& k) -> const std::string* {
        auto it = kv.find(k);
        return it == kv.end() ? nullptr : &it->second;
    };
    if (auto v = get("preset")) c.preset = *v;
    if (auto v = get("L")) c.params.L = to_int("L", *v);
    if (auto v = get("J")) c.params.J = to_double("J", *v);
    if (auto v = get("gamma")) c.params.gamma = to_double("gamma", *v);
    c.params.validate();
    if (auto v = get("initial")) {
        if (*v == "delta") c.initial = InitialPreset::delta;
        else if (*v == "domain-wall") c.initial = InitialPreset::domain_wall;
        else if (*v == "custom-csv") c.initial = InitialPreset::custom_csv;
        else throw ConfigError("initial: expected delta | domain-wall | custom-csv, got \"" + *v + "\"");
    }
    if (auto v = get("initial-csv")) c.initial_csv = *v;
    if (c.initial == InitialPreset::custom_csv && c.initial_csv.empty())
        throw ConfigError("initial = custom-csv needs initial-csv = <path>");
    if (auto v = get("x0")) c.x0 = to_int("x0", *v);
    if (c.x0 < 0 || c.x0 >= c.params.L) throw ConfigError("x0 must lie in [0, L)");
    if (auto v = get("times")) c.times.spec = *v;
    if (auto v = get("method")) c.method = parse_method(*v);
    if (auto v = get("nq")) c.nq = to_int("nq", *v);
    if (auto v = get("lmax")) c.lmax = to_int("lmax", *v);
    if (auto v = get("output")) c.output = *v;
    if (auto v = get("threads")) c.threads = *v == "auto" ? 0 : to_int("threads", *v);
    if (c.threads < 0) throw ConfigError("threads must be >= 0 or auto");
    if (auto v = get("sites")) c.sites = *v;
    if (auto v = get("talbot-M")) c.talbot_M = to_int("talbot-M", *v);
    if (auto v = get("checked")) c.checked = to_bool("checked", *v);
    if (auto v = get("boundary")) {
        if (*v == "twisted") c.boundary = Boundary::twisted;
        else if (*v == "untwisted") c.boundary = Boundary::untwisted;
        else throw ConfigError("boundary: expected twisted | untwisted");
    }
    if (auto v = get("smooth")) c.smooth = to_int("smooth", *v);
    if (auto v = get("plot")) c.plot = *v;
    if (auto v = get("fit-window")) c.fit_window = *v;
    if (auto v = get("bench-L")) {
        c.bench_L.clear();
        for (const auto& item : split(*v, ',')) c.bench_L.push_back(to_long("bench-L", item));
    }
    if (auto v = get("bench-ed-max")) c.bench_ed_max = to_int("bench-ed-max", *v);
    if (auto v = get("q")) {
        c.q.clear();
        for (const auto& item : split(*v, ',')) c.q.push_back(to_double("q", item));
        if (c.q.empty()) throw ConfigError("q: expected a comma-separated list");
    }
    if (auto v = get("s")) {
        c.s.clear();
        for (const auto& item : split(*v, ';')) {
            auto parts = split(item, ',');
            if (parts.empty() || parts.size() > 2)
                throw ConfigError("s: expected re[,im] values separated by ';', got \"" + item + "\"");
            c.s.push_back({to_double("s", parts[0]), parts.size() > 1 ? to_double("s", parts[1]) : 0.0});
        }
        if (c.s.empty()) throw ConfigError("s: expected at least one value");
    }

    // cross-field checks, before any compute
    TalbotConfig tc;
    tc.M = c.talbot_M;
    tc.validate();
    if (c.lmax < 0) throw ConfigError("lmax must be >= 0");
    if (c.method == Method::ed && c.params.L > 4096 && c.command != Command::bench)
        throw ConfigError("method = ed needs L <= 4096 (got " + std::to_string(c.params.L) + ")");
    if (c.method == Method::transfer_contour &&
        (c.command == Command::offdiag || c.command == Command::evolve))
        throw ConfigError("transfer-contour covers the density only; use transfer-talbot");
    if (c.method == Method::asymptotic && c.command != Command::density &&
        c.command != Command::offdiag)
        throw ConfigError("method = asymptotic is available for density and offdiag only");
    if (c.method == Method::asymptotic && c.initial != InitialPreset::delta)
        throw ConfigError("method = asymptotic needs initial = delta");
    if (c.command == Command::evolve && c.params.L > 4096)
        throw ConfigError("evolve writes full profiles via the dense matrix; needs L <= 4096");
    if (c.command == Command::beta && c.initial != InitialPreset::domain_wall)
        throw ConfigError("beta needs initial = domain-wall");
    if (c.command == Command::beta && c.params.L % 2)
        throw ConfigError("beta needs an even L");
    if (c.command == Command::compare && c.params.L > 4096)
        throw ConfigError("compare runs ED and needs L <= 4096");
    if (c.lmax > c.params.L / 2) throw ConfigError("lmax must be <= L/2");
    auto fw = split(c.fit_window, ':');
    if (fw.size() != 2 || !(to_double("fit-window", fw[1]) > to_double("fit-window", fw[0])))
        throw ConfigError("fit-window: expected a:b with b > a (in units of gamma t)");
    if (c.command != Command::bench && c.command != Command::resolvent_dump) c.times.values(c.params.gamma);
    if (!c.plot.empty() && c.plot != "fig2" && c.plot != "fig3a" && c.plot != "fig3b" &&
        c.plot != "fig4")
        throw ConfigError("plot: expected fig2 | fig3a | fig3b | fig4");
    if (c.command == Command::bench)
        for (double L : c.bench_L)
            if (L < 2 || L > 2e8) throw ConfigError("bench-L entries must lie in [2, 2e8]");
    return c;
}

DiagonalInitialState make_initial(const RunConfig& cfg) {
    const int L = cfg.params.L;
    switch (cfg.initial) {
    case InitialPreset::delta: return DiagonalInitialState::delta(L, cfg.x0);
    case InitialPreset::domain_wall: return DiagonalInitialState::domain_wall(L);
    case InitialPreset::custom_csv: {
        auto s = DiagonalInitialState::from_csv_file(cfg.initial_csv);
        if (s.L() != L)
            throw ConfigError("initial-csv has " + std::to_string(s.L()) + " rows but L = " +
                              std::to_string(L));
        return s;
    }
    }
    throw ConfigError("bad initial state");
}

std::vector<long> site_window(const RunConfig& cfg, long default_half_width) {
    const long L = cfg.params.L;
    long a = 0, b = L - 1;
    if (!cfg.sites.empty()) {
        auto parts = split(cfg.sites, ':');
        if (parts.size() != 2) throw ConfigError("sites: expected a:b");
        a = to_long("sites", parts[0]);
        b = to_long("sites", parts[1]);
        if (a < 0 || b >= L || b < a) throw ConfigError("sites: need 0 <= a <= b < L");
    } else if (L > 2 * default_half_width + 1) {
        a = L / 2 - default_half_width;
        b = L / 2 + default_half_width;
    }
    std::vector<long> xs;
    for (long x = a; x <= b; ++x) xs.push_back(x);
    return xs;
}

} // namespace xxdeph::cli
