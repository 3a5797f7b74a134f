#pragma once

#include "xxdeph/ed_oracle.hpp"
#include "xxdeph/laplace.hpp"
#include "xxdeph/model.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace xxdeph::cli {

enum class Command { evolve, density, offdiag, beta, compare, resolvent_dump, bench };
enum class Method { ed, transfer_talbot, transfer_contour, asymptotic };
enum class InitialPreset { delta, domain_wall, custom_csv };

// "1,2,5" | "lin:a:b:n" | "log:a:b:n" | "logd:a:b:k" (k points per decade).
// A "g" suffix on the scheme (e.g. "logg:...") reads the bounds as gamma t.
struct TimeGrid {
    std::string spec;
    std::vector<double> values(double gamma) const;
};

using KeyValues = std::map<std::string, std::string>;

struct RunConfig {
    Command command = Command::density;
    ChainParams params{64, 1.0, 0.5};
    InitialPreset initial = InitialPreset::delta;
    std::string initial_csv;
    int x0 = 0;
    TimeGrid times{"1"};
    Method method = Method::transfer_talbot;
    int nq = 0;
    int lmax = 4;
    std::string output = "xxdeph";
    int threads = 1; // 0 = auto
    std::string sites;  // "a:b" inclusive window; empty = all sites (capped, see cli)
    int talbot_M = 24;
    bool checked = false;
    Boundary boundary = Boundary::twisted;
    int smooth = 0;
    std::string plot;   // figure name for the plot script, empty = none
    std::string fit_window = "3:20"; // gamma t window for power-law fits
    std::vector<double> bench_L{1e4, 1e5, 1e6};
    int bench_ed_max = 0; // > 0: also time ED up to this L
    std::vector<double> q{1.0};         // resolvent-dump: "q1,q2,..."
    std::vector<cplx> s{{1.0, 0.0}};    // resolvent-dump: "re[,im];re[,im];.."
    std::string preset;
    KeyValues raw; // effective key/value set, for the manifest
};

// Flat "key = value" lines; '#' starts a comment.
KeyValues parse_key_values(std::istream& in);
KeyValues parse_key_values_file(const std::string& path);

// Scenario presets reproducing the figure workflows.
KeyValues preset_values(const std::string& name);
const std::vector<std::string>& known_keys();

// Builds and validates; throws ConfigError with an actionable message.
RunConfig build_config(const std::string& command, const KeyValues& kv);

std::string to_string(Command c);
std::string to_string(Method m);
DiagonalInitialState make_initial(const RunConfig& cfg);
std::vector<long> site_window(const RunConfig& cfg, long default_half_width);

} // namespace xxdeph::cli
