#include "plot.hpp"

#include "xxdeph/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace xxdeph::cli {

namespace {

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

int column_of(const std::vector<std::string>& header, const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    return static_cast<int>(it - header.begin()) + 1; // gnuplot columns are 1-based
}

} // namespace

Figure parse_figure(const std::string& name) {
    if (name == "fig2") return Figure::fig2;
    if (name == "fig3a") return Figure::fig3a;
    if (name == "fig3b") return Figure::fig3b;
    if (name == "fig4") return Figure::fig4;
    throw ConfigError("unknown figure \"" + name + "\" (fig2, fig3a, fig3b, fig4)");
}

std::vector<std::string> expected_columns(Figure f) {
    switch (f) {
    case Figure::fig2: return {"t", "x", "value_re"};
    case Figure::fig3a: return {"t", "M"};
    case Figure::fig3b: return {"t", "beta"};
    case Figure::fig4: return {"t", "l", "max_abs"};
    }
    return {};
}

std::vector<std::string> read_csv_header(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open data file " + path);
    std::string line;
    if (!std::getline(f, line)) throw ConfigError("data file " + path + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    return cols;
}

void emit_plot_script(const std::vector<std::string>& data, Figure fig, const std::string& out) {
    if (data.empty()) throw ConfigError("plot script needs at least one data file");
    const auto need = expected_columns(fig);
    std::vector<std::vector<std::string>> headers;
    for (const auto& d : data) {
        auto h = read_csv_header(d);
        for (const auto& c : need)
            if (std::find(h.begin(), h.end(), c) == h.end())
                throw ConfigError("data file " + d + " does not match the figure schema: expected columns " +
                                  join(need) + ", found " + join(h));
        headers.push_back(std::move(h));
    }

    std::ostringstream g;
    g << "# gnuplot script\nset datafile separator ','\nset key top right\n";
    auto name = [](const std::string& p) { return std::filesystem::path(p).filename().string(); };
    const auto& h = headers.front();
    const int ct = column_of(h, "t");
    switch (fig) {
    case Figure::fig2: {
        const int cx = column_of(h, "x"), cm = column_of(h, "value_re");
        g << "set xlabel 'x - L/2'\nset ylabel '<sigma_3^x>'\nset yrange [-1.05:1.05]\n"
          << "stats '" << name(data[0]) << "' using " << cx << " nooutput\n"
          << "xc = floor((STATS_min + STATS_max) / 2.0) + 1\n"
          << "times = system(\"tail -n +2 '" << name(data[0]) << "' | cut -d, -f" << ct
          << " | uniq\")\n"
          << "plot for [tt in times] '" << name(data[0]) << "' using ($" << ct
          << " == real(tt) ? $" << cx << " - xc : NaN):(-$" << cm << ") with lines title 't = '.tt\n";
        break;
    }
    case Figure::fig3a: {
        const int cM = column_of(h, "M");
        g << "set logscale xy\nset xlabel 'gamma t'\nset ylabel 'M(t)'\n"
          << "if (!exists('gamma')) gamma = 0.01\n"
          << "plot '" << name(data[0]) << "' using ($" << ct << "*gamma):" << cM
          << " with linespoints title 'M(t)'\n";
        break;
    }
    case Figure::fig3b: {
        const int cb = column_of(h, "beta");
        g << "set logscale x\nset xlabel 'gamma t'\nset ylabel 'beta(t)'\nset yrange [0:1.2]\n"
          << "if (!exists('gamma')) gamma = 0.01\n"
          << "plot '" << name(data[0]) << "' using ($" << ct << "*gamma):" << cb
          << " with lines title 'beta', 1 dt 2 title 'ballistic', 0.5 dt 3 title 'diffusive'\n";
        break;
    }
    case Figure::fig4: {
        const int cl = column_of(h, "l"), ca = column_of(h, "max_abs");
        g << "set logscale xy\nset xlabel 'gamma t'\nset ylabel 'max_x |C_{x+l,x}|'\n"
          << "if (!exists('gamma')) gamma = 0.5\n"
          << "plot for [l=1:4] '" << name(data[0]) << "' using ($" << cl << " == l ? $" << ct
          << "*gamma : NaN):" << ca << " with lines title sprintf('l = %d', l), \\\n"
          << "     0.05*x**-1.5 dt 2 title 'slope -1.5', 0.01*x**-2.5 dt 3 title 'slope -2.5'\n";
        break;
    }
    }

    // write to a temporary name first so that a failed run leaves no partial script
    const std::string tmp = out + ".tmp";
    {
        std::ofstream f(tmp);
        if (!f) throw ConfigError("cannot write plot script " + out);
        f << g.str();
        if (!f) throw ConfigError("failed writing plot script " + out);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, out, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw ConfigError("cannot move plot script into place: " + ec.message());
    }
}

} // namespace xxdeph::cli
