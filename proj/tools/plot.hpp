#pragma once

#include <string>
#include <vector>

namespace xxdeph::cli {

enum class Figure { fig2, fig3a, fig3b, fig4 };

Figure parse_figure(const std::string& name);
std::vector<std::string> expected_columns(Figure f);
std::vector<std::string> read_csv_header(const std::string& path);

// Writes a gnuplot script for the data file(s). Every file must carry the figure's columns;
// on mismatch a ConfigError lists expected vs found and nothing is written.
void emit_plot_script(const std::vector<std::string>& data, Figure fig, const std::string& out);

} // namespace xxdeph::cli
