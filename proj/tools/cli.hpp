#pragma once

#include "config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace xxdeph::cli {

enum ExitCode { ok = 0, config_error = 2, numerical_error = 3 };

struct RunOutcome {
    int status = ok;
    std::vector<std::string> outputs; // files written, manifest last
};

// Runs one configured command; numerical errors propagate as exceptions.
RunOutcome run(const RunConfig& cfg, std::ostream& log);

// Full command line entry: parses, runs, maps exceptions to exit codes.
int main_entry(int argc, char** argv);

// Git blob hash, sha1("blob <size>\0" + content), hex.
std::string git_blob_hash(const std::string& content);
std::string file_blob_hash(const std::string& path);

// Shortest round-trip representation.
std::string fmt(double v);

} // namespace xxdeph::cli
