#pragma once

#include <functional>
#include <string>

namespace xxdeph {

using WarningHandler = std::function<void(const std::string&)>;

// Default handler prints "warning: ..." to stderr. Returns the previous handler.
WarningHandler set_warning_handler(WarningHandler h);
void warn(const std::string& msg);

} // namespace xxdeph
