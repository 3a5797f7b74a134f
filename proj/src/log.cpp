#include "xxdeph/log.hpp"

#include <iostream>
#include <mutex>

namespace xxdeph {

namespace {
std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}
WarningHandler& handler() {
    static WarningHandler h = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
    return h;
}
} // namespace

WarningHandler set_warning_handler(WarningHandler h) {
    std::lock_guard<std::mutex> lk(log_mutex());
    auto old = std::move(handler());
    handler() = std::move(h);
    return old;
}

void warn(const std::string& msg) {
    std::lock_guard<std::mutex> lk(log_mutex());
    if (handler()) handler()(msg);
}

} // namespace xxdeph
