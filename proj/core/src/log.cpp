#include "tradediff/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace tradediff {

namespace {
std::atomic<int> g_level{static_cast<int>(Verbosity::Warn)};
std::mutex g_mutex;

void emit(Verbosity level, const char* tag, const std::string& message) {
    if (static_cast<int>(level) > g_level.load()) return;
    std::lock_guard lock(g_mutex);
    std::cerr << tag << message << '\n';
}
}  // namespace

void set_verbosity(Verbosity v) { g_level.store(static_cast<int>(v)); }
Verbosity verbosity() { return static_cast<Verbosity>(g_level.load()); }

void log_warn(const std::string& message) { emit(Verbosity::Warn, "warning: ", message); }
void log_info(const std::string& message) { emit(Verbosity::Info, "", message); }
void log_debug(const std::string& message) { emit(Verbosity::Debug, "debug: ", message); }

}  // namespace tradediff
