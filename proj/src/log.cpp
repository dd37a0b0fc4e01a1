#include "pproute/log.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace pproute::log {

namespace {

Level parse_env() {
    const char *v = std::getenv("PPROUTE_LOG");
    if (!v || !*v || std::strcmp(v, "off") == 0)
        return Level::off;
    if (std::strcmp(v, "info") == 0)
        return Level::info;
    if (std::strcmp(v, "trace") == 0)
        return Level::trace;
    std::fprintf(stderr, "[pproute] unknown PPROUTE_LOG=%s, using off\n", v);
    return Level::off;
}

std::atomic<Level> g_level{parse_env()};
std::mutex g_mu;

} // namespace

Level level() { return g_level.load(std::memory_order_relaxed); }
void set_level(Level l) { g_level.store(l, std::memory_order_relaxed); }

void write(Level lv, const std::string &msg) {
    if (int(lv) > int(level()))
        return;
    std::lock_guard<std::mutex> lk(g_mu);
    std::fprintf(stderr, "[pproute] %s\n", msg.c_str());
}

} // namespace pproute::log
