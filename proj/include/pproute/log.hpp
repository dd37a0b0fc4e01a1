#pragma once

#include <cstdio>
#include <string>

// stderr logger controlled by PPROUTE_LOG: off (default) | info | trace.
namespace pproute::log {

enum class Level { off = 0, info = 1, trace = 2 };

Level level();          // parsed once from the environment
void set_level(Level l);

void write(Level lv, const std::string &msg);

inline void info(const std::string &msg) { write(Level::info, msg); }
inline void trace(const std::string &msg) { write(Level::trace, msg); }

} // namespace pproute::log
