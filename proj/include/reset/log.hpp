#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace reset::log {

enum class Level : int { debug = 0, info = 1, warn = 2, off = 3 };

inline std::atomic<Level>& threshold() {
    static std::atomic<Level> level{Level::warn};
    return level;
}

inline void set_level(Level level) { threshold().store(level); }

inline void write(Level level, std::string_view msg) {
    if (level < threshold().load()) return;
    static std::mutex mu;
    std::lock_guard lock(mu);
    static constexpr std::string_view tags[] = {"debug", "info", "warning"};
    std::clog << "resetfdr " << tags[static_cast<int>(level)] << ": " << msg << '\n';
}

inline void warn(std::string_view msg) { write(Level::warn, msg); }
inline void info(std::string_view msg) { write(Level::info, msg); }

}  // namespace reset::log
