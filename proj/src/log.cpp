#include "pslab/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <string>

#include "pslab/errors.hpp"

namespace pslab {

namespace {

spdlog::logger& logger() {
    static const auto instance = [] {
        auto l = spdlog::stderr_color_mt("pslab");
        l->set_level(spdlog::level::warn);
        l->set_pattern("[%l] %v");
        return l;
    }();
    return *instance;
}

std::atomic<std::uint64_t> n_escalations{0}, n_indeterminate{0}, n_uncertain{0};

} // namespace

EventCounts event_counts() { return {n_escalations.load(), n_indeterminate.load(), n_uncertain.load()}; }

void reset_event_counts() {
    n_escalations = 0;
    n_indeterminate = 0;
    n_uncertain = 0;
}

void set_log_level(LogLevel level) {
    switch (level) {
    case LogLevel::debug: logger().set_level(spdlog::level::debug); break;
    case LogLevel::info: logger().set_level(spdlog::level::info); break;
    case LogLevel::warn: logger().set_level(spdlog::level::warn); break;
    case LogLevel::error: logger().set_level(spdlog::level::err); break;
    case LogLevel::off: logger().set_level(spdlog::level::off); break;
    }
}

LogLevel parse_log_level(std::string_view text) {
    if (text == "debug") return LogLevel::debug;
    if (text == "info") return LogLevel::info;
    if (text == "warn") return LogLevel::warn;
    if (text == "error") return LogLevel::error;
    if (text == "off") return LogLevel::off;
    throw DomainError("unknown log level '" + std::string(text) + "'");
}

void log_info(std::string_view msg) { logger().info("{}", msg); }
void log_warn(std::string_view msg) { logger().warn("{}", msg); }

void log_escalation(std::string_view what, i128 arg, const Exponent& c, int bits) {
    n_escalations.fetch_add(1, std::memory_order_relaxed);
    if (!logger().should_log(spdlog::level::info)) return;
    logger().info("precision escalation ({}) arg={} c={} from {} bits", what, to_string(arg), c.to_string(), bits);
}

void log_indeterminate(std::string_view what, i128 arg, const Exponent& c, int bits) {
    n_indeterminate.fetch_add(1, std::memory_order_relaxed);
    logger().warn("indeterminate ({}) arg={} c={} at {} bits", what, to_string(arg), c.to_string(), bits);
}

void log_uncertain(i128 p, i128 n, const Exponent& c, int bits) {
    n_uncertain.fetch_add(1, std::memory_order_relaxed);
    if (!logger().should_log(spdlog::level::info)) return;
    logger().info("uncertain window classification p={} n={} c={} at {} bits", to_string(p), to_string(n),
                  c.to_string(), bits);
}

} // namespace pslab
