#pragma once

#include <cstdint>
#include <string_view>

#include "pslab/exponent.hpp"
#include "pslab/int128.hpp"

namespace pslab {

enum class LogLevel { debug, info, warn, error, off };

// Process-wide log threshold; the default is warn so library users see nothing
// unless they opt in.
void set_log_level(LogLevel level);
LogLevel parse_log_level(std::string_view text);

void log_info(std::string_view msg);
void log_warn(std::string_view msg);

// Numerically interesting events, emitted at info level.
void log_escalation(std::string_view what, i128 arg, const Exponent& c, int bits);
void log_indeterminate(std::string_view what, i128 arg, const Exponent& c, int bits);
void log_uncertain(i128 p, i128 n, const Exponent& c, int bits);

// Running totals of the events above, whatever the log level.
struct EventCounts {
    std::uint64_t escalations = 0;
    std::uint64_t indeterminate = 0;
    std::uint64_t uncertain = 0;
};
EventCounts event_counts();
void reset_event_counts();

} // namespace pslab
