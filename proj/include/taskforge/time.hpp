#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace taskforge {

// UTC instant at second precision.
using Instant = std::chrono::sys_seconds;
using Duration = std::chrono::seconds;

// Accepts `YYYY-MM-DD`, `YYYY-MM-DD HH:MM:SS` and ISO-8601
// `YYYY-MM-DDTHH:MM:SS[.fff][Z|+hh:mm|-hh:mm]`. Fractional seconds are
// truncated. Returns nullopt for anything else.
std::optional<Instant> parse_instant(std::string_view text);

// ISO-8601 with a trailing `Z`, e.g. 2015-01-08T00:00:00Z.
std::string format_instant(Instant t);

// Durations: plain seconds ("86400") or a count with a unit suffix
// s/m/h/d/w ("30m", "1d", "2w").
std::optional<Duration> parse_duration(std::string_view text);

// Human-readable form using the largest unit that divides exactly:
// "1 day", "7 days", "2 hours", "90 seconds".
std::string format_duration(Duration d);

}  // namespace taskforge
