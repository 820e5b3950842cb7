#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace ehc {

using Timestamp = std::chrono::sys_seconds;

// Strict ISO-8601 UTC: "YYYY-MM-DDTHH:MM:SSZ". Offsets other than Z and
// fractional seconds are rejected.
std::optional<Timestamp> parse_utc_timestamp(std::string_view text);

// "YYYY-MM-DD"
std::optional<std::chrono::sys_days> parse_date(std::string_view text);

std::string format_utc_timestamp(Timestamp t);
std::string format_date(std::chrono::sys_days d);

Timestamp utc_now();

}  // namespace ehc
