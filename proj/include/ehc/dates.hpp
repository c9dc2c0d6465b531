#pragma once

#include "ehc/vital.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace ehc {

/// Field order of slash-separated dates such as "12/2/1949". Ambiguous
/// inputs are never guessed; callers must say which order they hold.
enum class DateOrder { DayMonthYear, MonthDayYear };

std::optional<DateOrder> parse_date_order(std::string_view text) noexcept;

/// True for a calendar-valid "YYYY-MM-DD".
bool is_iso_date(std::string_view text) noexcept;

/// Converts "D/M/YYYY" or "M/D/YYYY" (per `order`) to "YYYY-MM-DD"; ISO
/// input passes through after validation. Throws ValidationError.
std::string normalize_date(std::string_view text, DateOrder order);

/// "YYYY-MM-DDTHH:MM:SS.mmmZ"
std::string format_iso_timestamp(TimestampMs ms);

}  // namespace ehc
