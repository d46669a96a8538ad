#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <tuple>

namespace tiser {

enum class Granularity { year, month, day };

// A Gregorian calendar point at year, month or day granularity. Granularity
// is derived from which components are present, so the invariants (month
// present => at least month granularity, day requires month) hold by
// construction.
struct TimePoint {
    int year = 0;  // [-9999, 9999]
    std::optional<int> month;  // 1..12
    std::optional<int> day;    // 1..31

    Granularity granularity() const {
        if (day) return Granularity::day;
        if (month) return Granularity::month;
        return Granularity::year;
    }

    // Total order used for timeline sorting; missing components sort before
    // specified ones within the same year.
    std::tuple<int, int, int> sort_key() const {
        return {year, month.value_or(0), day.value_or(0)};
    }

    bool operator==(const TimePoint&) const = default;

    static TimePoint of_year(int y) { return {y, std::nullopt, std::nullopt}; }
    static TimePoint of_month(int y, int m) { return {y, m, std::nullopt}; }
    static TimePoint of_day(int y, int m, int d) { return {y, m, d}; }
};

enum class TimeOrdering { before, equal, after, incomparable };
enum class CompareMode { coarse, strict };

// Compares at the coarser of the two granularities. With equal shared
// prefixes and differing granularity, coarse mode reports equal while strict
// mode reports incomparable.
TimeOrdering compare_timepoints(const TimePoint& a, const TimePoint& b,
                                CompareMode mode = CompareMode::coarse);

// Validates component ranges; nullopt on out-of-range values.
std::optional<TimePoint> make_time_point(int year, std::optional<int> month = std::nullopt,
                                         std::optional<int> day = std::nullopt);

// Parses "1908", "May 2007", "Feb 2014", "May, 2007". Month names may be
// full or three-letter abbreviations, any case.
std::optional<TimePoint> parse_time_expr(std::string_view text);

// "1908" or "May 2007" (full month name).
std::string render_time(const TimePoint& tp);

std::optional<int> parse_month_name(std::string_view word);

}  // namespace tiser
