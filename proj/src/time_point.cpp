#include "tiser/time_point.hpp"

#include <array>
#include <cctype>

#include "tiser/text.hpp"

namespace tiser {

namespace {

constexpr std::array<std::string_view, 12> kMonthNames = {
    "january", "february", "march",     "april",   "may",      "june",
    "july",    "august",   "september", "october", "november", "december"};

int compare_int(int a, int b) { return a < b ? -1 : (a > b ? 1 : 0); }

}  // namespace

TimeOrdering compare_timepoints(const TimePoint& a, const TimePoint& b, CompareMode mode) {
    if (int c = compare_int(a.year, b.year))
        return c < 0 ? TimeOrdering::before : TimeOrdering::after;

    bool both_month = a.month && b.month;
    if (both_month) {
        if (int c = compare_int(*a.month, *b.month))
            return c < 0 ? TimeOrdering::before : TimeOrdering::after;
        bool both_day = a.day && b.day;
        if (both_day) {
            if (int c = compare_int(*a.day, *b.day))
                return c < 0 ? TimeOrdering::before : TimeOrdering::after;
            return TimeOrdering::equal;
        }
        if (a.day || b.day)
            return mode == CompareMode::coarse ? TimeOrdering::equal : TimeOrdering::incomparable;
        return TimeOrdering::equal;
    }
    if (a.month || b.month)
        return mode == CompareMode::coarse ? TimeOrdering::equal : TimeOrdering::incomparable;
    return TimeOrdering::equal;
}

std::optional<TimePoint> make_time_point(int year, std::optional<int> month,
                                         std::optional<int> day) {
    if (year < -9999 || year > 9999) return std::nullopt;
    if (day && !month) return std::nullopt;
    if (month && (*month < 1 || *month > 12)) return std::nullopt;
    if (day && (*day < 1 || *day > 31)) return std::nullopt;
    return TimePoint{year, month, day};
}

std::optional<int> parse_month_name(std::string_view word) {
    std::string w = to_lower(trim(word));
    if (w.size() < 3) return std::nullopt;
    for (size_t m = 0; m < kMonthNames.size(); ++m) {
        if (w == kMonthNames[m] || (w.size() == 3 && kMonthNames[m].substr(0, 3) == w))
            return static_cast<int>(m + 1);
    }
    return std::nullopt;
}

std::optional<TimePoint> parse_time_expr(std::string_view text) {
    std::string cleaned;
    for (char c : text) cleaned.push_back(c == ',' ? ' ' : c);
    auto toks = whitespace_tokens(cleaned);
    if (toks.empty() || toks.size() > 2) return std::nullopt;

    auto parse_year = [](const std::string& t) -> std::optional<int> {
        if (t.empty() || t.size() > 5) return std::nullopt;
        size_t i = t[0] == '-' ? 1 : 0;
        if (i == t.size()) return std::nullopt;
        for (size_t j = i; j < t.size(); ++j)
            if (!std::isdigit(static_cast<unsigned char>(t[j]))) return std::nullopt;
        return std::stoi(t);
    };

    if (toks.size() == 1) {
        auto y = parse_year(toks[0]);
        if (!y) return std::nullopt;
        return make_time_point(*y);
    }
    auto m = parse_month_name(toks[0]);
    auto y = parse_year(toks[1]);
    if (!m || !y) return std::nullopt;
    return make_time_point(*y, m);
}

std::string render_time(const TimePoint& tp) {
    std::string out;
    if (tp.month) {
        std::string name(kMonthNames[static_cast<size_t>(*tp.month - 1)]);
        name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
        out += name;
        out += ' ';
    }
    out += std::to_string(tp.year);
    return out;
}

}  // namespace tiser
