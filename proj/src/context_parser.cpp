#include "tiser/context_parser.hpp"

#include <cctype>
#include <nlohmann/json.hpp>
#include <optional>

#include "tiser/text.hpp"

namespace tiser {

namespace {

// --- low-level scanning --------------------------------------------------

// Splits on '.' outside parentheses; drops empty pieces and bare 1-3 digit
// enumerators left over from numbered lists ("1.", "2.").
std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    auto flush = [&] {
        std::string t = trim(cur);
        cur.clear();
        if (t.empty()) return;
        if (t.size() <= 3 &&
            std::all_of(t.begin(), t.end(),
                        [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            return;
        out.push_back(std::move(t));
    };
    for (char c : text) {
        if (c == '(') ++depth;
        if (c == ')') depth = depth > 0 ? depth - 1 : 0;
        if (c == '.' && depth == 0) {
            flush();
        } else {
            cur.push_back(c);
        }
    }
    flush();
    return out;
}

// Raw segments: JSON list items (the TGQA bracketed form) or sentences.
std::vector<std::string> raw_segments(std::string_view text) {
    std::string t = trim(text);
    if (!t.empty() && t.front() == '[') {
        auto j = nlohmann::json::parse(t, nullptr, /*allow_exceptions=*/false);
        if (j.is_array()) {
            std::vector<std::string> out;
            bool all_strings = true;
            for (const auto& item : j) {
                if (!item.is_string()) {
                    all_strings = false;
                    break;
                }
                for (auto& piece : split_sentences(item.get<std::string>()))
                    out.push_back(std::move(piece));
            }
            if (all_strings) return out;
        }
    }
    return split_sentences(t);
}

// First balanced parenthesized group at or after `from`; returns the inner
// text and the index one past the closing ')'.
std::optional<std::pair<std::string, size_t>> balanced_group(std::string_view s, size_t from) {
    size_t open = s.find('(', from);
    if (open == std::string_view::npos) return std::nullopt;
    int depth = 0;
    for (size_t i = open; i < s.size(); ++i) {
        if (s[i] == '(') ++depth;
        if (s[i] == ')') {
            --depth;
            if (depth == 0) return {{std::string(s.substr(open + 1, i - open - 1)), i + 1}};
        }
    }
    return std::nullopt;
}

// --- per-grammar clause matchers ------------------------------------------

struct TgqaClause {
    std::vector<std::string> statements;  // >1 for "(A) and (B) start at Y"
    bool is_start = true;
    TimePoint at;
};

std::optional<TgqaClause> match_tgqa(std::string_view clause) {
    std::string c = trim(clause);
    if (c.empty() || c.front() != '(') return std::nullopt;
    TgqaClause result;
    size_t pos = 0;
    while (true) {
        auto group = balanced_group(c, pos);
        if (!group) return std::nullopt;
        std::string stmt = trim(group->first);
        if (stmt.empty()) return std::nullopt;
        result.statements.push_back(std::move(stmt));
        pos = group->second;
        while (pos < c.size() && std::isspace(static_cast<unsigned char>(c[pos]))) ++pos;
        if (starts_with_ci(std::string_view(c).substr(pos), "and ")) {
            pos += 4;
            while (pos < c.size() && std::isspace(static_cast<unsigned char>(c[pos]))) ++pos;
            if (pos < c.size() && c[pos] == '(') continue;
            return std::nullopt;
        }
        break;
    }
    std::string rest = trim(c.substr(pos));
    bool is_start;
    if (starts_with_ci(rest, "starts at ")) {
        is_start = true;
        rest = rest.substr(10);
    } else if (starts_with_ci(rest, "ends at ")) {
        is_start = false;
        rest = rest.substr(8);
    } else if (starts_with_ci(rest, "start at ")) {
        is_start = true;
        rest = rest.substr(9);
    } else if (starts_with_ci(rest, "end at ")) {
        is_start = false;
        rest = rest.substr(7);
    } else {
        return std::nullopt;
    }
    auto tp = parse_time_expr(trim(rest));
    if (!tp) return std::nullopt;
    result.is_start = is_start;
    result.at = *tp;
    return result;
}

struct IntervalClause {
    int start_year = 0;
    int end_year = 0;
    std::string rest;
};

std::optional<IntervalClause> match_interval(std::string_view clause) {
    std::string c = trim(clause);
    size_t i = 0;
    auto read_year = [&]() -> std::optional<int> {
        size_t j = i;
        while (j < c.size() && std::isdigit(static_cast<unsigned char>(c[j]))) ++j;
        if (j - i < 3 || j - i > 4) return std::nullopt;
        int y = std::stoi(c.substr(i, j - i));
        i = j;
        return y;
    };
    auto skip_ws = [&] {
        while (i < c.size() && std::isspace(static_cast<unsigned char>(c[i]))) ++i;
    };
    auto y1 = read_year();
    if (!y1) return std::nullopt;
    skip_ws();
    if (i >= c.size() || c[i] != '-') return std::nullopt;
    ++i;
    skip_ws();
    auto y2 = read_year();
    if (!y2) return std::nullopt;
    skip_ws();
    if (i >= c.size() || c[i] != ':') return std::nullopt;
    ++i;
    std::string rest = trim(c.substr(i));
    if (rest.empty()) return std::nullopt;
    return IntervalClause{*y1, *y2, std::move(rest)};
}

// "<subject>'s <relation> is ( <object> )", with a paren-less fallback.
void extract_interval_sro(const std::string& rest, TemporalFact& fact) {
    size_t poss = rest.find("'s ");
    size_t is_pos = rest.find(" is ");
    if (poss == std::string::npos || is_pos == std::string::npos || is_pos < poss) {
        fact.statement = rest;
        return;
    }
    std::string subject = trim(rest.substr(0, poss));
    std::string relation = trim(rest.substr(poss + 3, is_pos - poss - 3));
    std::string object = trim(rest.substr(is_pos + 4));
    if (!object.empty() && object.front() == '(') {
        auto group = balanced_group(object, 0);
        if (group && trim(object.substr(group->second)).empty()) {
            object = trim(group->first);
        } else {
            fact.statement = rest;
            return;
        }
    }
    if (subject.empty() || relation.empty() || object.empty()) {
        fact.statement = rest;
        return;
    }
    fact.subject = subject;
    fact.relation = relation;
    fact.object = object;
    fact.statement = subject + "'s " + relation + " is ( " + object + " )";
}

struct TotClause {
    std::string subject, relation, object;
    int start_year = 0, end_year = 0;
};

std::optional<TotClause> match_tot(std::string_view clause) {
    std::string c = trim(clause);
    // Tolerate a preamble like "Here is a set of temporal facts:".
    size_t colon = c.rfind(':');
    if (colon != std::string::npos) c = trim(c.substr(colon + 1));

    auto read_token = [&](size_t& i, char prefix) -> std::optional<std::string> {
        while (i < c.size() && std::isspace(static_cast<unsigned char>(c[i]))) ++i;
        if (i >= c.size() || c[i] != prefix) return std::nullopt;
        size_t j = i + 1;
        while (j < c.size() && std::isdigit(static_cast<unsigned char>(c[j]))) ++j;
        if (j == i + 1) return std::nullopt;
        std::string tok = c.substr(i, j - i);
        i = j;
        return tok;
    };
    auto expect = [&](size_t& i, std::string_view word) {
        while (i < c.size() && std::isspace(static_cast<unsigned char>(c[i]))) ++i;
        if (!starts_with_ci(std::string_view(c).substr(i), word)) return false;
        i += word.size();
        return true;
    };
    auto read_year = [&](size_t& i) -> std::optional<int> {
        while (i < c.size() && std::isspace(static_cast<unsigned char>(c[i]))) ++i;
        size_t j = i;
        while (j < c.size() && std::isdigit(static_cast<unsigned char>(c[j]))) ++j;
        if (j - i < 3 || j - i > 4) return std::nullopt;
        int y = std::stoi(c.substr(i, j - i));
        i = j;
        return y;
    };

    size_t i = 0;
    TotClause out;
    auto subj = read_token(i, 'E');
    if (!subj || !expect(i, "was the")) return std::nullopt;
    auto rel = read_token(i, 'R');
    if (!rel || !expect(i, "of")) return std::nullopt;
    auto obj = read_token(i, 'E');
    if (!obj || !expect(i, "from")) return std::nullopt;
    auto y1 = read_year(i);
    if (!y1 || !expect(i, "to")) return std::nullopt;
    auto y2 = read_year(i);
    if (!y2) return std::nullopt;
    if (!trim(c.substr(i)).empty()) return std::nullopt;
    out.subject = *subj;
    out.relation = *rel;
    out.object = *obj;
    out.start_year = *y1;
    out.end_year = *y2;
    return out;
}

ContextFormat detect_from_segments(const std::vector<std::string>& segments) {
    int tgqa = 0, interval = 0, tot = 0;
    for (const auto& seg : segments) {
        if (match_tgqa(seg)) ++tgqa;
        else if (match_interval(seg)) ++interval;
        else if (match_tot(seg)) ++tot;
    }
    int best = std::max({tgqa, interval, tot});
    if (best == 0) return ContextFormat::unknown;
    if (tgqa == best) return ContextFormat::tgqa_tuple;
    if (interval == best) return ContextFormat::interval_colon;
    return ContextFormat::tot_symbolic;
}

// Groups prose sentences so that each clause ends at a year-bearing
// sentence; year-less tails attach to the preceding clause.
std::vector<std::string> group_prose(const std::vector<std::string>& segments) {
    std::vector<std::string> clauses;
    std::string cur;
    auto append = [](std::string& dst, const std::string& piece) {
        if (!dst.empty()) dst += ". ";
        dst += piece;
    };
    for (const auto& seg : segments) {
        append(cur, seg);
        if (!scan_years(seg).empty()) {
            clauses.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        if (!clauses.empty()) {
            clauses.back() += ". " + cur;
        } else {
            clauses.push_back(std::move(cur));
        }
    }
    return clauses;
}

}  // namespace

ContextFormat detect_format(std::string_view context) {
    return detect_from_segments(raw_segments(context));
}

std::vector<std::string> split_clauses(std::string_view context, ContextFormat format) {
    auto segments = raw_segments(context);
    if (format == ContextFormat::unknown) return group_prose(segments);
    if (format != ContextFormat::tgqa_tuple) return segments;

    std::vector<std::string> clauses;
    for (auto& seg : segments) {
        auto m = match_tgqa(seg);
        if (m && m->statements.size() > 1) {
            for (const auto& stmt : m->statements) {
                clauses.push_back("(" + stmt + ") " + (m->is_start ? "starts at " : "ends at ") +
                                  render_time(m->at));
            }
        } else {
            clauses.push_back(std::move(seg));
        }
    }
    return clauses;
}

std::vector<std::string> split_clauses(std::string_view context) {
    return split_clauses(context, detect_format(context));
}

ParsedContext parse_context(std::string_view context) {
    ParsedContext out;
    out.format = detect_format(context);
    auto clauses = split_clauses(context, out.format);

    for (size_t idx = 0; idx < clauses.size(); ++idx) {
        const std::string& clause = clauses[idx];
        TemporalFact fact;
        fact.source_index = static_cast<int>(idx);

        switch (out.format) {
            case ContextFormat::tgqa_tuple: {
                auto m = match_tgqa(clause);
                if (m && m->statements.size() == 1) {
                    fact.statement = m->statements[0];
                    if (m->is_start) {
                        fact.kind = FactKind::point_start;
                        fact.start = m->at;
                    } else {
                        fact.kind = FactKind::point_end;
                        fact.end = m->at;
                    }
                    out.facts.push_back(std::move(fact));
                    continue;
                }
                break;
            }
            case ContextFormat::interval_colon: {
                auto m = match_interval(clause);
                if (m && m->start_year <= m->end_year) {
                    fact.kind = FactKind::interval;
                    fact.start = TimePoint::of_year(m->start_year);
                    fact.end = TimePoint::of_year(m->end_year);
                    extract_interval_sro(m->rest, fact);
                    out.facts.push_back(std::move(fact));
                    continue;
                }
                break;
            }
            case ContextFormat::tot_symbolic: {
                auto m = match_tot(clause);
                if (m && m->start_year <= m->end_year) {
                    fact.kind = FactKind::interval;
                    fact.subject = m->subject;
                    fact.relation = m->relation;
                    fact.object = m->object;
                    fact.statement =
                        m->subject + " was the " + m->relation + " of " + m->object;
                    fact.start = TimePoint::of_year(m->start_year);
                    fact.end = TimePoint::of_year(m->end_year);
                    out.facts.push_back(std::move(fact));
                    continue;
                }
                break;
            }
            case ContextFormat::unknown: {
                auto years = scan_years(clause);
                if (!years.empty() && years[0] >= -9999 && years[0] <= 9999) {
                    fact.statement = clause;
                    fact.kind = FactKind::point_start;
                    fact.start = TimePoint::of_year(years[0]);
                    out.facts.push_back(std::move(fact));
                    continue;
                }
                break;
            }
        }
        out.residual.push_back(clause);
    }
    return out;
}

std::string render_context(const ParsedContext& parsed) {
    if (!parsed.residual.empty()) throw HasResidualError(parsed.residual.size());
    std::string out;
    for (const auto& f : parsed.facts) {
        if (!out.empty()) out += ". ";
        switch (parsed.format) {
            case ContextFormat::tgqa_tuple:
                out += "(" + f.statement + ") ";
                if (f.kind == FactKind::point_end) {
                    out += "ends at " + render_time(*f.end);
                } else {
                    out += "starts at " + render_time(*f.start);
                }
                break;
            case ContextFormat::interval_colon:
                out += std::to_string(f.start->year) + " - " + std::to_string(f.end->year) +
                       " : " + f.statement;
                break;
            case ContextFormat::tot_symbolic:
                out += f.statement + " from " + std::to_string(f.start->year) + " to " +
                       std::to_string(f.end->year);
                break;
            case ContextFormat::unknown:
                out += f.statement;
                break;
        }
    }
    return out;
}

Timeline timeline_from_context(std::string_view context) {
    auto parsed = parse_context(context);
    return build_timeline(parsed.facts);
}

const char* to_string(ContextFormat f) {
    switch (f) {
        case ContextFormat::tgqa_tuple: return "tgqa_tuple";
        case ContextFormat::interval_colon: return "interval_colon";
        case ContextFormat::tot_symbolic: return "tot_symbolic";
        case ContextFormat::unknown: return "unknown";
    }
    return "?";
}

}  // namespace tiser
