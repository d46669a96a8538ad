#include "tiser/solver.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <map>
#include <tuple>

#include "tiser/text.hpp"

namespace tiser {

namespace {

// Sort key of a fact's earliest boundary: (time, end-flag, source_index).
// Start boundaries win ties against end boundaries at the same time.
using RankKey = std::tuple<std::tuple<int, int, int>, int, int>;

std::optional<RankKey> earliest_key(const TemporalFact& f) {
    if (f.start) return RankKey{f.start->sort_key(), 0, f.source_index};
    if (f.end) return RankKey{f.end->sort_key(), 1, f.source_index};
    return std::nullopt;
}

bool matches_field(std::string_view query, const std::string& field,
                   const std::string& statement) {
    if (query.empty()) return true;
    if (!field.empty()) return fuzzy_contains(field, query);
    return fuzzy_contains(statement, query);
}

std::string strip_trailing_punct(std::string s) {
    while (!s.empty() && (s.back() == '?' || s.back() == '.' || s.back() == ',' ||
                          s.back() == '!' || s.back() == ';'))
        s.pop_back();
    return trim(s);
}

const std::map<std::string, int>& ordinal_words() {
    static const std::map<std::string, int> words = {
        {"first", 1}, {"second", 2}, {"third", 3}, {"fourth", 4},  {"fifth", 5},
        {"sixth", 6}, {"seventh", 7}, {"eighth", 8}, {"ninth", 9}, {"tenth", 10}};
    return words;
}

bool is_verb_token(const std::string& lower) {
    static const std::vector<std::string> verbs = {
        "play",   "played", "hold",  "held",   "have",      "had",     "take",
        "took",   "work",   "worked", "serve",  "served",    "belong",  "belonged",
        "live",   "lived",  "attend", "attended", "represent", "represented"};
    return std::find(verbs.begin(), verbs.end(), lower) != verbs.end();
}

// "(which|what) <relation> did <subject> <verb ...>" -- shared by the
// point-in-time and relative-order grammars.
struct SubjectRelation {
    std::string subject, relation;
};

std::optional<SubjectRelation> parse_subject_relation(const std::vector<std::string>& tokens) {
    if (tokens.size() < 4) return std::nullopt;
    std::string head = to_lower(tokens[0]);
    if (head != "which" && head != "what") return std::nullopt;
    size_t did = 0;
    for (size_t i = 1; i < tokens.size(); ++i) {
        if (to_lower(tokens[i]) == "did") {
            did = i;
            break;
        }
    }
    if (did == 0 || did == 1) return std::nullopt;
    SubjectRelation out;
    for (size_t i = 1; i < did; ++i) {
        if (!out.relation.empty()) out.relation += ' ';
        out.relation += tokens[i];
    }
    for (size_t i = did + 1; i < tokens.size(); ++i) {
        if (is_verb_token(to_lower(strip_trailing_punct(tokens[i])))) break;
        if (!out.subject.empty()) out.subject += ' ';
        out.subject += strip_trailing_punct(tokens[i]);
    }
    if (out.subject.empty()) return std::nullopt;
    return out;
}

// Time expression after the last " in " whose tail parses as [Month] Year.
std::optional<TimePoint> trailing_time(const std::string& question) {
    std::string lower = to_lower(question);
    size_t pos = lower.rfind(" in ");
    while (pos != std::string::npos) {
        std::string tail = strip_trailing_punct(question.substr(pos + 4));
        if (auto tp = parse_time_expr(tail)) return tp;
        pos = pos == 0 ? std::string::npos : lower.rfind(" in ", pos - 1);
    }
    return std::nullopt;
}

std::vector<std::string> paren_groups(std::string_view text) {
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : text) {
        if (c == '(') {
            ++depth;
            if (depth == 1) {
                cur.clear();
                continue;
            }
        }
        if (c == ')') {
            --depth;
            if (depth == 0) {
                out.push_back(trim(cur));
                continue;
            }
            if (depth < 0) depth = 0;
        }
        if (depth >= 1) cur.push_back(c);
    }
    return out;
}

}  // namespace

std::optional<QuestionKind> classify_question(std::string_view question) {
    if (trim(question).empty()) return std::nullopt;
    if (contains_ci(question, "in chronological order")) return QuestionKind::chronological_rank;
    if (contains_ci(question, "immediately after")) return QuestionKind::immediately_after;
    if (contains_ci(question, "happened in") && !scan_years(question).empty())
        return QuestionKind::happened_at;
    {
        std::string q(question);
        if ((contains_ci(q, "which") || contains_ci(q, "what")) && trailing_time(q))
            return QuestionKind::point_in_time;
    }
    std::string lower = to_lower(question);
    if (lower.find(" before ") != std::string::npos || lower.find(" after ") != std::string::npos)
        return QuestionKind::relative_order;
    return std::nullopt;
}

std::optional<RankQuery> parse_rank_query(std::string_view question) {
    RankQuery out;
    out.candidates = paren_groups(question);
    if (out.candidates.empty()) return std::nullopt;
    out.k = 0;
    for (const auto& tok : whitespace_tokens(question)) {
        std::string w = to_lower(strip_trailing_punct(tok));
        auto it = ordinal_words().find(w);
        if (it != ordinal_words().end()) {
            out.k = it->second;
            break;
        }
        // "2nd", "3rd", ...
        if (w.size() > 2 && std::isdigit(static_cast<unsigned char>(w[0]))) {
            std::string suffix = w.substr(w.size() - 2);
            if (suffix == "st" || suffix == "nd" || suffix == "rd" || suffix == "th") {
                out.k = std::stoi(w.substr(0, w.size() - 2));
                break;
            }
        }
    }
    if (out.k <= 0) return std::nullopt;
    return out;
}

std::optional<PointQuery> parse_point_query(std::string_view question) {
    std::string q(question);
    auto at = trailing_time(q);
    if (!at) return std::nullopt;
    PointQuery out;
    out.at = *at;
    auto tokens = whitespace_tokens(q);
    if (auto sr = parse_subject_relation(tokens)) {
        out.subject = sr->subject;
        out.relation = sr->relation;
    }
    return out;
}

std::optional<RelativeQuery> parse_relative_query(std::string_view question) {
    std::string lower = to_lower(question);
    size_t pos = lower.rfind(" after ");
    Direction dir = Direction::after;
    size_t word_len = 7;
    size_t before_pos = lower.rfind(" before ");
    if (before_pos != std::string::npos &&
        (pos == std::string::npos || before_pos > pos)) {
        pos = before_pos;
        dir = Direction::before;
        word_len = 8;
    }
    if (pos == std::string::npos) return std::nullopt;
    RelativeQuery out;
    out.direction = dir;
    out.anchor_object = strip_trailing_punct(std::string(question.substr(pos + word_len)));
    if (out.anchor_object.empty()) return std::nullopt;
    auto tokens = whitespace_tokens(question.substr(0, pos));
    if (auto sr = parse_subject_relation(tokens)) {
        out.subject = sr->subject;
        out.relation = sr->relation;
    }
    return out;
}

std::optional<ImmediateQuery> parse_immediate_query(std::string_view question) {
    std::string q(question);
    std::string lower = to_lower(q);
    size_t after = lower.find("after ");
    if (after == std::string::npos) return std::nullopt;
    size_t comma = q.find(',', after);
    if (comma == std::string::npos) return std::nullopt;
    ImmediateQuery out;
    out.anchor = trim(q.substr(after + 6, comma - after - 6));
    size_t was_the = lower.find("was the ", comma);
    if (was_the == std::string::npos) return std::nullopt;
    size_t rel_start = was_the + 8;
    size_t of_pos = lower.find(" of ", rel_start);
    if (of_pos == std::string::npos) return std::nullopt;
    out.relation = trim(q.substr(rel_start, of_pos - rel_start));
    out.object = strip_trailing_punct(q.substr(of_pos + 4));
    if (out.anchor.empty() || out.relation.empty() || out.object.empty()) return std::nullopt;
    return out;
}

SolverResult answer_chronological_rank(std::span<const TemporalFact> facts,
                                       std::span<const std::string> candidates, int k) {
    if (candidates.empty() || k < 1 || k > static_cast<int>(candidates.size()))
        return SolverResult::failure(SolverErrorCode::bad_query,
                                     "rank " + std::to_string(k) + " outside 1.." +
                                         std::to_string(candidates.size()));

    struct Ranked {
        size_t candidate;
        RankKey key;
        std::vector<int> support;
    };
    std::vector<Ranked> ranked;
    for (size_t ci = 0; ci < candidates.size(); ++ci) {
        std::optional<RankKey> best;
        std::vector<int> support;
        for (size_t fi = 0; fi < facts.size(); ++fi) {
            if (!fuzzy_contains(facts[fi].statement, candidates[ci])) continue;
            support.push_back(static_cast<int>(fi));
            auto key = earliest_key(facts[fi]);
            if (key && (!best || *key < *best)) best = key;
        }
        if (!best)
            return SolverResult::failure(SolverErrorCode::unmatched_candidate,
                                         "no fact matches candidate '" + candidates[ci] + "'");
        ranked.push_back({ci, *best, std::move(support)});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Ranked& a, const Ranked& b) { return a.key < b.key; });

    const Ranked& winner = ranked[static_cast<size_t>(k - 1)];
    SolverAnswer out;
    out.answer = candidates[winner.candidate];
    out.support = winner.support;
    out.confidence = Confidence::exact;
    return SolverResult::success(std::move(out));
}

SolverResult answer_point_in_time(std::span<const TemporalFact> facts, std::string_view subject,
                                  std::string_view relation, const TimePoint& at) {
    int best = -1;
    for (size_t i = 0; i < facts.size(); ++i) {
        const auto& f = facts[i];
        if (f.kind != FactKind::interval) continue;
        if (!matches_field(subject, f.subject, f.statement)) continue;
        if (!matches_field(relation, f.relation, f.statement)) continue;
        if (f.start->year > at.year) continue;
        if (best < 0 || f.start->year > facts[best].start->year) best = static_cast<int>(i);
    }
    if (best >= 0) {
        return SolverResult::success(
            {facts[best].display(), {best}, Confidence::exact});
    }
    // Heuristic fallback: any interval containing the year.
    for (size_t i = 0; i < facts.size(); ++i) {
        const auto& f = facts[i];
        if (f.kind != FactKind::interval) continue;
        if (f.start->year <= at.year && at.year <= f.end->year) {
            if (best < 0 || f.start->year > facts[best].start->year) best = static_cast<int>(i);
        }
    }
    if (best >= 0)
        return SolverResult::success(
            {facts[best].display(), {best}, Confidence::heuristic});
    return SolverResult::failure(SolverErrorCode::no_matching_fact,
                                 "no interval fact matches subject/relation at year " +
                                     std::to_string(at.year));
}

SolverResult answer_relative_order(std::span<const TemporalFact> facts, std::string_view subject,
                                   std::string_view relation, std::string_view anchor_object,
                                   Direction direction) {
    // Anchor: earliest matching fact for the anchor object.
    int anchor = -1;
    for (size_t i = 0; i < facts.size(); ++i) {
        const auto& f = facts[i];
        if (!fuzzy_contains(f.object.empty() ? f.statement : f.object, anchor_object)) continue;
        if (!matches_field(subject, f.subject, f.statement)) continue;
        if (!matches_field(relation, f.relation, f.statement)) continue;
        if (anchor < 0) anchor = static_cast<int>(i);
        else {
            auto a = earliest_key(facts[anchor]);
            auto b = earliest_key(f);
            if (b && (!a || *b < *a)) anchor = static_cast<int>(i);
        }
    }
    if (anchor < 0)
        return SolverResult::failure(SolverErrorCode::no_matching_fact,
                                     "no fact matches anchor '" + std::string(anchor_object) +
                                         "'");

    const auto& af = facts[anchor];
    std::optional<TimePoint> anchor_start = af.start ? af.start : af.end;
    std::optional<TimePoint> anchor_end = af.end ? af.end : af.start;

    int found = -1;
    for (size_t i = 0; i < facts.size(); ++i) {
        if (static_cast<int>(i) == anchor) continue;
        const auto& f = facts[i];
        if (!matches_field(subject, f.subject, f.statement)) continue;
        if (!matches_field(relation, f.relation, f.statement)) continue;
        if (direction == Direction::after) {
            if (!f.start || !anchor_end) continue;
            if (f.start->sort_key() < anchor_end->sort_key()) continue;
            if (found < 0 || f.start->sort_key() < facts[found].start->sort_key())
                found = static_cast<int>(i);
        } else {
            auto bound = f.end ? f.end : f.start;
            if (!bound || !anchor_start) continue;
            if (bound->sort_key() > anchor_start->sort_key()) continue;
            if (found < 0) {
                found = static_cast<int>(i);
                continue;
            }
            auto found_bound = facts[found].end ? facts[found].end : facts[found].start;
            if (bound->sort_key() > found_bound->sort_key()) found = static_cast<int>(i);
        }
    }
    if (found < 0)
        return SolverResult::failure(SolverErrorCode::no_adjacent_fact,
                                     std::string("anchor is the ") +
                                         (direction == Direction::after ? "last" : "first") +
                                         " fact for this subject and relation");
    return SolverResult::success(
        {facts[found].display(), {anchor, found}, Confidence::exact});
}

SolverResult answer_happened_at(std::span<const TemporalFact> facts, int year) {
    std::vector<int> starts, ends;
    for (size_t i = 0; i < facts.size(); ++i) {
        if (facts[i].start && facts[i].start->year == year) starts.push_back(static_cast<int>(i));
        if (facts[i].end && facts[i].end->year == year) ends.push_back(static_cast<int>(i));
    }
    if (!starts.empty()) {
        SolverAnswer out;
        out.answer = facts[starts[0]].statement;
        out.support = starts;
        out.support.insert(out.support.end(), ends.begin(), ends.end());
        out.confidence = Confidence::exact;
        return SolverResult::success(std::move(out));
    }
    if (!ends.empty()) {
        return SolverResult::success({facts[ends[0]].statement, ends, Confidence::heuristic});
    }
    return SolverResult::failure(SolverErrorCode::no_matching_fact,
                                 "no event starts or ends in " + std::to_string(year));
}

SolverResult answer_immediately_after(std::span<const TemporalFact> facts,
                                      std::string_view anchor, std::string_view relation,
                                      std::string_view object) {
    // Anchor tenures in source order, relation-matching tenures first.
    std::vector<int> anchors;
    auto collect = [&](bool require_relation) {
        for (size_t i = 0; i < facts.size(); ++i) {
            const auto& f = facts[i];
            if (!fuzzy_contains(f.subject.empty() ? f.statement : f.subject, anchor)) continue;
            if (!object.empty() && !matches_field(object, f.object, f.statement)) continue;
            if (require_relation != fuzzy_contains(f.relation, relation)) continue;
            if (!f.end) continue;
            if (std::find(anchors.begin(), anchors.end(), static_cast<int>(i)) == anchors.end())
                anchors.push_back(static_cast<int>(i));
        }
    };
    collect(true);
    collect(false);
    if (anchors.empty())
        return SolverResult::failure(SolverErrorCode::no_matching_fact,
                                     "no tenure found for anchor '" + std::string(anchor) + "'");

    auto candidate_matches = [&](const TemporalFact& f) {
        if (fuzzy_contains(f.subject.empty() ? f.statement : f.subject, anchor)) return false;
        if (!matches_field(relation, f.relation, f.statement)) return false;
        if (!matches_field(object, f.object, f.statement)) return false;
        return f.kind == FactKind::interval;
    };

    // Pass 1: successor starting exactly at a tenure end; pass 2: containing it.
    for (int pass = 0; pass < 2; ++pass) {
        for (int ai : anchors) {
            int y = facts[ai].end->year;
            for (size_t i = 0; i < facts.size(); ++i) {
                const auto& f = facts[i];
                if (!candidate_matches(f)) continue;
                bool hit = pass == 0 ? f.start->year == y
                                     : (f.start->year <= y && y <= f.end->year);
                if (hit) {
                    return SolverResult::success({f.subject.empty() ? f.statement : f.subject,
                                                  {ai, static_cast<int>(i)},
                                                  Confidence::heuristic});
                }
            }
        }
    }
    return SolverResult::failure(SolverErrorCode::no_adjacent_fact,
                                 "no successor holds the relation after the anchor's tenure");
}

SolverResult solve(std::string_view question, std::string_view context) {
    ParsedContext parsed = parse_context(context);
    const auto& facts = parsed.facts;
    if (facts.empty())
        return SolverResult::failure(SolverErrorCode::no_matching_fact,
                                     "context contains no parseable facts");

    auto kind = classify_question(question);
    if (!kind) {
        // Heuristic: nearest fact by year mention, else the first fact.
        auto years = scan_years(question);
        int best = 0;
        if (!years.empty()) {
            long best_dist = std::numeric_limits<long>::max();
            for (size_t i = 0; i < facts.size(); ++i) {
                const auto& f = facts[i];
                int fy = f.start ? f.start->year : f.end->year;
                long d = std::abs(static_cast<long>(fy) - years[0]);
                if (d < best_dist) {
                    best_dist = d;
                    best = static_cast<int>(i);
                }
            }
        }
        return SolverResult::success({facts[best].statement,
                                      {best},
                                      Confidence::heuristic});
    }

    switch (*kind) {
        case QuestionKind::chronological_rank: {
            auto q = parse_rank_query(question);
            if (!q)
                return SolverResult::failure(SolverErrorCode::bad_query,
                                             "could not extract candidates or rank");
            return answer_chronological_rank(facts, q->candidates, q->k);
        }
        case QuestionKind::point_in_time: {
            auto q = parse_point_query(question);
            if (!q)
                return SolverResult::failure(SolverErrorCode::bad_query,
                                             "could not extract a time expression");
            return answer_point_in_time(facts, q->subject, q->relation, q->at);
        }
        case QuestionKind::relative_order: {
            auto q = parse_relative_query(question);
            if (!q)
                return SolverResult::failure(SolverErrorCode::bad_query,
                                             "could not extract the anchor");
            return answer_relative_order(facts, q->subject, q->relation, q->anchor_object,
                                         q->direction);
        }
        case QuestionKind::immediately_after: {
            auto q = parse_immediate_query(question);
            if (!q)
                return SolverResult::failure(SolverErrorCode::bad_query,
                                             "could not extract anchor/relation/object");
            return answer_immediately_after(facts, q->anchor, q->relation, q->object);
        }
        case QuestionKind::happened_at: {
            auto years = scan_years(question);
            if (years.empty())
                return SolverResult::failure(SolverErrorCode::bad_query, "no year in question");
            return answer_happened_at(facts, years[0]);
        }
    }
    return SolverResult::failure(SolverErrorCode::unclassifiable, "unreachable");
}

const char* to_string(QuestionKind kind) {
    switch (kind) {
        case QuestionKind::chronological_rank: return "chronological_rank";
        case QuestionKind::point_in_time: return "point_in_time";
        case QuestionKind::relative_order: return "relative_order";
        case QuestionKind::immediately_after: return "immediately_after";
        case QuestionKind::happened_at: return "happened_at";
    }
    return "?";
}

const char* to_string(SolverErrorCode code) {
    switch (code) {
        case SolverErrorCode::unclassifiable: return "unclassifiable";
        case SolverErrorCode::unmatched_candidate: return "unmatched_candidate";
        case SolverErrorCode::no_matching_fact: return "no_matching_fact";
        case SolverErrorCode::no_adjacent_fact: return "no_adjacent_fact";
        case SolverErrorCode::bad_query: return "bad_query";
    }
    return "?";
}

const char* to_string(Confidence c) { return c == Confidence::exact ? "exact" : "heuristic"; }

}  // namespace tiser
