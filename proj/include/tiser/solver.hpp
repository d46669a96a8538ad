#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tiser/context_parser.hpp"
#include "tiser/temporal_fact.hpp"

namespace tiser {

// The question classes the benchmark corpora ask over parsed facts.
enum class QuestionKind {
    chronological_rank,
    point_in_time,
    relative_order,
    immediately_after,
    happened_at
};

enum class Confidence { exact, heuristic };

struct SolverAnswer {
    std::string answer;
    std::vector<int> support;  // indices into the fact list
    Confidence confidence = Confidence::exact;
};

enum class SolverErrorCode {
    unclassifiable,
    unmatched_candidate,
    no_matching_fact,
    no_adjacent_fact,
    bad_query
};

struct SolverError {
    SolverErrorCode code;
    std::string detail;
};

// Totalized outcome: exactly one of answer/error is set.
struct SolverResult {
    std::optional<SolverAnswer> answer;
    std::optional<SolverError> error;

    bool ok() const { return answer.has_value(); }
    static SolverResult success(SolverAnswer a) { return {std::move(a), std::nullopt}; }
    static SolverResult failure(SolverErrorCode code, std::string detail) {
        return {std::nullopt, SolverError{code, std::move(detail)}};
    }
};

enum class Direction { before, after };

std::optional<QuestionKind> classify_question(std::string_view question);

// --- question argument extraction (exposed for tests) ----------------------

struct RankQuery {
    std::vector<std::string> candidates;
    int k = 1;
};
struct PointQuery {
    std::string subject, relation;
    TimePoint at;
};
struct RelativeQuery {
    std::string subject, relation, anchor_object;
    Direction direction = Direction::after;
};
struct ImmediateQuery {
    std::string anchor, relation, object;
};

std::optional<RankQuery> parse_rank_query(std::string_view question);
std::optional<PointQuery> parse_point_query(std::string_view question);
std::optional<RelativeQuery> parse_relative_query(std::string_view question);
std::optional<ImmediateQuery> parse_immediate_query(std::string_view question);

// --- answer operations ------------------------------------------------------

// Orders candidates by their earliest associated time point (start boundaries
// preferred over end boundaries at equal times, ties by source_index) and
// returns the k-th (1-based).
SolverResult answer_chronological_rank(std::span<const TemporalFact> facts,
                                       std::span<const std::string> candidates, int k);

// Among interval facts matching subject+relation whose start year does not
// exceed the query year, picks the latest start; falls back to any interval
// containing the year (heuristic) when nothing matches.
SolverResult answer_point_in_time(std::span<const TemporalFact> facts, std::string_view subject,
                                  std::string_view relation, const TimePoint& at);

// Nearest fact strictly after/before the anchor fact's interval for the same
// subject and relation; touching intervals count as adjacent.
SolverResult answer_relative_order(std::span<const TemporalFact> facts, std::string_view subject,
                                   std::string_view relation, std::string_view anchor_object,
                                   Direction direction);

// All start-boundary matches first; end-boundary matches only as a heuristic
// alternate (the corpora never pin this case down).
SolverResult answer_happened_at(std::span<const TemporalFact> facts, int year);

// Resolves the anchor entity's tenure end, then the holder of the queried
// relation whose interval starts at (preferred) or contains that year.
// Always heuristic.
SolverResult answer_immediately_after(std::span<const TemporalFact> facts,
                                      std::string_view anchor, std::string_view relation,
                                      std::string_view object);

// parse -> classify -> dispatch. Unclassifiable questions fall back to the
// nearest fact by year mention; sub-operation failures propagate as a
// structured failure result.
SolverResult solve(std::string_view question, std::string_view context);

const char* to_string(QuestionKind kind);
const char* to_string(SolverErrorCode code);
const char* to_string(Confidence c);

}  // namespace tiser
