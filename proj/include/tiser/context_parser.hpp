#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tiser/temporal_fact.hpp"
#include "tiser/timeline.hpp"

namespace tiser {

// The three benchmark grammars plus a best-effort fallback for prose.
enum class ContextFormat { tgqa_tuple, interval_colon, tot_symbolic, unknown };

struct ParsedContext {
    ContextFormat format = ContextFormat::unknown;
    std::vector<TemporalFact> facts;
    std::vector<std::string> residual;  // clauses that failed to parse, never dropped

    bool operator==(const ParsedContext&) const = default;
};

struct HasResidualError : std::runtime_error {
    explicit HasResidualError(size_t n)
        : std::runtime_error("cannot render a context with " + std::to_string(n) +
                             " residual clauses") {}
};

ContextFormat detect_format(std::string_view context);

// Splits the context into atomic clauses under the given format. Conjoined
// tgqa tuples ("(A) and (B) start at Y") expand to one clause per statement;
// prose sentences group so that each clause carries at least one four-digit
// year when any exists. |facts| + |residual| of parse_context equals the
// size of this list.
std::vector<std::string> split_clauses(std::string_view context, ContextFormat format);
std::vector<std::string> split_clauses(std::string_view context);

// Total over arbitrary text; unparseable clauses land in residual.
ParsedContext parse_context(std::string_view context);

// Canonical rendering such that parse(render(p)) == p on (format, facts).
// tgqa contexts render in the inline sentence form.
std::string render_context(const ParsedContext& parsed);

// Convenience: parse then build a timeline from the facts.
Timeline timeline_from_context(std::string_view context);

const char* to_string(ContextFormat f);

}  // namespace tiser
