#pragma once

#include <optional>
#include <string>

#include "tiser/time_point.hpp"

namespace tiser {

enum class FactKind { point_start, point_end, interval };

// One time-anchored assertion; the atom of every context. subject/relation/
// object are filled when the source grammar exposes them and left empty for
// statement-only facts.
struct TemporalFact {
    std::string statement;
    std::string subject;
    std::string relation;
    std::string object;
    FactKind kind = FactKind::point_start;
    std::optional<TimePoint> start;
    std::optional<TimePoint> end;
    int source_index = 0;

    bool valid() const {
        if (statement.empty()) return false;
        switch (kind) {
            case FactKind::point_start:
                return start.has_value() && !end.has_value();
            case FactKind::point_end:
                return end.has_value() && !start.has_value();
            case FactKind::interval:
                if (!start || !end) return false;
                return compare_timepoints(*start, *end) != TimeOrdering::after;
        }
        return false;
    }

    // Display name for answers: the object when the grammar extracted one,
    // otherwise the whole statement.
    const std::string& display() const { return object.empty() ? statement : object; }

    bool operator==(const TemporalFact&) const = default;
};

}  // namespace tiser
