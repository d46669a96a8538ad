#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiser/temporal_fact.hpp"

namespace tiser {

enum class Boundary { start, end };

struct TimelineEvent {
    std::string label;
    TimePoint at;
    Boundary boundary = Boundary::start;
    int fact_ref = 0;
    // True when the event comes from an interval fact, i.e. its counterpart
    // boundary is supposed to exist in the same timeline.
    bool closed = false;

    bool operator==(const TimelineEvent&) const = default;
};

// Ordered sequence of boundary events; the explicit temporal structure a
// reasoning trace is checked against.
struct Timeline {
    std::vector<TimelineEvent> events;

    bool operator==(const Timeline&) const = default;
};

enum class ViolationCode { unordered, end_before_start, dangling_end, duplicate_event };

struct Violation {
    ViolationCode code;
    std::string detail;
};

struct ConsistencyReport {
    bool consistent = true;
    std::vector<Violation> violations;
};

struct EmptyContextError : std::runtime_error {
    EmptyContextError() : std::runtime_error("cannot build a timeline from zero facts") {}
};

// One event per fact boundary: point facts yield one event, interval facts
// two. Stable sort by time, ties broken by source_index then boundary
// (start before end).
Timeline build_timeline(std::span<const TemporalFact> facts);

// consistent=true iff events are non-decreasing in time, no end precedes its
// matching start (same fact for intervals, same label for start/end point
// pairs), no closed-interval end lacks a start, and no two events share
// (label, at, boundary). Lone point-end events without a matching start are
// legal (open on the left), mirroring open intervals.
ConsistencyReport check_consistency(const Timeline& timeline);

const char* to_string(ViolationCode code);
const char* to_string(Boundary b);

}  // namespace tiser
