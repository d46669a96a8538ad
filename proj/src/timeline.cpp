#include "tiser/timeline.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

namespace tiser {

Timeline build_timeline(std::span<const TemporalFact> facts) {
    if (facts.empty()) throw EmptyContextError{};
    Timeline tl;
    for (size_t i = 0; i < facts.size(); ++i) {
        const auto& f = facts[i];
        int ref = static_cast<int>(i);
        bool closed = f.kind == FactKind::interval;
        if (f.start) tl.events.push_back({f.statement, *f.start, Boundary::start, ref, closed});
        if (f.end) tl.events.push_back({f.statement, *f.end, Boundary::end, ref, closed});
    }
    std::stable_sort(tl.events.begin(), tl.events.end(),
                     [&](const TimelineEvent& a, const TimelineEvent& b) {
                         auto ka = std::tuple(a.at.sort_key(), facts[a.fact_ref].source_index,
                                              a.boundary == Boundary::end);
                         auto kb = std::tuple(b.at.sort_key(), facts[b.fact_ref].source_index,
                                              b.boundary == Boundary::end);
                         return ka < kb;
                     });
    return tl;
}

ConsistencyReport check_consistency(const Timeline& timeline) {
    ConsistencyReport report;
    const auto& ev = timeline.events;

    for (size_t i = 1; i < ev.size(); ++i) {
        if (ev[i - 1].at.sort_key() > ev[i].at.sort_key()) {
            report.violations.push_back(
                {ViolationCode::unordered,
                 "event '" + ev[i].label + "' at position " + std::to_string(i) +
                     " is earlier in time than its predecessor '" + ev[i - 1].label + "'"});
        }
    }

    // Position of the first start event per fact_ref and per label.
    std::map<int, size_t> start_by_ref;
    std::map<std::string, size_t> start_by_label;
    for (size_t i = 0; i < ev.size(); ++i) {
        if (ev[i].boundary != Boundary::start) continue;
        start_by_ref.emplace(ev[i].fact_ref, i);
        start_by_label.emplace(ev[i].label, i);
    }

    for (size_t i = 0; i < ev.size(); ++i) {
        if (ev[i].boundary != Boundary::end) continue;
        auto by_ref = start_by_ref.find(ev[i].fact_ref);
        if (by_ref != start_by_ref.end()) {
            if (by_ref->second > i)
                report.violations.push_back({ViolationCode::end_before_start,
                                             "end of '" + ev[i].label + "' precedes its start"});
            continue;
        }
        auto by_label = start_by_label.find(ev[i].label);
        if (by_label != start_by_label.end()) {
            if (by_label->second > i)
                report.violations.push_back({ViolationCode::end_before_start,
                                             "end of '" + ev[i].label + "' precedes its start"});
            continue;
        }
        if (ev[i].closed) {
            report.violations.push_back(
                {ViolationCode::dangling_end,
                 "interval end of '" + ev[i].label + "' has no matching start"});
        }
        // Otherwise a lone end assertion: open on the left, legal.
    }

    std::set<std::tuple<std::string, std::tuple<int, int, int>, bool>> dedup;
    for (const auto& e : ev) {
        auto key = std::tuple(e.label, e.at.sort_key(), e.boundary == Boundary::end);
        if (!dedup.insert(key).second) {
            report.violations.push_back(
                {ViolationCode::duplicate_event, "duplicate event '" + e.label + "'"});
        }
    }

    report.consistent = report.violations.empty();
    return report;
}

const char* to_string(ViolationCode code) {
    switch (code) {
        case ViolationCode::unordered: return "unordered";
        case ViolationCode::end_before_start: return "end_before_start";
        case ViolationCode::dangling_end: return "dangling_end";
        case ViolationCode::duplicate_event: return "duplicate_event";
    }
    return "?";
}

const char* to_string(Boundary b) { return b == Boundary::start ? "start" : "end"; }

}  // namespace tiser
