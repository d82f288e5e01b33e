#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tripweaver/types.hpp"

namespace tripweaver {

enum class MemoryKind { activity, travel };

// Dual episodic store per agent, plus compacted long-term summaries.
// Raw records are never deleted (metrics need them); compaction only moves
// days out of retrieval scope.
struct MemoryStore {
    std::vector<ActivityRecord> activity;
    std::vector<TravelRecord> travel;
    std::vector<LongTermSummary> long_term;  // disjoint contiguous ranges

    // Last day folded into a long-term summary, 0 when none.
    int compacted_through() const;
};

// Records must arrive in day order (non-decreasing). Throws ConfigError.
void append_record(MemoryStore& store, ActivityRecord record);
void append_record(MemoryStore& store, TravelRecord record);

struct Retrieval {
    std::vector<LongTermSummary> summaries;  // ascending range
    std::vector<ActivityRecord> activity;    // newest first
    std::vector<TravelRecord> travel;        // newest first
};

// Recency-window retrieval: detailed records with
// day in [as_of_day - window_days, as_of_day - 1] that are not already
// compacted, newest first, truncated to max_items; long-term summaries of
// earlier days ride along verbatim.
Retrieval retrieve(const MemoryStore& store, MemoryKind kind, int as_of_day, int window_days,
                   int max_items);

using Summarizer = std::function<std::string(
    std::span<const ActivityRecord>, std::span<const TravelRecord>, int from_day, int through_day)>;

// Fold all records with day <= through_day into one long-term summary
// produced by the summarizer. No-op when nothing new would be covered.
void compact(MemoryStore& store, int through_day, const Summarizer& summarizer);

// Deterministic fallback summarizer: per-purpose trip counts and mean travel
// times plus activity-day counts for the covered range.
std::string template_rollup(std::span<const ActivityRecord> activity,
                            std::span<const TravelRecord> travel, int from_day, int through_day);

// Fixed rendering template shared by prompts and logs:
// "Day 3: dad traveled 1→3 for work via links [1,3], departed 420,
//  expected 480, arrived 494 (late by 14 min)."
std::string render_travel_record(const TravelRecord& record);

// "Day 3: grocery shopping (maintenance) by mom at zone 4 from 960 for 60 min."
std::string render_activity_text(int day, const Activity& activity);

}  // namespace tripweaver
