#pragma once

#include <functional>
#include <map>
#include <vector>

#include "tripweaver/types.hpp"

namespace tripweaver {

// Aggregate flow on one link during one time bin.
struct LinkBin {
    double bin_start_minute = 0.0;
    int entries = 0;      // vehicles that started traversing during the bin
    int exits = 0;        // vehicles discharged from the ready queue
    int queue_length = 0; // ready-queue size at the end of the bin
};

struct DayLoadResult {
    std::vector<TripOutcome> outcomes;  // one per input trip, same order
    std::map<int, std::vector<LinkBin>> link_time_series;  // link id -> bins with activity
};

struct SimOptions {
    double time_step_minutes = 1.0;
    // Groups trips into per-traveler chains for the departure-shift rule.
    // Two trips with the same key belong to the same physical traveler.
    // Defaults to the trip's member role (correct for a single household).
    std::function<std::string(const PlannedTrip&)> traveler_key;
};

// Validate zones/links and derive adjacency. Throws ConfigError on dangling
// zone references, duplicate ids, or degenerate links.
Network build_network(std::vector<Zone> zones, std::vector<Link> links);

// All simple directed paths origin -> dest using at most max_links links,
// as link-id sequences ordered by (free-flow time, lexicographic link ids).
// origin == dest yields the single empty route.
std::vector<std::vector<int>> enumerate_routes(const Network& network, int origin_zone,
                                               int dest_zone, int max_links = 8);

// Sum of free-flow minutes along a route. Empty route -> 0. Throws
// ConfigError if consecutive links do not share a zone.
double free_flow_time(const Network& network, const std::vector<int>& route_links);

// Mesoscopic point-queue loading of one day's trips. Vehicles traverse each
// link in free-flow time, then wait in a vertical queue discharged at
// capacity * step / 60 vehicles per bin with fractional credit carried over
// while the queue is busy. FIFO by (traversal completion, entry minute,
// trip id). Queued discharges happen at bin starts; an uncongested vehicle
// exits exactly at its traversal-completion instant, so free-flow trips take
// exactly their free-flow time.
DayLoadResult simulate_day(const Network& network, const std::vector<PlannedTrip>& trips,
                           const SimOptions& options = {});

}  // namespace tripweaver
