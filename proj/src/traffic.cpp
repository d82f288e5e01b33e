#include "tripweaver/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <set>

namespace tripweaver {

namespace {

constexpr double kEps = 1e-9;

// One moving vehicle: a trip working through its route, one link at a time.
struct Vehicle {
    int trip_index = 0;
    double entry_minute = 0.0;  // entry into the current link
    double ready_minute = 0.0;  // traversal completion on the current link
    int leg = 0;                // index into route_links
};

struct QueueOrder {
    const std::vector<PlannedTrip>* trips;
    bool operator()(const Vehicle& a, const Vehicle& b) const {
        if (a.ready_minute != b.ready_minute) return a.ready_minute < b.ready_minute;
        if (a.entry_minute != b.entry_minute) return a.entry_minute < b.entry_minute;
        return (*trips)[a.trip_index].trip_id < (*trips)[b.trip_index].trip_id;
    }
};

struct LinkRuntime {
    const Link* link = nullptr;
    double credit = 0.0;
    bool accrued_this_bin = false;
    // Vehicles traversing in free flow, ordered by (ready, entry, trip id).
    std::multiset<Vehicle, QueueOrder> traversing;
    // Vertical queue, same ordering, discharged FIFO.
    std::deque<Vehicle> ready_queue;
    std::map<long long, LinkBin> bins;

    explicit LinkRuntime(const QueueOrder& order) : traversing(order) {}
};

void validate_trip(const Network& network, const PlannedTrip& trip) {
    const std::string where = "trip " + trip.trip_id;
    if (trip.origin_zone == trip.dest_zone)
        throw ConfigError(where + ": origin equals destination");
    if (!network.has_zone(trip.origin_zone))
        throw ConfigError(where + ": unknown zone " + std::to_string(trip.origin_zone));
    if (!network.has_zone(trip.dest_zone))
        throw ConfigError(where + ": unknown zone " + std::to_string(trip.dest_zone));
    if (trip.route_links.empty()) throw ConfigError(where + ": route is empty");
    int at = trip.origin_zone;
    for (int link_id : trip.route_links) {
        const Link& l = network.link(link_id);
        if (l.origin_zone != at)
            throw ConfigError(where + ": route discontiguous at link " + std::to_string(link_id) +
                              " (starts at zone " + std::to_string(l.origin_zone) +
                              ", expected zone " + std::to_string(at) + ")");
        at = l.dest_zone;
    }
    if (at != trip.dest_zone)
        throw ConfigError(where + ": route ends at zone " + std::to_string(at) +
                          " instead of zone " + std::to_string(trip.dest_zone));
    if (trip.departure_minute < 0 || trip.departure_minute >= 1440)
        throw ConfigError(where + ": departure_minute must be within [0, 1440)");
    if (trip.expected_arrival_minute < trip.departure_minute)
        throw ConfigError(where + ": expected arrival precedes departure");
}

}  // namespace

Network build_network(std::vector<Zone> zones, std::vector<Link> links) {
    Network net;
    net.zones = std::move(zones);
    net.links = std::move(links);
    std::sort(net.zones.begin(), net.zones.end(),
              [](const Zone& a, const Zone& b) { return a.id < b.id; });
    std::sort(net.links.begin(), net.links.end(),
              [](const Link& a, const Link& b) { return a.id < b.id; });

    std::set<int> zone_ids;
    for (const auto& z : net.zones) {
        if (!zone_ids.insert(z.id).second)
            throw ConfigError("duplicate zone id " + std::to_string(z.id));
    }
    std::set<int> link_ids;
    for (const auto& l : net.links) {
        const std::string where = "link " + std::to_string(l.id);
        if (!link_ids.insert(l.id).second) throw ConfigError("duplicate link id " + std::to_string(l.id));
        if (!zone_ids.count(l.origin_zone))
            throw ConfigError(where + ": unknown zone " + std::to_string(l.origin_zone));
        if (!zone_ids.count(l.dest_zone))
            throw ConfigError(where + ": unknown zone " + std::to_string(l.dest_zone));
        if (l.origin_zone == l.dest_zone) throw ConfigError(where + ": origin equals destination");
        if (l.free_flow_minutes <= 0.0) throw ConfigError(where + ": free_flow_minutes must be positive");
        if (l.capacity_vph <= 0.0) throw ConfigError(where + ": capacity_vph must be positive");
    }
    for (const auto& z : net.zones) {
        net.outgoing[z.id];  // ensure every zone has an (possibly empty) entry
        net.incoming[z.id];
    }
    for (const auto& l : net.links) {
        net.outgoing[l.origin_zone].push_back(l.id);
        net.incoming[l.dest_zone].push_back(l.id);
    }
    return net;
}

std::vector<std::vector<int>> enumerate_routes(const Network& network, int origin_zone,
                                               int dest_zone, int max_links) {
    if (!network.has_zone(origin_zone))
        throw ConfigError("unknown zone " + std::to_string(origin_zone));
    if (!network.has_zone(dest_zone))
        throw ConfigError("unknown zone " + std::to_string(dest_zone));
    if (origin_zone == dest_zone) return {{}};

    std::vector<std::vector<int>> routes;
    std::vector<int> path;
    std::set<int> visited{origin_zone};

    // Depth-first over simple paths (no repeated zone), links in ascending id.
    std::function<void(int)> dfs = [&](int zone) {
        if (static_cast<int>(path.size()) >= max_links) return;
        auto it = network.outgoing.find(zone);
        if (it == network.outgoing.end()) return;
        for (int link_id : it->second) {
            const Link& l = network.link(link_id);
            if (visited.count(l.dest_zone)) continue;
            path.push_back(link_id);
            if (l.dest_zone == dest_zone) {
                routes.push_back(path);
            } else {
                visited.insert(l.dest_zone);
                dfs(l.dest_zone);
                visited.erase(l.dest_zone);
            }
            path.pop_back();
        }
    };
    dfs(origin_zone);

    std::stable_sort(routes.begin(), routes.end(),
                     [&](const std::vector<int>& a, const std::vector<int>& b) {
                         double ta = free_flow_time(network, a);
                         double tb = free_flow_time(network, b);
                         if (ta != tb) return ta < tb;
                         return a < b;
                     });
    return routes;
}

double free_flow_time(const Network& network, const std::vector<int>& route_links) {
    double total = 0.0;
    const Link* prev = nullptr;
    for (int link_id : route_links) {
        const Link& l = network.link(link_id);
        if (prev && prev->dest_zone != l.origin_zone)
            throw ConfigError("route discontiguous: link " + std::to_string(prev->id) +
                              " ends at zone " + std::to_string(prev->dest_zone) + " but link " +
                              std::to_string(l.id) + " starts at zone " +
                              std::to_string(l.origin_zone));
        total += l.free_flow_minutes;
        prev = &l;
    }
    return total;
}

DayLoadResult simulate_day(const Network& network, const std::vector<PlannedTrip>& trips,
                           const SimOptions& options) {
    const double step = options.time_step_minutes;
    if (step <= 0.0) throw ConfigError("time_step_minutes must be positive");

    std::set<std::string> ids;
    for (const auto& t : trips) {
        validate_trip(network, t);
        if (!ids.insert(t.trip_id).second)
            throw ConfigError("trip " + t.trip_id + ": duplicate trip id");
    }

    DayLoadResult result;
    result.outcomes.resize(trips.size());
    if (trips.empty()) return result;

    auto traveler_of = [&](const PlannedTrip& t) {
        return options.traveler_key ? options.traveler_key(t) : t.member;
    };

    // Chain each traveler's trips by planned departure; a trip may not start
    // before its predecessor has arrived.
    std::map<std::string, std::vector<int>> chains;
    for (size_t i = 0; i < trips.size(); ++i) {
        chains[traveler_of(trips[i])].push_back(static_cast<int>(i));
    }
    std::vector<int> next_in_chain(trips.size(), -1);
    std::vector<bool> is_chain_head(trips.size(), false);
    for (auto& [key, indices] : chains) {
        std::sort(indices.begin(), indices.end(), [&](int a, int b) {
            if (trips[a].departure_minute != trips[b].departure_minute)
                return trips[a].departure_minute < trips[b].departure_minute;
            return trips[a].trip_id < trips[b].trip_id;
        });
        is_chain_head[indices.front()] = true;
        for (size_t k = 0; k + 1 < indices.size(); ++k) next_in_chain[indices[k]] = indices[k + 1];
    }

    // Pending releases: (release minute, trip index). Ordered min-heap.
    using Release = std::pair<double, int>;
    auto release_after = [&](const Release& a, const Release& b) {
        if (a.first != b.first) return a.first > b.first;
        return trips[a.second].trip_id > trips[b.second].trip_id;
    };
    std::priority_queue<Release, std::vector<Release>, decltype(release_after)> releases(
        release_after);
    for (size_t i = 0; i < trips.size(); ++i) {
        if (is_chain_head[i]) releases.push({static_cast<double>(trips[i].departure_minute), static_cast<int>(i)});
    }

    QueueOrder order{&trips};
    std::map<int, LinkRuntime> links;
    for (const auto& l : network.links) {
        links.emplace(l.id, LinkRuntime(order)).first->second.link = &network.link(l.id);
    }

    int active = 0;  // vehicles on the road
    auto bin_of = [&](double minute) { return static_cast<long long>(std::floor(minute / step + kEps)); };

    auto enter_link = [&](Vehicle v, int link_id) {
        LinkRuntime& lr = links.at(link_id);
        v.ready_minute = v.entry_minute + lr.link->free_flow_minutes;
        lr.bins[bin_of(v.entry_minute)].entries += 1;
        lr.traversing.insert(v);
    };

    long long bin = bin_of(releases.top().first);
    const long long bin_limit = bin + static_cast<long long>(std::ceil(10 * 1440.0 / step));

    while (active > 0 || !releases.empty()) {
        if (bin > bin_limit) throw RunError("simulate_day: simulation horizon exceeded");
        const double bin_start = static_cast<double>(bin) * step;
        const double bin_end = bin_start + step;

        bool progress = true;
        while (progress) {
            progress = false;

            // Street new departures whose release falls inside this bin.
            while (!releases.empty() && releases.top().first < bin_end - kEps) {
                auto [release_minute, trip_index] = releases.top();
                releases.pop();
                const PlannedTrip& t = trips[trip_index];
                TripOutcome& o = result.outcomes[trip_index];
                o.trip_id = t.trip_id;
                o.actual_departure_minute = release_minute;
                o.departure_delayed = release_minute > t.departure_minute + kEps;
                Vehicle v;
                v.trip_index = trip_index;
                v.entry_minute = release_minute;
                enter_link(v, t.route_links.front());
                ++active;
                progress = true;
            }

            for (auto& [link_id, lr] : links) {
                // Traversal completions during this bin join the vertical queue.
                while (!lr.traversing.empty() &&
                       lr.traversing.begin()->ready_minute < bin_end - kEps) {
                    lr.ready_queue.push_back(*lr.traversing.begin());
                    lr.traversing.erase(lr.traversing.begin());
                    progress = true;
                }
                if (lr.ready_queue.empty()) continue;
                if (!lr.accrued_this_bin) {
                    lr.credit += lr.link->capacity_vph * step / 60.0;
                    lr.accrued_this_bin = true;
                    progress = true;
                }
                while (lr.credit >= 1.0 - kEps && !lr.ready_queue.empty()) {
                    Vehicle v = lr.ready_queue.front();
                    lr.ready_queue.pop_front();
                    lr.credit -= 1.0;
                    const double exit_minute = std::max(bin_start, v.ready_minute);
                    lr.bins[bin].exits += 1;
                    const PlannedTrip& t = trips[v.trip_index];
                    TripOutcome& o = result.outcomes[v.trip_index];
                    o.per_link_exit_minutes.push_back(exit_minute);
                    if (v.leg + 1 < static_cast<int>(t.route_links.size())) {
                        v.leg += 1;
                        v.entry_minute = exit_minute;
                        enter_link(v, t.route_links[v.leg]);
                    } else {
                        o.actual_arrival_minute = exit_minute;
                        o.travel_minutes = exit_minute - o.actual_departure_minute;
                        o.delay_vs_expected_minutes = exit_minute - t.expected_arrival_minute;
                        --active;
                        if (int next = next_in_chain[v.trip_index]; next >= 0) {
                            double planned = trips[next].departure_minute;
                            releases.push({std::max(planned, exit_minute), next});
                        }
                    }
                    progress = true;
                }
            }
        }

        // Close out the bin: record queue lengths, reset idle credit.
        for (auto& [link_id, lr] : links) {
            auto it = lr.bins.find(bin);
            if (!lr.ready_queue.empty()) {
                lr.bins[bin].queue_length = static_cast<int>(lr.ready_queue.size());
            } else {
                if (it != lr.bins.end()) it->second.queue_length = 0;
                lr.credit = 0.0;  // unused capacity is not banked
            }
            lr.accrued_this_bin = false;
        }
        ++bin;
    }

    for (auto& [link_id, lr] : links) {
        if (lr.bins.empty()) continue;
        auto& series = result.link_time_series[link_id];
        for (auto& [b, row] : lr.bins) {
            row.bin_start_minute = static_cast<double>(b) * step;
            series.push_back(row);
        }
    }
    return result;
}

}  // namespace tripweaver
