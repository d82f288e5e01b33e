#include <sstream>

#include "tripweaver/cores.hpp"
#include "tripweaver/traffic.hpp"

namespace tripweaver {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

}  // namespace

std::uint64_t derive_rng_seed(std::uint64_t run_seed, int agent_id, int day) {
    const std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
    std::uint64_t x = run_seed + golden * static_cast<std::uint64_t>(agent_id + 1);
    x = mix64(x);
    x += golden * static_cast<std::uint64_t>(day + 1);
    return mix64(x);
}

double uniform01(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    const std::uint64_t z = mix64(state);
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

std::string network_brief(const Network& network) {
    std::ostringstream os;
    os << "Zones: ";
    for (size_t i = 0; i < network.zones.size(); ++i) {
        const Zone& z = network.zones[i];
        if (i) os << "; ";
        os << z.id << " = " << z.label << " (" << to_string(z.kind) << ")";
    }
    os << ".\nRoutes (as link lists with free-flow driving times):\n";
    for (const Zone& origin : network.zones) {
        for (const Zone& dest : network.zones) {
            if (origin.id == dest.id) continue;
            auto routes = enumerate_routes(network, origin.id, dest.id, 4);
            if (routes.empty()) continue;
            os << "  " << origin.id << "→" << dest.id << ": ";
            const size_t shown = std::min<size_t>(routes.size(), 3);
            for (size_t r = 0; r < shown; ++r) {
                if (r) os << ", ";
                os << "[";
                for (size_t k = 0; k < routes[r].size(); ++k) {
                    if (k) os << ",";
                    os << routes[r][k];
                }
                os << "] (" << format_minutes(free_flow_time(network, routes[r])) << " min)";
            }
            os << "\n";
        }
    }
    return os.str();
}

}  // namespace tripweaver
