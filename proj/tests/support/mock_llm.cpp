#include "support/mock_llm.hpp"

#include <stdexcept>

#include "httplib.h"
#include "nlohmann/json.hpp"
#include "tripweaver/json_io.hpp"

namespace tripweaver::testing {
namespace {

using nlohmann::json;

struct Tag {
    int agent_id = 0;
    int day = 0;
    Stage stage = Stage::activities;
};

Tag parse_tag(const std::string& user) {
    Tag tag;
    bool have_agent = false, have_day = false, have_stage = false;
    std::size_t pos = 0;
    while (pos < user.size()) {
        auto end = user.find(';', pos);
        if (end == std::string::npos) end = user.size();
        const std::string part = user.substr(pos, end - pos);
        const auto eq = part.find('=');
        if (eq != std::string::npos) {
            const std::string key = part.substr(0, eq);
            const std::string value = part.substr(eq + 1);
            if (key == "agent") {
                tag.agent_id = std::stoi(value);
                have_agent = true;
            } else if (key == "day") {
                tag.day = std::stoi(value);
                have_day = true;
            } else if (key == "stage") {
                tag.stage = stage_from_string(value);
                have_stage = true;
            }
        }
        pos = end + 1;
    }
    if (!have_agent || !have_day || !have_stage) {
        throw std::invalid_argument("mock: request user tag must carry agent, day and stage");
    }
    return tag;
}

// The stage input travels inside the prompt as its only fenced json block.
json input_from_prompt(const json& messages) {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (!it->contains("content") || !(*it)["content"].is_string()) continue;
        const std::string content = (*it)["content"].get<std::string>();
        const auto open = content.find("```json");
        if (open == std::string::npos) continue;
        const auto body_start = content.find('\n', open);
        const auto close = content.find("```", body_start);
        if (body_start == std::string::npos || close == std::string::npos) continue;
        return json::parse(content.substr(body_start + 1, close - body_start - 1));
    }
    return json();
}

std::string fenced(const json& payload) {
    return "```json\n" + payload.dump(2) + "\n```";
}

std::string completion_body(const std::string& content) {
    const json reply{{"id", "mock-completion"},
                     {"object", "chat.completion"},
                     {"choices", json::array({json{{"index", 0},
                                                   {"finish_reason", "stop"},
                                                   {"message", json{{"role", "assistant"},
                                                                    {"content", content}}}}})}};
    return reply.dump();
}

json declared_to_json(const PlanDraft& draft) {
    json trips = json::array();
    for (const auto& t : draft.declared_trips) {
        json item{{"member", t.member},
                  {"purpose", t.purpose},
                  {"origin_zone", t.origin_zone},
                  {"dest_zone", t.dest_zone},
                  {"departure_minute", t.departure_minute}};
        if (t.route_links) item["route_links"] = *t.route_links;
        trips.push_back(std::move(item));
    }
    return json{{"narrative", draft.narrative}, {"trips", trips}};
}

}  // namespace

MockLlmServer::MockLlmServer(SimulationConfig config)
    : config_(std::move(config)), network_(build_network(config_.zones, config_.links)) {
    OracleTuning tuning;
    tuning.weekend_pattern = config_.weekend_pattern;
    oracle_ = make_oracle_core(network_, tuning);
    server_ = std::make_unique<httplib::Server>();
}

MockLlmServer::~MockLlmServer() { stop(); }

std::string MockLlmServer::start(int port) {
    server_->Post("/v1/chat/completions",
                  [this](const httplib::Request& req, httplib::Response& res) {
                      {
                          std::lock_guard<std::mutex> lock(mutex_);
                          if (http_errors_pending_ > 0) {
                              --http_errors_pending_;
                              res.status = 500;
                              res.set_content("{\"error\":\"injected\"}", "application/json");
                              return;
                          }
                      }
                      try {
                          res.set_content(handle(req.body), "application/json");
                      } catch (const std::exception& e) {
                          res.status = 400;
                          res.set_content(std::string("{\"error\":\"") + e.what() + "\"}",
                                          "application/json");
                      }
                  });
    if (port == 0) {
        port_ = server_->bind_to_any_port("127.0.0.1");
        if (port_ < 0) throw std::runtime_error("mock: could not bind a port");
    } else {
        if (!server_->bind_to_port("127.0.0.1", port)) {
            throw std::runtime_error("mock: could not bind port " + std::to_string(port));
        }
        port_ = port;
    }
    serve_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1";
}

void MockLlmServer::stop() {
    if (server_ && server_->is_running()) server_->stop();
    if (serve_thread_.joinable()) serve_thread_.join();
}

void MockLlmServer::inject_malformed_once(int agent_id, int day, Stage stage) {
    std::lock_guard<std::mutex> lock(mutex_);
    malformed_pending_.insert(std::to_string(agent_id) + ";" + std::to_string(day) + ";" +
                              to_string(stage));
}

void MockLlmServer::inject_drop_trip(int agent_id, int day) {
    std::lock_guard<std::mutex> lock(mutex_);
    drop_trip_.insert(std::to_string(agent_id) + ";" + std::to_string(day));
}

void MockLlmServer::inject_http_error(int count) {
    std::lock_guard<std::mutex> lock(mutex_);
    http_errors_pending_ += count;
}

int MockLlmServer::total_calls() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return static_cast<int>(tags_.size());
}

int MockLlmServer::calls_for_stage(Stage stage) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto found = stage_calls_.find(to_string(stage));
    return found == stage_calls_.end() ? 0 : found->second;
}

std::vector<std::string> MockLlmServer::seen_tags() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return tags_;
}

std::string MockLlmServer::handle(const std::string& body) {
    const json request = json::parse(body);
    const Tag tag = parse_tag(request.value("user", std::string{}));

    {
        std::lock_guard<std::mutex> lock(mutex_);
        tags_.push_back(request.value("user", std::string{}));
        ++stage_calls_[to_string(tag.stage)];
        const std::string key = std::to_string(tag.agent_id) + ";" + std::to_string(tag.day) +
                                ";" + to_string(tag.stage);
        if (malformed_pending_.erase(key) > 0) {
            return completion_body(
                "Sure! Here is my plan, described in plain words without any code block.");
        }
    }

    const HouseholdProfile* profile = nullptr;
    for (const auto& agent : config_.agents) {
        if (agent.agent_id == tag.agent_id) profile = &agent;
    }
    if (!profile) throw std::invalid_argument("mock: unknown agent in tag");

    DecisionContext ctx;
    ctx.profile = *profile;
    ctx.day = tag.day;
    ctx.network_brief = network_brief(network_);
    ctx.rng_seed = derive_rng_seed(config_.seed, tag.agent_id, tag.day);

    const json input = input_from_prompt(request.value("messages", json::array()));

    json payload;
    switch (tag.stage) {
        case Stage::activities: {
            const auto activities = oracle_->generate_activities(ctx);
            json items = json::array();
            for (const auto& act : activities) {
                items.push_back(
                    {{"name", act.name},
                     {"members", act.member_roles},
                     {"kind", to_string(act.kind)},
                     {"location_zone",
                      act.location_zone ? json(*act.location_zone) : json()},
                     {"desired_start_minute", act.desired_start_minute},
                     {"duration_minutes", act.duration_minutes}});
            }
            payload = json{{"activities", items}};
            break;
        }
        case Stage::tours: {
            const auto activities = input.at("activities").get<std::vector<Activity>>();
            const auto tours = oracle_->build_tours(activities, ctx);
            json items = json::array();
            for (const auto& tour : tours) {
                json names = json::array();
                for (const auto& act : tour.ordered_activities) names.push_back(act.name);
                items.push_back({{"members", tour.member_roles}, {"activity_names", names}});
            }
            payload = json{{"tours", items}};
            break;
        }
        case Stage::trips: {
            const auto tours = input.at("tours").get<std::vector<Tour>>();
            payload = declared_to_json(oracle_->plan_trips(tours, ctx));
            break;
        }
        case Stage::self_correct: {
            const auto draft = input.at("draft").get<PlanDraft>();
            const auto findings =
                input.at("findings").get<std::vector<ValidationFinding>>();
            payload = declared_to_json(oracle_->self_correct(draft, findings, ctx));
            break;
        }
        case Stage::format: {
            const auto draft = input.at("draft").get<PlanDraft>();
            auto trips = oracle_->format_trips(draft, ctx);
            {
                std::lock_guard<std::mutex> lock(mutex_);
                const std::string key =
                    std::to_string(tag.agent_id) + ";" + std::to_string(tag.day);
                if (drop_trip_.count(key) && !trips.empty()) trips.pop_back();
            }
            json items = json::array();
            for (const auto& t : trips) {
                items.push_back({{"member", t.member},
                                 {"purpose", t.purpose},
                                 {"origin_zone", t.origin_zone},
                                 {"dest_zone", t.dest_zone},
                                 {"departure_minute", t.departure_minute},
                                 {"route_links", t.route_links},
                                 {"expected_arrival_minute", t.expected_arrival_minute}});
            }
            payload = json{{"trips", items}};
            break;
        }
        case Stage::reflect: {
            payload = json{{"insights",
                            json::array({"Keep leaving earlier whenever yesterday's commute "
                                         "arrived late."})}};
            break;
        }
    }
    return completion_body(fenced(payload));
}

}  // namespace tripweaver::testing
