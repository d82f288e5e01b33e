#pragma once

#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "tripweaver/cores.hpp"
#include "tripweaver/llm_client.hpp"

namespace tripweaver {

struct PromptBundle {
    std::vector<ChatMessage> messages;
    std::string user_tag;  // "agent=<id>;day=<d>;stage=<name>"
};

// Renders the fixed prompt for one pipeline stage. `input` carries the
// upstream artifact the stage works on (activities for tours, tours for
// trips, draft+findings for self_correct, ...); pass nullptr json for the
// first stage. Prompts are fully deterministic functions of their inputs.
PromptBundle build_prompt(Stage stage, const DecisionContext& ctx, const nlohmann::json& input);

// The response-shape instructions appended to every stage prompt (exposed
// separately so tests can assert the contract text).
std::string stage_schema_hint(Stage stage);

std::string user_tag_for(int agent_id, int day, Stage stage);

}  // namespace tripweaver
