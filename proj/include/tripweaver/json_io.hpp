#pragma once

// nlohmann-json ADL hooks for the domain types, so logs and run artifacts
// serialize uniformly. Key order is alphabetical (nlohmann's std::map
// backing), which keeps emitted files byte-stable across runs.

#include <nlohmann/json.hpp>

#include "tripweaver/cores.hpp"
#include "tripweaver/memory.hpp"
#include "tripweaver/types.hpp"

namespace tripweaver {

void to_json(nlohmann::json& j, const Zone& z);
void from_json(const nlohmann::json& j, Zone& z);

void to_json(nlohmann::json& j, const Link& l);
void from_json(const nlohmann::json& j, Link& l);

void to_json(nlohmann::json& j, const MemberSchedule& m);
void from_json(const nlohmann::json& j, MemberSchedule& m);

void to_json(nlohmann::json& j, const HouseholdProfile& p);
void from_json(const nlohmann::json& j, HouseholdProfile& p);

void to_json(nlohmann::json& j, const Activity& a);
void from_json(const nlohmann::json& j, Activity& a);

void to_json(nlohmann::json& j, const Tour& t);
void from_json(const nlohmann::json& j, Tour& t);

void to_json(nlohmann::json& j, const PlannedTrip& t);
void from_json(const nlohmann::json& j, PlannedTrip& t);

void to_json(nlohmann::json& j, const TripOutcome& o);
void from_json(const nlohmann::json& j, TripOutcome& o);

void to_json(nlohmann::json& j, const ActivityRecord& r);
void from_json(const nlohmann::json& j, ActivityRecord& r);

void to_json(nlohmann::json& j, const TravelRecord& r);
void from_json(const nlohmann::json& j, TravelRecord& r);

void to_json(nlohmann::json& j, const LongTermSummary& s);
void from_json(const nlohmann::json& j, LongTermSummary& s);

void to_json(nlohmann::json& j, const ValidationFinding& f);
void from_json(const nlohmann::json& j, ValidationFinding& f);

void to_json(nlohmann::json& j, const DeclaredTrip& t);
void from_json(const nlohmann::json& j, DeclaredTrip& t);

void to_json(nlohmann::json& j, const PlanDraft& d);
void from_json(const nlohmann::json& j, PlanDraft& d);

void to_json(nlohmann::json& j, const StageTrace& t);
void from_json(const nlohmann::json& j, StageTrace& t);

void to_json(nlohmann::json& j, const MemoryStore& m);
void from_json(const nlohmann::json& j, MemoryStore& m);

}  // namespace tripweaver
