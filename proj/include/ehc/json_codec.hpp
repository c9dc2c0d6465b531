#pragma once

// JSON shapes shared by the HTTP API and the live stream. Infinite band
// bounds are written as null.

#include "ehc/alert.hpp"
#include "ehc/events.hpp"
#include "ehc/knowledge_base.hpp"
#include "ehc/store.hpp"

#include <json.hpp>

namespace ehc::json {

using nlohmann::json;

json to_json(const store::PatientRecord& p);
/// Strict: unknown keys and wrong types are reported as ValidationError.
/// The id comes from the URL, not the body.
store::PatientRecord patient_from_json(const json& j, PatientId id);

json to_json(const store::ReadingRecord& r);
json to_json(const store::NoteRecord& n);
json to_json(const store::PrescriptionRecord& p);
json to_json(const store::ClinicalEntry& e);
json to_json(const Alert& a);
json to_json(const kb::KnowledgeBase& kb);
json to_json(const StreamEvent& ev);

/// Accepts the to_json(KnowledgeBase) shape (meta fields ignored). Each band
/// table is either {"kind", "intervals": [{lo, hi, band}]} or
/// {"kind", "breakpoints": [...], "bands": [...]}. Throws ValidationError on
/// shape errors; rule violations are left to kb::validate_proposal.
kb::KbProposal proposal_from_json(const json& j);

}  // namespace ehc::json
