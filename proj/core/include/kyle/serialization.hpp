#pragma once

#include <json.hpp>

#include "kyle/continuous_limit.hpp"

namespace kyle {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

// Rationals cross the wire as canonical lowest-term strings ("3/7", "1"),
// so serialization is lossless and diff-friendly.

Json game_spec_to_json(const GameSpec& spec);
GameSpec game_spec_from_json(const Json& j);

Json solver_config_to_json(const SolverConfig& config);
SolverConfig solver_config_from_json(const Json& j);

Json node_key_to_json(const GameTree& tree, const NodeKey& key);
NodeKey node_key_from_json(const GameTree& tree, const Json& j);

Json certificate_to_json(const GameTree& tree, const EquilibriumCertificate& cert);
EquilibriumCertificate certificate_from_json(const GameTree& tree, const Json& j);

Json report_to_json(const VerificationReportExact& report);
Json report_to_json(const VerificationReport& report);
Json structure_report_to_json(const StructureReport& report);

Json continuous_game_to_json(const ContinuousGame& game);
ContinuousGame continuous_game_from_json(const Json& j);

}  // namespace kyle
