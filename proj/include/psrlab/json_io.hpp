#pragma once

#include <string>

#include "json.hpp"
#include "psrlab/expert.hpp"
#include "psrlab/family.hpp"
#include "psrlab/mdp.hpp"
#include "psrlab/posterior.hpp"

namespace psrlab {

nlohmann::json mdp_to_json(const Mdp& mdp);
Mdp mdp_from_json(const nlohmann::json& j);

// Families serialize as members + prior + metadata; plans and caches are
// recomputed on load (deterministically, so the content digest survives a
// round trip).
nlohmann::json family_to_json(const ParameterFamily& family);
ParameterFamily family_from_json(const nlohmann::json& j);

// Infinite lambda is stored as the string "inf" (JSON has no infinity).
nlohmann::json dataset_to_json(const OfflineDataset& dataset);
OfflineDataset dataset_from_json(const nlohmann::json& j);

// Diagnostic snapshot: normalized weights, epoch and the family binding.
nlohmann::json posterior_to_json(const PosteriorState& post);

std::string read_text_file(const std::string& path);
// Writes to a temp file in the same directory, then renames into place.
void write_text_file_atomic(const std::string& path,
                            const std::string& content);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace psrlab
