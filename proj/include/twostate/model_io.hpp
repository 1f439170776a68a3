#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "twostate/model.hpp"

namespace twostate {

/// Model document:
///   {"transitions": [[p_aa, p_ab], [p_ba, p_bb]],
///    "initial": "stationary" | [q_a, q_b],
///    "emissions": {"type": "categorical", "alphabet": [...],
///                  "probs_a": [...], "probs_b": [...]}
///               | {"type": "gaussian", "a": {"mean": m, "variance": v},
///                  "b": {"mean": m, "variance": v}}}
RawModel raw_model_from_json(const nlohmann::json& doc);
TwoStateHmm model_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const TwoStateHmm& model);
TwoStateHmm load_model(const std::filesystem::path& path);

/// Parses one observation token: an alphabet symbol (categorical) or a decimal
/// real (Gaussian). Throws BadObservation.
Observation parse_observation(const TwoStateHmm& model, std::string_view token);
std::string format_observation(const TwoStateHmm& model, Observation x);

/// One token per line; blank lines are skipped.
std::vector<Observation> read_observations(std::istream& in, const TwoStateHmm& model);
std::vector<Observation> load_observations(const std::filesystem::path& path, const TwoStateHmm& model);
void write_observations(std::ostream& out, const TwoStateHmm& model, const std::vector<Observation>& xs);

/// %.17g formatting (round-trips doubles; prints inf / -inf / nan).
std::string format_real(double x);

}  // namespace twostate
