#pragma once

#include <string>

#include <json.hpp>

#include "gmatch/model.hpp"

namespace gmatch {

using Json = nlohmann::json;

/// Matrices serialize as row-major nested arrays of doubles.
Json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const Json& j, const std::string& name, Index rows = -1, Index cols = -1);

Json model_to_json(const MatchingModel& model);
MatchingModel model_from_json(const Json& j);

Json moments_to_json(const MomentSet& moments);
MomentSet moments_from_json(const Json& j);

/// CSV with header x1..xm,y1..yn[,tau] and one numeric row per match.
MatchedSample read_sample(const std::string& path);
void write_sample(const MatchedSample& sample, const std::string& path);

Json load_json_file(const std::string& path);

}  // namespace gmatch
