#pragma once

// Private nlohmann::json adapters shared by the serialization and harness
// translation units. Not installed.

#include <nlohmann/json.hpp>

#include "opecv/dataset.hpp"
#include "opecv/estimators.hpp"

namespace opecv::detail {

using nlohmann::json;

json spec_json(const EstimatorSpec& spec);
EstimatorSpec spec_from(const json& j);

json dataset_json(const LoggedDataset& dataset);
LoggedDataset dataset_from(const json& j);

// Parse with a descriptive InvalidInput on malformed text.
json parse_json(std::string_view text, std::string_view what);

}  // namespace opecv::detail
