#pragma once

#include <string>
#include <string_view>

#include "opecv/dataset.hpp"
#include "opecv/estimators.hpp"

namespace opecv {

// Shortest decimal text that parses back to the same double ("0.1", "1e-05",
// "3"). Infinities print as "inf"/"-inf", NaN as "nan".
std::string format_real(double value);

// {"n", "d", "m", "contexts": n x d, "actions", "rewards", "logging_propensities"}
std::string dataset_to_json(const LoggedDataset& dataset);
LoggedDataset dataset_from_json(std::string_view text);

void save_dataset(const LoggedDataset& dataset, const std::string& path);
LoggedDataset load_dataset(const std::string& path);

// {"kind": "TruncatedIPS", "hyper": 12.5}; "hyper" is null for untunable kinds.
std::string spec_to_json(const EstimatorSpec& spec);
EstimatorSpec spec_from_json(std::string_view text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

}  // namespace opecv
