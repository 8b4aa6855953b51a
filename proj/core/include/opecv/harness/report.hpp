#pragma once

#include <span>
#include <string>

#include "opecv/banditgen.hpp"
#include "opecv/harness/experiment.hpp"
#include "opecv/harness/metrics.hpp"

namespace opecv::harness {

// dataset,beta0,beta1,run,method,chosen,estimate,true_value,squared_error,regret,seconds
std::string results_csv(std::span<const ResultRow> rows);
// dataset,size,beta0,beta1,run,method,chosen,estimate,true_value,squared_error,regret
std::string sweep_csv(std::span<const ResultRow> rows);
// dataset,method,count,mse,mse_lo,mse_hi,regret,regret_lo,regret_hi
std::string summary_csv(std::span<const SummaryRow> rows);
// dataset,size,method,count,median_regret,regret,regret_lo,regret_hi,mse
std::string sweep_summary_csv(std::span<const SummaryRow> rows);

// results.csv, summary.csv and plotdata/{mse,regret}_<dataset>.csv under `dir`.
void write_bench_outputs(const std::string& dir, std::span<const ResultRow> rows,
                         std::span<const SummaryRow> summary);
// regret.csv, regret_summary.csv and plotdata/regret_by_size.csv under `dir`.
void write_sweep_outputs(const std::string& dir, std::span<const ResultRow> rows,
                         std::span<const SummaryRow> summary);

// {"d", "m", "features": n x d, "labels", "label_names"}
std::string classification_to_json(const ClassificationDataset& data);
ClassificationDataset classification_from_json(std::string_view text);

// A CSV path, or JSON written by classification_to_json (by extension).
ClassificationDataset load_classification_any(const std::string& path, bool min_max_scale);

}  // namespace opecv::harness
