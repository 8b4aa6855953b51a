#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "opecv/banditgen.hpp"
#include "opecv/harness/config.hpp"
#include "opecv/selection.hpp"

namespace opecv::harness {

struct ResultRow {
  std::string dataset;
  double beta0 = 0.0;
  double beta1 = 0.0;
  std::size_t run = 0;
  std::string method;
  std::string chosen;
  double estimate = 0.0;
  double true_value = 0.0;
  double squared_error = 0.0;
  // NaN for methods without a candidate set (fixed and theory-tuned).
  double regret = 0.0;
  double seconds = 0.0;
  // Logged sample count; only the regret sweep reports it.
  std::size_t sample_size = 0;
};

// Canonical order: (dataset, beta0, beta1, sample_size, run, method).
bool row_less(const ResultRow& a, const ResultRow& b);

struct MethodOutcome {
  std::vector<ResultRow> rows;
  // Present for OCV and SLOPE methods.
  std::optional<SelectionResult> selection;
};

// Seed of the bandit problem for one (dataset, beta0, beta1, run) cell.
std::uint64_t problem_seed(std::uint64_t master, const std::string& dataset, double beta0,
                           double beta1, std::size_t run);

// Runs one configured method on a prepared problem. `seed` feeds OCV splits.
MethodOutcome run_method(const MethodConfig& method, const ExperimentConfig& config,
                         const BanditProblem& problem, std::uint64_t seed);

// Builds the problem for this cell and runs every configured method on it.
// A failing method is reported on stderr and skipped; the others still run.
std::vector<ResultRow> run_condition(const ExperimentConfig& config, const std::string& dataset_name,
                                     const ClassificationDataset& data, double beta0, double beta1,
                                     std::size_t run);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

// All datasets x beta0 x beta1 x runs on a worker pool; rows canonically
// sorted. Datasets that fail to load are reported and skipped.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

// Sample-size sweep: per run the policies are learned once,
// then H_b is subsampled to each size before logging.
std::vector<ResultRow> run_regret_sweep(const ExperimentConfig& config,
                                        const std::vector<std::size_t>& sizes,
                                        const ProgressFn& progress = {});

}  // namespace opecv::harness
