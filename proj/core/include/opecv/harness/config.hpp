#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opecv/banditgen.hpp"
#include "opecv/estimators.hpp"
#include "opecv/reward_model.hpp"
#include "opecv/tuning.hpp"

namespace opecv::harness {

struct SyntheticSource {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  double separation = 1.0;
};

struct DatasetEntry {
  std::string name;
  std::string path;  // empty for synthetic sources
  int label_column = -1;
  std::optional<SyntheticSource> synthetic;
};

enum class MethodType {
  Fixed,  // one estimator spec
  Ocv,    // OCV over a bundle
  Slope,  // SLOPE over a bundle
  Theory, // estimator-specific tuner
  Grid,   // every default grid point of a kind, one row each
};

std::string_view to_string(MethodType type);
MethodType parse_method_type(std::string_view name);

struct MethodConfig {
  std::string name;
  MethodType type = MethodType::Fixed;
  std::optional<EstimatorSpec> estimator;  // Fixed
  EstimatorKind kind = EstimatorKind::IPS; // Theory, Grid
  std::string bundle;                      // Ocv, Slope
  std::optional<EstimatorSpec> validator;  // Ocv; falls back to the config validator
  bool allow_biased_validator = false;
  bool one_se = true;
};

struct ExperimentConfig {
  std::vector<DatasetEntry> datasets;
  std::vector<double> beta0{1.0};
  std::vector<double> beta1{10.0};
  std::size_t runs = 50;
  std::size_t K = 10;
  std::uint64_t seed = 0;
  // Named custom bundles of fixed specs, in candidate order.
  std::map<std::string, std::vector<EstimatorSpec>> bundles;
  std::vector<MethodConfig> methods;
  EstimatorSpec validator = EstimatorSpec::make(EstimatorKind::DR);
  double ips_lambda_delta = kDefaultIpsLambdaDelta;
  double ridge = kDefaultRidge;
  std::string output_dir = "results";
  std::size_t threads = 0;  // 0: hardware concurrency
  bool min_max_scale = false;
  bool record_timing = false;

  void validate() const;
};

// Standard estimator-selection setup: IPS, DM and DR alone, OCV with IPS
// and DR validators, and SLOPE, all over {IPS, DR, DM}.
std::vector<MethodConfig> default_methods();

// Relative dataset paths are resolved against `base_dir`.
ExperimentConfig parse_config(std::string_view json_text, const std::string& base_dir = "");
ExperimentConfig load_config(const std::string& path);

ClassificationDataset load_dataset_entry(const DatasetEntry& entry, bool min_max_scale);

// Candidates for a bundle on a given problem, ordered by decreasing variance:
//   "ips-dm-dr"   IPS, DR, DM
//   "everything"  IPS, DR, DM plus every tunable kind's default grid
//   "grid:<Kind>" the default grid of one kind
// or a custom bundle from the config.
std::vector<EstimatorSpec> resolve_bundle(const std::string& name, const ExperimentConfig& config,
                                          const LoggedDataset& dataset,
                                          const SoftmaxLinearPolicy& target);
std::vector<EstimatorSpec> resolve_bundle(const std::string& name, const LoggedDataset& dataset,
                                          const SoftmaxLinearPolicy& target);

// Effective worker count: OPECV_THREADS if set, else `configured`, else the
// hardware concurrency (at least 1).
std::size_t worker_count(std::size_t configured);

}  // namespace opecv::harness
