#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "opecv/dataset.hpp"
#include "opecv/policy.hpp"
#include "opecv/random.hpp"

namespace opecv {

// Supervised data: row-major n x d features and dense labels in [0, m).
struct ClassificationDataset {
  std::size_t d = 0;
  std::size_t m = 0;
  std::vector<double> features;
  std::vector<int> labels;
  // Original label text for class c is label_names[c] (may be empty for
  // synthetic data).
  std::vector<std::string> label_names;

  std::size_t n() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * d, d}; }

  ClassificationDataset subset(std::span<const std::size_t> indices) const;
  void validate() const;
};

struct CsvOptions {
  // Rescale every feature column to [0, 1]; constant columns become 0.
  bool min_max_scale = false;
  // Column holding the label; negative counts from the end (-1 = last).
  int label_column = -1;
};

// Headerless numeric CSV. Labels are arbitrary text mapped to classes in
// order of first appearance.
ClassificationDataset load_classification_csv(const std::string& path, const CsvOptions& options = {});
ClassificationDataset parse_classification_csv(std::string_view text, const CsvOptions& options = {},
                                               const std::string& source = "<csv>");

void min_max_scale(ClassificationDataset& dataset);

// Gaussian class clusters with unit-variance noise around random centres;
// used when a real dataset is too small for an experiment.
ClassificationDataset make_synthetic_classification(std::size_t n, std::size_t d, std::size_t m,
                                                    Rng& rng, double separation = 1.0);

// (H_b, H_pi) with |H_b| = ceil(n / 2), uniformly at random.
std::pair<ClassificationDataset, ClassificationDataset> split_halves(const ClassificationDataset& data,
                                                                     Rng& rng);

struct LogisticOptions {
  std::size_t iterations = 500;
  double step = 0.1;
  double l2 = 1e-6;
};

// Regularized mean negative log-likelihood of the one-vs-rest problem for
// class c at theta (length d).
double logistic_objective(const ClassificationDataset& data, int c, std::span<const double> theta,
                          double l2);

// One-vs-rest logistic regression per class, without intercept, by
// full-batch gradient descent. The step halves whenever a step would raise
// the objective. Classes absent from `data` get a zero vector.
std::vector<std::vector<double>> fit_one_vs_rest(const ClassificationDataset& data,
                                                 const LogisticOptions& options = {});

// Bootstrap resample of H_pi (size |H_pi|) followed by fit_one_vs_rest.
std::vector<std::vector<double>> fit_logistic_models(const ClassificationDataset& policy_half, Rng& rng,
                                                     const LogisticOptions& options = {});

struct PolicyPair {
  SoftmaxLinearPolicy logging;
  SoftmaxLinearPolicy target;
};

PolicyPair make_policies(std::vector<std::vector<double>> theta0, std::vector<std::vector<double>> theta1,
                         double beta0, double beta1);

// (1/|H_b|) sum pi(y | x)
double true_value(const SoftmaxLinearPolicy& policy, const ClassificationDataset& bandit_half);

// Index a with cumulative probability first exceeding u; zero-probability
// actions are never returned.
std::size_t sample_action(std::span<const double> probs, double u);

LoggedDataset generate_logged(const ClassificationDataset& bandit_half,
                              const SoftmaxLinearPolicy& logging, Rng& rng);

struct BanditProblem {
  ClassificationDataset bandit_half;
  ClassificationDataset policy_half;
  SoftmaxLinearPolicy logging;
  SoftmaxLinearPolicy target;
  double true_value = 0.0;
  LoggedDataset logged;
};

// split -> two independent bootstrap fits -> policies -> V(pi) -> logged data
BanditProblem build_problem(const ClassificationDataset& data, double beta0, double beta1, Rng& rng,
                            const LogisticOptions& options = {});

// Same policies on a uniform subsample (without replacement) of H_b of the
// given size; true value and logged data are recomputed on the subsample.
BanditProblem subsample_problem(const BanditProblem& problem, std::size_t size, Rng& rng);

}  // namespace opecv
