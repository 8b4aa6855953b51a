#include "opecv/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <tuple>

#include "opecv/error.hpp"
#include "opecv/random.hpp"
#include "opecv/tuning.hpp"

namespace opecv::harness {

bool row_less(const ResultRow& a, const ResultRow& b) {
  return std::tie(a.dataset, a.beta0, a.beta1, a.sample_size, a.run, a.method) <
         std::tie(b.dataset, b.beta0, b.beta1, b.sample_size, b.run, b.method);
}

std::uint64_t problem_seed(std::uint64_t master, const std::string& dataset, double beta0,
                           double beta1, std::size_t run) {
  return derive_seed({master, hash_name(dataset), hash_real(beta0), hash_real(beta1), run});
}

namespace {

constexpr double kNoRegret = std::numeric_limits<double>::quiet_NaN();

ResultRow make_row(const std::string& method, const std::string& chosen, double estimate,
                   double truth, double regret) {
  ResultRow row;
  row.method = method;
  row.chosen = chosen;
  row.estimate = estimate;
  row.true_value = truth;
  const double err = estimate - truth;
  row.squared_error = err * err;
  row.regret = regret;
  return row;
}

double true_squared_error(double estimate, double truth) { return (estimate - truth) * (estimate - truth); }

EstimatorSpec theory_spec(EstimatorKind kind, const ExperimentConfig& config,
                          const BanditProblem& problem, const RewardModel& model) {
  const auto& data = problem.logged;
  switch (kind) {
    case EstimatorKind::TruncatedIPS:
      return EstimatorSpec::make(kind, theory_truncation(data.n()));
    case EstimatorKind::SwitchDR: {
      const auto grid = default_grid(kind, data, problem.target);
      return EstimatorSpec::make(
          kind, tune_switch_dr(data, problem.target, problem.logging, model, grid.values));
    }
    case EstimatorKind::DRos:
    case EstimatorKind::DRps: {
      const auto grid = default_grid(kind, data, problem.target);
      const auto mode = kind == EstimatorKind::DRos ? ShrinkMode::Optimistic : ShrinkMode::Pessimistic;
      return EstimatorSpec::make(kind, tune_dr_shrink(data, problem.target, model, grid.values, mode));
    }
    case EstimatorKind::IPSLambda:
      return EstimatorSpec::make(kind, tune_ips_lambda(data, problem.target, config.ips_lambda_delta));
    default:
      throw InvalidInput("no theory tuner for " + std::string(to_string(kind)));
  }
}

char digit(std::size_t v) { return static_cast<char>('0' + v); }

std::string grid_name(const std::string& base, std::size_t j) {
  std::string idx;
  idx.push_back(digit(j / 10 % 10));
  idx.push_back(digit(j % 10));
  return base + "[" + idx + "]";
}

// Runs tasks [0, count) on `workers` threads. Each task's rows land in its
// own slot, so the merged output does not depend on scheduling.
template <typename Task>
std::vector<ResultRow> run_pool(std::size_t count, std::size_t workers, Task&& task,
                                const ProgressFn& progress) {
  std::vector<std::vector<ResultRow>> slots(count);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      {
        std::lock_guard lock(mutex);
        if (failure) return;
      }
      try {
        slots[i] = task(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
      const std::size_t finished = done.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard lock(mutex);
        progress(finished, count);
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<ResultRow> rows;
  for (auto& s : slots) {
    rows.insert(rows.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  std::sort(rows.begin(), rows.end(), row_less);
  return rows;
}

struct LoadedDataset {
  std::string name;
  ClassificationDataset data;
};

std::vector<LoadedDataset> load_all(const ExperimentConfig& config) {
  std::vector<LoadedDataset> out;
  for (const auto& entry : config.datasets) {
    try {
      out.push_back({entry.name, load_dataset_entry(entry, config.min_max_scale)});
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: dataset '%s' skipped: %s\n", entry.name.c_str(), e.what());
    }
  }
  return out;
}

std::vector<ResultRow> run_methods(const ExperimentConfig& config, const BanditProblem& problem,
                                   std::uint64_t seed) {
  std::vector<ResultRow> rows;
  for (const auto& method : config.methods) {
    const auto start = std::chrono::steady_clock::now();
    try {
      auto outcome = run_method(method, config, problem, derive_seed({seed, hash_name(method.name)}));
      const double seconds =
          config.record_timing
              ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
              : 0.0;
      for (auto& row : outcome.rows) {
        row.seconds = seconds;
        rows.push_back(std::move(row));
      }
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: method '%s' failed: %s\n", method.name.c_str(), e.what());
    }
  }
  return rows;
}

}  // namespace

MethodOutcome run_method(const MethodConfig& method, const ExperimentConfig& config,
                         const BanditProblem& problem, std::uint64_t seed) {
  const auto& data = problem.logged;
  const auto& target = problem.target;
  const double truth = problem.true_value;
  const EstimateOptions est_options{&problem.logging, config.ridge};
  MethodOutcome out;

  switch (method.type) {
    case MethodType::Fixed: {
      const auto est = estimate(*method.estimator, data, target, est_options);
      out.rows.push_back(make_row(method.name, method.estimator->label(), est.estimate, truth, kNoRegret));
      break;
    }
    case MethodType::Theory: {
      const auto model = fit_ridge(data, config.ridge);
      const auto spec = theory_spec(method.kind, config, problem, model);
      const auto est = estimate_with_model(spec, data, target, model, &problem.logging);
      out.rows.push_back(make_row(method.name, spec.label(), est.estimate, truth, kNoRegret));
      break;
    }
    case MethodType::Grid: {
      const auto grid = default_grid(method.kind, data, target);
      const auto model = fit_ridge(data, config.ridge);
      for (std::size_t j = 0; j < grid.values.size(); ++j) {
        const auto spec = EstimatorSpec::make(method.kind, grid.values[j]);
        const auto est = estimate_with_model(spec, data, target, model, &problem.logging);
        out.rows.push_back(make_row(grid_name(method.name, j), spec.label(), est.estimate, truth, kNoRegret));
      }
      break;
    }
    case MethodType::Ocv:
    case MethodType::Slope: {
      const auto candidates = resolve_bundle(method.bundle, config, data, target);
      SelectionResult sel;
      if (method.type == MethodType::Ocv) {
        OcvOptions options;
        options.logging = &problem.logging;
        options.ridge = config.ridge;
        options.allow_biased_validator = method.allow_biased_validator;
        options.one_se = method.one_se;
        const auto& validator = method.validator ? *method.validator : config.validator;
        sel = ocv_select(target, data, candidates, validator, config.K, seed, options);
      } else {
        sel = slope_select(candidates, data, target, est_options);
      }
      std::vector<double> losses;
      losses.reserve(sel.per_candidate.size());
      for (const auto& c : sel.per_candidate) losses.push_back(true_squared_error(c.full_estimate, truth));
      const double chosen_loss = true_squared_error(sel.final_estimate, truth);
      out.rows.push_back(make_row(method.name, sel.chosen.label(), sel.final_estimate, truth,
                                  selection_regret(chosen_loss, losses)));
      out.selection = std::move(sel);
      break;
    }
  }
  return out;
}

std::vector<ResultRow> run_condition(const ExperimentConfig& config, const std::string& dataset_name,
                                     const ClassificationDataset& data, double beta0, double beta1,
                                     std::size_t run) {
  const std::uint64_t seed = problem_seed(config.seed, dataset_name, beta0, beta1, run);
  auto rng = make_rng({seed});
  const auto problem = build_problem(data, beta0, beta1, rng);
  auto rows = run_methods(config, problem, seed);
  for (auto& row : rows) {
    row.dataset = dataset_name;
    row.beta0 = beta0;
    row.beta1 = beta1;
    row.run = run;
  }
  return rows;
}

namespace {

struct Cell {
  std::size_t dataset;
  double beta0;
  double beta1;
  std::size_t run;
};

std::vector<Cell> enumerate_cells(const ExperimentConfig& config, std::size_t dataset_count) {
  std::vector<Cell> cells;
  for (std::size_t d = 0; d < dataset_count; ++d) {
    for (double b0 : config.beta0) {
      for (double b1 : config.beta1) {
        for (std::size_t r = 0; r < config.runs; ++r) cells.push_back({d, b0, b1, r});
      }
    }
  }
  return cells;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  const auto datasets = load_all(config);
  const auto cells = enumerate_cells(config, datasets.size());
  return run_pool(
      cells.size(), worker_count(config.threads),
      [&](std::size_t i) {
        const auto& c = cells[i];
        return run_condition(config, datasets[c.dataset].name, datasets[c.dataset].data, c.beta0,
                             c.beta1, c.run);
      },
      progress);
}

std::vector<ResultRow> run_regret_sweep(const ExperimentConfig& config,
                                        const std::vector<std::size_t>& sizes,
                                        const ProgressFn& progress) {
  config.validate();
  require(!sizes.empty(), "regret sweep needs at least one sample size");
  const auto datasets = load_all(config);
  const std::size_t largest = *std::max_element(sizes.begin(), sizes.end());
  for (const auto& d : datasets) {
    const std::size_t half = (d.data.n() + 1) / 2;
    require(largest <= half, "sample size " + std::to_string(largest) + " exceeds the bandit half of '" +
                                 d.name + "' (" + std::to_string(half) + " examples)");
  }
  const auto cells = enumerate_cells(config, datasets.size());
  return run_pool(
      cells.size(), worker_count(config.threads),
      [&](std::size_t i) {
        const auto& c = cells[i];
        const auto& ds = datasets[c.dataset];
        const std::uint64_t seed = problem_seed(config.seed, ds.name, c.beta0, c.beta1, c.run);
        auto rng = make_rng({seed});
        const auto base = build_problem(ds.data, c.beta0, c.beta1, rng);
        std::vector<ResultRow> rows;
        for (std::size_t size : sizes) {
          const std::uint64_t size_seed = derive_seed({seed, size});
          auto sub_rng = make_rng({size_seed});
          const auto problem = subsample_problem(base, size, sub_rng);
          for (auto& row : run_methods(config, problem, size_seed)) {
            row.dataset = ds.name;
            row.beta0 = c.beta0;
            row.beta1 = c.beta1;
            row.run = c.run;
            row.sample_size = size;
            rows.push_back(std::move(row));
          }
        }
        return rows;
      },
      progress);
}

}  // namespace opecv::harness
