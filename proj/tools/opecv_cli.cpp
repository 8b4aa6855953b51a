// opecv: command-line front end for the estimator library and benchmark harness.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "opecv/banditgen.hpp"
#include "opecv/error.hpp"
#include "opecv/estimators.hpp"
#include "opecv/harness/config.hpp"
#include "opecv/harness/experiment.hpp"
#include "opecv/harness/metrics.hpp"
#include "opecv/harness/report.hpp"
#include "opecv/random.hpp"
#include "opecv/selection.hpp"
#include "opecv/serialization.hpp"

namespace {

using nlohmann::json;
namespace hx = opecv::harness;

struct ProblemArgs {
  std::string dataset;
  double b0 = 1.0;
  double b1 = 10.0;
  std::uint64_t seed = 0;
  bool min_max = false;
};

void add_problem_options(CLI::App* cmd, ProblemArgs& args) {
  cmd->add_option("--dataset", args.dataset, "classification CSV or converted JSON")->required();
  cmd->add_option("--b0", args.b0, "logging policy inverse temperature");
  cmd->add_option("--b1", args.b1, "target policy inverse temperature");
  cmd->add_option("--seed", args.seed, "seed for the bandit problem and splits");
  cmd->add_flag("--min-max", args.min_max, "rescale features to [0, 1]");
}

opecv::BanditProblem make_problem(const ProblemArgs& args) {
  const auto data = hx::load_classification_any(args.dataset, args.min_max);
  auto rng = opecv::make_rng({args.seed});
  return opecv::build_problem(data, args.b0, args.b1, rng);
}

json real(double v) {
  if (std::isfinite(v)) return v;
  return opecv::format_real(v);
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> sizes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    opecv::require(pos == item.size() && pos > 0 && v > 0, "bad sample size '" + item + "'");
    sizes.push_back(v);
  }
  opecv::require(!sizes.empty(), "--sizes lists no sizes");
  return sizes;
}

void progress_line(std::size_t done, std::size_t total) {
  if (done == total || done % 10 == 0) {
    std::fprintf(stderr, "\r%zu/%zu tasks", done, total);
    if (done == total) std::fputc('\n', stderr);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Off-policy estimator evaluation and cross-validated selection"};
  app.require_subcommand(1);

  std::string csv_path;
  std::string out_path;
  bool convert_min_max = false;
  int label_column = -1;
  auto* convert = app.add_subcommand("convert", "validate a classification CSV and write it as JSON");
  convert->add_option("csv", csv_path, "headerless CSV, label in the last column")->required();
  convert->add_option("--out", out_path, "output JSON file")->required();
  convert->add_option("--label-column", label_column, "label column index (negative counts from the end)");
  convert->add_flag("--min-max", convert_min_max, "rescale features to [0, 1]");

  ProblemArgs eval_args;
  std::string estimator_text;
  auto* evaluate = app.add_subcommand("evaluate", "one estimate on a freshly built bandit problem");
  add_problem_options(evaluate, eval_args);
  evaluate->add_option("--estimator", estimator_text, "e.g. DR or TruncatedIPS:10")->required();

  ProblemArgs select_args;
  std::string bundle = "ips-dm-dr";
  std::string validator_text = "dr";
  std::size_t K = 10;
  bool allow_biased = false;
  bool use_slope = false;
  auto* select = app.add_subcommand("select", "one OCV (or SLOPE) selection, printed as JSON");
  add_problem_options(select, select_args);
  select->add_option("--bundle", bundle, "ips-dm-dr, everything or grid:<Kind>");
  select->add_option("--validator", validator_text, "ips or dr");
  select->add_option("--K", K, "number of Monte Carlo splits");
  select->add_flag("--allow-biased-validator", allow_biased, "permit a biased validator");
  select->add_flag("--slope", use_slope, "select with SLOPE instead of OCV");

  std::string config_path;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench", "run the full condition grid from a config");
  bench->add_option("--config", config_path, "experiment JSON")->required();
  bench->add_option("--out", bench_out, "output directory (overrides the config)");

  std::string regret_config;
  std::string sizes_text = "250,1000,4000";
  std::string regret_out;
  auto* regret = app.add_subcommand("regret", "selection regret across logged sample sizes");
  regret->add_option("--config", regret_config, "experiment JSON")->required();
  regret->add_option("--sizes", sizes_text, "comma-separated sample sizes");
  regret->add_option("--out", regret_out, "output directory (overrides the config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*convert) {
      opecv::CsvOptions options;
      options.min_max_scale = convert_min_max;
      options.label_column = label_column;
      const auto data = opecv::load_classification_csv(csv_path, options);
      opecv::write_text_file(out_path, hx::classification_to_json(data));
      std::cout << "n=" << data.n() << " d=" << data.d << " m=" << data.m << '\n';
    } else if (*evaluate) {
      const auto spec = opecv::parse_spec(estimator_text);
      const auto problem = make_problem(eval_args);
      const auto est = opecv::estimate(spec, problem.logged, problem.target,
                                       opecv::EstimateOptions{&problem.logging});
      json j;
      j["estimator"] = spec.label();
      j["estimate"] = real(est.estimate);
      j["variance"] = real(est.variance_of_mean);
      j["true_value"] = problem.true_value;
      j["n"] = problem.logged.n();
      std::cout << j.dump(2) << '\n';
    } else if (*select) {
      const auto problem = make_problem(select_args);
      const auto candidates = hx::resolve_bundle(bundle, problem.logged, problem.target);
      opecv::SelectionResult result;
      if (use_slope) {
        result = opecv::slope_select(candidates, problem.logged, problem.target,
                                     opecv::EstimateOptions{&problem.logging});
      } else {
        opecv::OcvOptions options;
        options.logging = &problem.logging;
        options.allow_biased_validator = allow_biased;
        result = opecv::ocv_select(problem.target, problem.logged, candidates,
                                   opecv::parse_spec(validator_text), K, select_args.seed, options);
      }
      auto j = json::parse(opecv::selection_to_json(result));
      j["true_value"] = problem.true_value;
      std::cout << j.dump(2) << '\n';
    } else if (*bench) {
      auto config = hx::load_config(config_path);
      if (!bench_out.empty()) config.output_dir = bench_out;
      const auto rows = hx::run_experiment(config, progress_line);
      const auto summary = hx::aggregate(rows, config.seed);
      hx::write_bench_outputs(config.output_dir, rows, summary);
      std::cout << "wrote " << rows.size() << " rows to "
                << (std::filesystem::path(config.output_dir) / "results.csv").string() << '\n';
    } else if (*regret) {
      auto config = hx::load_config(regret_config);
      if (!regret_out.empty()) config.output_dir = regret_out;
      const auto sizes = parse_sizes(sizes_text);
      const auto rows = hx::run_regret_sweep(config, sizes, progress_line);
      const auto summary = hx::aggregate(rows, config.seed);
      hx::write_sweep_outputs(config.output_dir, rows, summary);
      std::cout << "wrote " << rows.size() << " rows to "
                << (std::filesystem::path(config.output_dir) / "regret.csv").string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
