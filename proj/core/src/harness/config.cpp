#include "opecv/harness/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <thread>

#include "../json_util.hpp"
#include "opecv/error.hpp"
#include "opecv/harness/report.hpp"
#include "opecv/serialization.hpp"

namespace opecv::harness {

using detail::json;

std::string_view to_string(MethodType type) {
  switch (type) {
    case MethodType::Fixed: return "fixed";
    case MethodType::Ocv: return "ocv";
    case MethodType::Slope: return "slope";
    case MethodType::Theory: return "theory";
    case MethodType::Grid: return "grid";
  }
  return "?";
}

MethodType parse_method_type(std::string_view name) {
  for (auto t : {MethodType::Fixed, MethodType::Ocv, MethodType::Slope, MethodType::Theory,
                 MethodType::Grid}) {
    if (name == to_string(t)) return t;
  }
  throw InvalidInput("unknown method type '" + std::string(name) +
                     "' (expected fixed, ocv, slope, theory or grid)");
}

namespace {

bool has_theory_tuner(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::TruncatedIPS:
    case EstimatorKind::SwitchDR:
    case EstimatorKind::DRos:
    case EstimatorKind::DRps:
    case EstimatorKind::IPSLambda:
      return true;
    default:
      return false;
  }
}

bool is_builtin_bundle(const std::string& name) {
  return name == "ips-dm-dr" || name == "everything" || name.rfind("grid:", 0) == 0;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config field \"") + key + "\" has the wrong type: " + e.what());
  }
}

std::vector<double> real_list(const json& j, const char* key, std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j[key];
  if (v.is_number()) return {v.get<double>()};
  require(v.is_array(), std::string("config field \"") + key + "\" must be a number or a list");
  std::vector<double> out;
  for (const auto& x : v) {
    require(x.is_number(), std::string("config field \"") + key + "\" must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

MethodConfig method_from(const json& j, std::size_t index) {
  const std::string where = "methods[" + std::to_string(index) + "]";
  require(j.is_object(), where + " must be an object");
  MethodConfig m;
  m.type = parse_method_type(get_or<std::string>(j, "type", "fixed"));
  switch (m.type) {
    case MethodType::Fixed:
      require(j.contains("estimator"), where + ": fixed methods need \"estimator\"");
      m.estimator = detail::spec_from(j["estimator"]);
      m.name = get_or<std::string>(j, "name", m.estimator->label());
      break;
    case MethodType::Ocv:
    case MethodType::Slope:
      m.bundle = get_or<std::string>(j, "bundle", "ips-dm-dr");
      if (j.contains("validator")) m.validator = detail::spec_from(j["validator"]);
      m.allow_biased_validator = get_or<bool>(j, "allow_biased_validator", false);
      m.one_se = get_or<bool>(j, "one_se", true);
      m.name = get_or<std::string>(
          j, "name",
          m.type == MethodType::Slope
              ? "SLOPE"
              : "OCV-" + (m.validator ? m.validator->label() : std::string("validator")));
      break;
    case MethodType::Theory:
    case MethodType::Grid:
      require(j.contains("kind"), where + ": " + std::string(to_string(m.type)) +
                                      " methods need \"kind\"");
      m.kind = parse_kind(j["kind"].get<std::string>());
      m.name = get_or<std::string>(j, "name", std::string(to_string(m.type)) + "-" +
                                                  std::string(opecv::to_string(m.kind)));
      break;
  }
  require(!m.name.empty(), where + ": empty method name");
  return m;
}

DatasetEntry dataset_from(const json& j, const std::string& base_dir) {
  DatasetEntry e;
  if (j.is_string()) {
    e.path = j.get<std::string>();
    e.name = std::filesystem::path(e.path).stem().string();
  } else {
    require(j.is_object(), "datasets entries must be strings or objects");
    e.path = get_or<std::string>(j, "path", "");
    e.label_column = get_or<int>(j, "label_column", -1);
    if (j.contains("synthetic")) {
      const auto& s = j["synthetic"];
      SyntheticSource src;
      src.n = get_or<std::size_t>(s, "n", 0);
      src.d = get_or<std::size_t>(s, "d", 0);
      src.m = get_or<std::size_t>(s, "m", 0);
      src.seed = get_or<std::uint64_t>(s, "seed", 0);
      src.separation = get_or<double>(s, "separation", 1.0);
      e.synthetic = src;
    }
    e.name = get_or<std::string>(j, "name",
                                 e.path.empty() ? std::string("synthetic")
                                                : std::filesystem::path(e.path).stem().string());
  }
  if (!e.path.empty() && !base_dir.empty() && std::filesystem::path(e.path).is_relative()) {
    e.path = (std::filesystem::path(base_dir) / e.path).lexically_normal().string();
  }
  require(e.synthetic.has_value() != !e.path.empty(),
          "dataset '" + e.name + "' needs exactly one of \"path\" or \"synthetic\"");
  return e;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!datasets.empty(), "config lists no datasets");
  require(!beta0.empty() && !beta1.empty(), "beta0 and beta1 lists must be non-empty");
  require(runs >= 1, "runs must be at least 1");
  require(K >= 2, "K must be at least 2");
  require(ips_lambda_delta > 0.0 && ips_lambda_delta <= 1.0, "ips_lambda_delta must lie in (0, 1]");
  require(ridge >= 0.0, "ridge must be non-negative");
  require(!methods.empty(), "config lists no methods");
  std::set<std::string> names;
  for (const auto& d : datasets) {
    require(names.insert(d.name).second, "duplicate dataset name '" + d.name + "'");
    require(d.name != "ALL", "dataset name 'ALL' is reserved");
  }
  for (const auto& [name, specs] : bundles) {
    require(!specs.empty(), "bundle '" + name + "' is empty");
    require(!is_builtin_bundle(name), "bundle '" + name + "' shadows a built-in bundle");
  }
  names.clear();
  for (const auto& m : methods) {
    require(names.insert(m.name).second, "duplicate method name '" + m.name + "'");
    if (m.type == MethodType::Ocv || m.type == MethodType::Slope) {
      require(is_builtin_bundle(m.bundle) || bundles.count(m.bundle) > 0,
              "method '" + m.name + "' uses unknown bundle '" + m.bundle + "'");
      if (m.bundle.rfind("grid:", 0) == 0) {
        require(is_tunable(parse_kind(m.bundle.substr(5))),
                "bundle '" + m.bundle + "' names an untunable kind");
      }
    }
    if (m.type == MethodType::Ocv) {
      const auto& v = m.validator ? *m.validator : validator;
      require(m.allow_biased_validator || is_unbiased(v.kind),
              "method '" + m.name + "' uses biased validator " + v.label() +
                  "; set allow_biased_validator to run it");
    }
    if (m.type == MethodType::Theory) {
      require(has_theory_tuner(m.kind), "no theory tuner for " + std::string(opecv::to_string(m.kind)));
    }
    if (m.type == MethodType::Grid) {
      require(is_tunable(m.kind), std::string(opecv::to_string(m.kind)) + " has no grid");
    }
  }
}

std::vector<MethodConfig> default_methods() {
  std::vector<MethodConfig> out;
  for (auto kind : {EstimatorKind::IPS, EstimatorKind::DM, EstimatorKind::DR}) {
    MethodConfig m;
    m.type = MethodType::Fixed;
    m.estimator = EstimatorSpec::make(kind);
    m.name = m.estimator->label();
    out.push_back(m);
  }
  for (auto kind : {EstimatorKind::IPS, EstimatorKind::DR}) {
    MethodConfig m;
    m.type = MethodType::Ocv;
    m.bundle = "ips-dm-dr";
    m.validator = EstimatorSpec::make(kind);
    m.name = "OCV-" + m.validator->label();
    out.push_back(m);
  }
  MethodConfig slope;
  slope.type = MethodType::Slope;
  slope.bundle = "ips-dm-dr";
  slope.name = "SLOPE";
  out.push_back(slope);
  return out;
}

ExperimentConfig parse_config(std::string_view json_text, const std::string& base_dir) {
  const json j = detail::parse_json(json_text, "experiment config");
  require(j.is_object(), "experiment config must be a JSON object");
  ExperimentConfig c;
  require(j.contains("datasets") && j["datasets"].is_array(), "config needs a \"datasets\" list");
  for (const auto& d : j["datasets"]) c.datasets.push_back(dataset_from(d, base_dir));
  c.beta0 = real_list(j, "beta0", c.beta0);
  c.beta1 = real_list(j, "beta1", c.beta1);
  c.runs = get_or<std::size_t>(j, "runs", c.runs);
  c.K = get_or<std::size_t>(j, "K", c.K);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  if (j.contains("validator")) c.validator = detail::spec_from(j["validator"]);
  c.ips_lambda_delta = get_or<double>(j, "ips_lambda_delta", c.ips_lambda_delta);
  c.ridge = get_or<double>(j, "ridge", c.ridge);
  c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir);
  c.threads = get_or<std::size_t>(j, "threads", c.threads);
  c.min_max_scale = get_or<bool>(j, "min_max_scale", c.min_max_scale);
  c.record_timing = get_or<bool>(j, "record_timing", c.record_timing);
  if (j.contains("bundles")) {
    require(j["bundles"].is_object(), "\"bundles\" must map names to spec lists");
    for (const auto& [name, list] : j["bundles"].items()) {
      require(list.is_array(), "bundle '" + name + "' must be a list");
      auto& specs = c.bundles[name];
      for (const auto& s : list) specs.push_back(detail::spec_from(s));
    }
  }
  if (j.contains("methods")) {
    require(j["methods"].is_array(), "\"methods\" must be a list");
    std::size_t i = 0;
    for (const auto& m : j["methods"]) c.methods.push_back(method_from(m, i++));
  } else {
    c.methods = default_methods();
  }
  // Name OCV methods without an explicit validator after the global one.
  for (auto& m : c.methods) {
    if (m.type == MethodType::Ocv && m.name == "OCV-validator") m.name = "OCV-" + c.validator.label();
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  const auto base = std::filesystem::path(path).parent_path().string();
  return parse_config(read_text_file(path), base);
}

ClassificationDataset load_dataset_entry(const DatasetEntry& entry, bool min_max) {
  if (entry.synthetic) {
    const auto& s = *entry.synthetic;
    auto rng = make_rng({s.seed, hash_name(entry.name)});
    auto data = make_synthetic_classification(s.n, s.d, s.m, rng, s.separation);
    if (min_max) min_max_scale(data);
    return data;
  }
  if (entry.label_column != -1) {
    CsvOptions options;
    options.min_max_scale = min_max;
    options.label_column = entry.label_column;
    return load_classification_csv(entry.path, options);
  }
  return load_classification_any(entry.path, min_max);
}

namespace {

std::vector<EstimatorSpec> grid_specs(EstimatorKind kind, const LoggedDataset& dataset,
                                      const SoftmaxLinearPolicy& target) {
  const auto grid = default_grid(kind, dataset, target);
  return candidates_from_grid(kind, grid.by_decreasing_variance());
}

}  // namespace

std::vector<EstimatorSpec> resolve_bundle(const std::string& name, const LoggedDataset& dataset,
                                          const SoftmaxLinearPolicy& target) {
  const std::vector<EstimatorSpec> base{EstimatorSpec::make(EstimatorKind::IPS),
                                        EstimatorSpec::make(EstimatorKind::DR),
                                        EstimatorSpec::make(EstimatorKind::DM)};
  if (name == "ips-dm-dr") return base;
  if (name == "everything") {
    auto out = base;
    for (auto kind : kAllKinds) {
      if (!is_tunable(kind)) continue;
      const auto specs = grid_specs(kind, dataset, target);
      out.insert(out.end(), specs.begin(), specs.end());
    }
    return out;
  }
  if (name.rfind("grid:", 0) == 0) return grid_specs(parse_kind(name.substr(5)), dataset, target);
  throw InvalidInput("unknown bundle '" + name + "'");
}

std::vector<EstimatorSpec> resolve_bundle(const std::string& name, const ExperimentConfig& config,
                                          const LoggedDataset& dataset,
                                          const SoftmaxLinearPolicy& target) {
  if (const auto it = config.bundles.find(name); it != config.bundles.end()) return it->second;
  return resolve_bundle(name, dataset, target);
}

std::size_t worker_count(std::size_t configured) {
  if (const char* env = std::getenv("OPECV_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    require(end != env && *end == '\0' && v >= 1, "OPECV_THREADS must be a positive integer");
    return static_cast<std::size_t>(v);
  }
  if (configured > 0) return configured;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

}  // namespace opecv::harness
