#include "opecv/serialization.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "opecv/error.hpp"

namespace opecv {

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) value = 0.0;
  std::array<char, 64> buffer{};
  const auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  if (ec != std::errc()) throw NumericalError("failed to format a double");
  return std::string(buffer.data(), ptr);
}

namespace detail {

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string(what) + ": malformed JSON: " + e.what());
  }
}

json spec_json(const EstimatorSpec& spec) {
  json j;
  j["kind"] = std::string(to_string(spec.kind));
  if (!spec.hyper) {
    j["hyper"] = nullptr;
  } else if (std::isinf(*spec.hyper)) {
    j["hyper"] = format_real(*spec.hyper);
  } else {
    j["hyper"] = *spec.hyper;
  }
  return j;
}

EstimatorSpec spec_from(const json& j) {
  if (j.is_string()) return parse_spec(j.get<std::string>());
  require(j.is_object() && j.contains("kind") && j["kind"].is_string(),
          "estimator spec needs a string \"kind\"");
  const EstimatorKind kind = parse_kind(j["kind"].get<std::string>());
  std::optional<double> hyper;
  if (j.contains("hyper") && !j["hyper"].is_null()) {
    const auto& h = j["hyper"];
    if (h.is_number()) {
      hyper = h.get<double>();
    } else if (h.is_string() && (h == "inf" || h == "infinity")) {
      hyper = std::numeric_limits<double>::infinity();
    } else {
      throw InvalidInput("estimator spec \"hyper\" must be a number or null");
    }
  }
  return EstimatorSpec::make(kind, hyper);
}

json dataset_json(const LoggedDataset& dataset) {
  json j;
  j["n"] = dataset.n();
  j["d"] = dataset.d();
  j["m"] = dataset.m();
  json contexts = json::array();
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    const auto x = dataset.context(i);
    contexts.push_back(std::vector<double>(x.begin(), x.end()));
  }
  j["contexts"] = std::move(contexts);
  j["actions"] = dataset.actions();
  j["rewards"] = dataset.rewards();
  j["logging_propensities"] = dataset.logging_propensities();
  return j;
}

LoggedDataset dataset_from(const json& j) {
  for (const char* key : {"n", "d", "m", "contexts", "actions", "rewards", "logging_propensities"}) {
    require(j.contains(key), std::string("logged dataset JSON is missing \"") + key + "\"");
  }
  try {
    const auto n = j["n"].get<std::size_t>();
    const auto d = j["d"].get<std::size_t>();
    const auto m = j["m"].get<std::size_t>();
    const auto& rows = j["contexts"];
    require(rows.is_array() && rows.size() == n, "\"contexts\" must hold n rows");
    std::vector<double> contexts;
    contexts.reserve(n * d);
    for (const auto& row : rows) {
      require(row.is_array() && row.size() == d, "every context row must have d entries");
      for (const auto& v : row) contexts.push_back(v.get<double>());
    }
    auto actions = j["actions"].get<std::vector<int>>();
    auto rewards = j["rewards"].get<std::vector<double>>();
    auto propensities = j["logging_propensities"].get<std::vector<double>>();
    require(actions.size() == n && rewards.size() == n && propensities.size() == n,
            "actions, rewards and logging_propensities must each hold n entries");
    return LoggedDataset(d, m, std::move(contexts), std::move(actions), std::move(rewards),
                         std::move(propensities));
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("logged dataset JSON has a wrongly typed field: ") + e.what());
  }
}

}  // namespace detail

std::string dataset_to_json(const LoggedDataset& dataset) {
  return detail::dataset_json(dataset).dump();
}

LoggedDataset dataset_from_json(std::string_view text) {
  return detail::dataset_from(detail::parse_json(text, "logged dataset"));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw InvalidInput("failed while writing '" + path + "'");
}

void save_dataset(const LoggedDataset& dataset, const std::string& path) {
  write_text_file(path, dataset_to_json(dataset));
}

LoggedDataset load_dataset(const std::string& path) {
  return dataset_from_json(read_text_file(path));
}

std::string spec_to_json(const EstimatorSpec& spec) { return detail::spec_json(spec).dump(); }

EstimatorSpec spec_from_json(std::string_view text) {
  return detail::spec_from(detail::parse_json(text, "estimator spec"));
}

}  // namespace opecv
