#include "opecv/harness/report.hpp"

#include <filesystem>
#include <map>
#include <sstream>

#include "../json_util.hpp"
#include "opecv/error.hpp"
#include "opecv/serialization.hpp"

namespace opecv::harness {

namespace fs = std::filesystem;
using detail::json;

namespace {

// Labels and names never contain commas or quotes except by user choice;
// quote defensively anyway.
std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string safe_file_stem(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create directory '" + dir.string() + "': " + ec.message());
}

}  // namespace

std::string results_csv(std::span<const ResultRow> rows) {
  std::ostringstream out;
  out << "dataset,beta0,beta1,run,method,chosen,estimate,true_value,squared_error,regret,seconds\n";
  for (const auto& r : rows) {
    out << field(r.dataset) << ',' << format_real(r.beta0) << ',' << format_real(r.beta1) << ','
        << r.run << ',' << field(r.method) << ',' << field(r.chosen) << ','
        << format_real(r.estimate) << ',' << format_real(r.true_value) << ','
        << format_real(r.squared_error) << ',' << format_real(r.regret) << ','
        << format_real(r.seconds) << '\n';
  }
  return out.str();
}

std::string sweep_csv(std::span<const ResultRow> rows) {
  std::ostringstream out;
  out << "dataset,size,beta0,beta1,run,method,chosen,estimate,true_value,squared_error,regret\n";
  for (const auto& r : rows) {
    out << field(r.dataset) << ',' << r.sample_size << ',' << format_real(r.beta0) << ','
        << format_real(r.beta1) << ',' << r.run << ',' << field(r.method) << ','
        << field(r.chosen) << ',' << format_real(r.estimate) << ',' << format_real(r.true_value)
        << ',' << format_real(r.squared_error) << ',' << format_real(r.regret) << '\n';
  }
  return out.str();
}

std::string summary_csv(std::span<const SummaryRow> rows) {
  std::ostringstream out;
  out << "dataset,method,count,mse,mse_lo,mse_hi,regret,regret_lo,regret_hi\n";
  for (const auto& s : rows) {
    out << field(s.dataset) << ',' << field(s.method) << ',' << s.count << ','
        << format_real(s.mse) << ',' << format_real(s.mse_lo) << ',' << format_real(s.mse_hi)
        << ',' << format_real(s.regret) << ',' << format_real(s.regret_lo) << ','
        << format_real(s.regret_hi) << '\n';
  }
  return out.str();
}

std::string sweep_summary_csv(std::span<const SummaryRow> rows) {
  std::ostringstream out;
  out << "dataset,size,method,count,median_regret,regret,regret_lo,regret_hi,mse\n";
  for (const auto& s : rows) {
    out << field(s.dataset) << ',' << s.sample_size << ',' << field(s.method) << ',' << s.count
        << ',' << format_real(s.median_regret) << ',' << format_real(s.regret) << ','
        << format_real(s.regret_lo) << ',' << format_real(s.regret_hi) << ','
        << format_real(s.mse) << '\n';
  }
  return out.str();
}

void write_bench_outputs(const std::string& dir, std::span<const ResultRow> rows,
                         std::span<const SummaryRow> summary) {
  const fs::path root(dir);
  ensure_dir(root / "plotdata");
  write_text_file((root / "results.csv").string(), results_csv(rows));
  write_text_file((root / "summary.csv").string(), summary_csv(summary));

  std::map<std::string, std::ostringstream> mse;
  std::map<std::string, std::ostringstream> regret;
  for (const auto& s : summary) {
    auto& m = mse[s.dataset];
    if (m.tellp() == 0) m << "method,mse,mse_lo,mse_hi\n";
    m << field(s.method) << ',' << format_real(s.mse) << ',' << format_real(s.mse_lo) << ','
      << format_real(s.mse_hi) << '\n';
    if (!std::isfinite(s.regret)) continue;
    auto& r = regret[s.dataset];
    if (r.tellp() == 0) r << "method,regret,regret_lo,regret_hi\n";
    r << field(s.method) << ',' << format_real(s.regret) << ',' << format_real(s.regret_lo) << ','
      << format_real(s.regret_hi) << '\n';
  }
  for (const auto& [ds, text] : mse) {
    write_text_file((root / "plotdata" / ("mse_" + safe_file_stem(ds) + ".csv")).string(), text.str());
  }
  for (const auto& [ds, text] : regret) {
    write_text_file((root / "plotdata" / ("regret_" + safe_file_stem(ds) + ".csv")).string(),
                    text.str());
  }
}

void write_sweep_outputs(const std::string& dir, std::span<const ResultRow> rows,
                         std::span<const SummaryRow> summary) {
  const fs::path root(dir);
  ensure_dir(root / "plotdata");
  write_text_file((root / "regret.csv").string(), sweep_csv(rows));
  write_text_file((root / "regret_summary.csv").string(), sweep_summary_csv(summary));
  std::ostringstream plot;
  plot << "dataset,method,size,median_regret,regret_lo,regret_hi\n";
  for (const auto& s : summary) {
    if (!std::isfinite(s.regret)) continue;
    plot << field(s.dataset) << ',' << field(s.method) << ',' << s.sample_size << ','
         << format_real(s.median_regret) << ',' << format_real(s.regret_lo) << ','
         << format_real(s.regret_hi) << '\n';
  }
  write_text_file((root / "plotdata" / "regret_by_size.csv").string(), plot.str());
}

std::string classification_to_json(const ClassificationDataset& data) {
  json j;
  j["n"] = data.n();
  j["d"] = data.d;
  j["m"] = data.m;
  json rows = json::array();
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto r = data.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["features"] = std::move(rows);
  j["labels"] = data.labels;
  j["label_names"] = data.label_names;
  return j.dump();
}

ClassificationDataset classification_from_json(std::string_view text) {
  const json j = detail::parse_json(text, "classification dataset");
  for (const char* key : {"d", "m", "features", "labels"}) {
    require(j.contains(key), std::string("classification JSON is missing \"") + key + "\"");
  }
  try {
    ClassificationDataset data;
    data.d = j["d"].get<std::size_t>();
    data.m = j["m"].get<std::size_t>();
    data.labels = j["labels"].get<std::vector<int>>();
    if (j.contains("label_names")) data.label_names = j["label_names"].get<std::vector<std::string>>();
    const auto& rows = j["features"];
    require(rows.is_array() && rows.size() == data.labels.size(),
            "\"features\" must have one row per label");
    for (const auto& row : rows) {
      require(row.is_array() && row.size() == data.d, "every feature row must have d entries");
      for (const auto& v : row) data.features.push_back(v.get<double>());
    }
    data.validate();
    return data;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("classification JSON has a wrongly typed field: ") + e.what());
  }
}

ClassificationDataset load_classification_any(const std::string& path, bool min_max) {
  if (fs::path(path).extension() == ".json") {
    auto data = classification_from_json(read_text_file(path));
    if (min_max) min_max_scale(data);
    return data;
  }
  CsvOptions options;
  options.min_max_scale = min_max;
  return load_classification_csv(path, options);
}

}  // namespace opecv::harness
