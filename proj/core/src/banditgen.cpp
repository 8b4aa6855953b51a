#include "opecv/banditgen.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "opecv/error.hpp"
#include "opecv/serialization.hpp"

namespace opecv {

ClassificationDataset ClassificationDataset::subset(std::span<const std::size_t> indices) const {
  ClassificationDataset out;
  out.d = d;
  out.m = m;
  out.label_names = label_names;
  out.features.reserve(indices.size() * d);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    require(i < n(), "subset index out of range");
    const auto r = row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

void ClassificationDataset::validate() const {
  require(m >= 1, "classification data needs at least one class");
  require(features.size() == labels.size() * d, "feature block does not match n x d");
  for (int y : labels) {
    require(y >= 0 && static_cast<std::size_t>(y) < m, "class label out of range");
  }
  for (double v : features) require(std::isfinite(v), "non-finite feature value");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double standard_normal(Rng& rng) {
  // Box-Muller; 1 - u keeps the logarithm finite.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid_stable(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> feature_map(const ClassificationDataset& data) {
  return {data.features.data(), static_cast<Eigen::Index>(data.n()), static_cast<Eigen::Index>(data.d)};
}

double objective_from_scores(const Eigen::VectorXd& z, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& theta, double l2) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) total += softplus(z[i]) - y[i] * z[i];
  return total / static_cast<double>(z.size()) + 0.5 * l2 * theta.squaredNorm();
}

}  // namespace

ClassificationDataset parse_classification_csv(std::string_view text, const CsvOptions& options,
                                               const std::string& source) {
  ClassificationDataset out;
  std::unordered_map<std::string, int> classes;
  std::size_t columns = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto newline = text.find('\n', pos);
    const auto line = trim(text.substr(pos, newline == std::string_view::npos ? text.size() - pos
                                                                             : newline - pos));
    pos = newline == std::string_view::npos ? text.size() + 1 : newline + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (columns == 0) {
      columns = fields.size();
      require(columns >= 2, where + ": need at least one feature column and a label column");
      out.d = columns - 1;
    }
    require(fields.size() == columns, where + ": expected " + std::to_string(columns) +
                                          " columns, found " + std::to_string(fields.size()));
    const auto label_col = options.label_column < 0
                               ? static_cast<long>(columns) + options.label_column
                               : static_cast<long>(options.label_column);
    require(label_col >= 0 && label_col < static_cast<long>(columns),
            where + ": label column out of range");
    for (std::size_t c = 0; c < columns; ++c) {
      const auto field = fields[c];
      if (static_cast<long>(c) == label_col) {
        require(!field.empty(), where + ": empty label");
        const auto [it, inserted] =
            classes.emplace(std::string(field), static_cast<int>(classes.size()));
        if (inserted) out.label_names.emplace_back(field);
        out.labels.push_back(it->second);
        continue;
      }
      double value = 0.0;
      const auto* begin = field.data();
      const auto* end = field.data() + field.size();
      const auto [ptr, ec] = std::from_chars(begin, end, value);
      require(!field.empty() && ec == std::errc() && ptr == end && std::isfinite(value),
              where + ": non-numeric feature '" + std::string(field) + "' in column " +
                  std::to_string(c + 1));
      out.features.push_back(value);
    }
  }
  require(!out.labels.empty(), source + ": no data rows");
  require(classes.size() >= 2, source + ": only one class present");
  out.m = classes.size();
  if (options.min_max_scale) min_max_scale(out);
  out.validate();
  return out;
}

ClassificationDataset load_classification_csv(const std::string& path, const CsvOptions& options) {
  return parse_classification_csv(read_text_file(path), options, path);
}

void min_max_scale(ClassificationDataset& dataset) {
  const std::size_t n = dataset.n();
  for (std::size_t j = 0; j < dataset.d; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, dataset.features[i * dataset.d + j]);
      hi = std::max(hi, dataset.features[i * dataset.d + j]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      double& v = dataset.features[i * dataset.d + j];
      v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    }
  }
}

ClassificationDataset make_synthetic_classification(std::size_t n, std::size_t d, std::size_t m,
                                                    Rng& rng, double separation) {
  require(n >= 1 && d >= 1 && m >= 2, "synthetic data needs n >= 1, d >= 1 and m >= 2");
  std::vector<double> centres(m * d);
  for (double& c : centres) c = separation * standard_normal(rng);
  ClassificationDataset out;
  out.d = d;
  out.m = m;
  out.features.reserve(n * d);
  out.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::size_t>(uniform_index(rng, m));
    for (std::size_t j = 0; j < d; ++j) out.features.push_back(centres[y * d + j] + standard_normal(rng));
    out.labels.push_back(static_cast<int>(y));
  }
  return out;
}

std::pair<ClassificationDataset, ClassificationDataset> split_halves(const ClassificationDataset& data,
                                                                     Rng& rng) {
  const std::size_t n = data.n();
  require(n >= 2, "cannot split fewer than two examples");
  auto order = sample_without_replacement(n, n, rng);
  const std::size_t nb = (n + 1) / 2;
  std::vector<std::size_t> bandit(order.begin(), order.begin() + static_cast<long>(nb));
  std::vector<std::size_t> policy(order.begin() + static_cast<long>(nb), order.end());
  std::sort(bandit.begin(), bandit.end());
  std::sort(policy.begin(), policy.end());
  return {data.subset(bandit), data.subset(policy)};
}

double logistic_objective(const ClassificationDataset& data, int c, std::span<const double> theta,
                          double l2) {
  require(theta.size() == data.d, "theta length must equal d");
  const auto x = feature_map(data);
  const Eigen::Map<const Eigen::VectorXd> t(theta.data(), static_cast<Eigen::Index>(theta.size()));
  Eigen::VectorXd y(static_cast<Eigen::Index>(data.n()));
  for (std::size_t i = 0; i < data.n(); ++i) y[static_cast<Eigen::Index>(i)] = data.labels[i] == c;
  const Eigen::VectorXd z = x * t;
  return objective_from_scores(z, y, t, l2);
}

std::vector<std::vector<double>> fit_one_vs_rest(const ClassificationDataset& data,
                                                 const LogisticOptions& options) {
  require(data.n() >= 1, "logistic fit needs data");
  require(options.step > 0.0 && options.l2 >= 0.0, "invalid logistic options");
  const auto x = feature_map(data);
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto d = static_cast<Eigen::Index>(data.d);
  std::vector<std::vector<double>> thetas(data.m, std::vector<double>(data.d, 0.0));
  std::vector<bool> present(data.m, false);
  for (int y : data.labels) present[static_cast<std::size_t>(y)] = true;

  Eigen::VectorXd y(n);
  Eigen::VectorXd residual(n);
  for (std::size_t c = 0; c < data.m; ++c) {
    if (!present[c]) continue;
    for (Eigen::Index i = 0; i < n; ++i) {
      y[i] = data.labels[static_cast<std::size_t>(i)] == static_cast<int>(c) ? 1.0 : 0.0;
    }
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    double current = objective_from_scores(z, y, theta, options.l2);
    double step = options.step;
    for (std::size_t it = 0; it < options.iterations; ++it) {
      for (Eigen::Index i = 0; i < n; ++i) residual[i] = sigmoid_stable(z[i]) - y[i];
      const Eigen::VectorXd grad =
          x.transpose() * residual / static_cast<double>(n) + options.l2 * theta;
      if (grad.squaredNorm() == 0.0) break;
      const Eigen::VectorXd candidate = theta - step * grad;
      Eigen::VectorXd z_candidate = x * candidate;
      const double next = objective_from_scores(z_candidate, y, candidate, options.l2);
      if (next <= current) {
        theta = candidate;
        z = std::move(z_candidate);
        current = next;
      } else {
        step *= 0.5;
      }
    }
    std::copy(theta.data(), theta.data() + d, thetas[c].begin());
  }
  return thetas;
}

std::vector<std::vector<double>> fit_logistic_models(const ClassificationDataset& policy_half, Rng& rng,
                                                     const LogisticOptions& options) {
  const std::size_t n = policy_half.n();
  require(n >= 1, "logistic fit needs a non-empty policy half");
  std::vector<std::size_t> draw(n);
  for (auto& i : draw) i = static_cast<std::size_t>(uniform_index(rng, n));
  return fit_one_vs_rest(policy_half.subset(draw), options);
}

PolicyPair make_policies(std::vector<std::vector<double>> theta0, std::vector<std::vector<double>> theta1,
                         double beta0, double beta1) {
  return {SoftmaxLinearPolicy(std::move(theta0), beta0), SoftmaxLinearPolicy(std::move(theta1), beta1)};
}

double true_value(const SoftmaxLinearPolicy& policy, const ClassificationDataset& bandit_half) {
  require(bandit_half.n() >= 1, "true value needs a non-empty bandit half");
  require(policy.m() == bandit_half.m && policy.d() == bandit_half.d,
          "policy shape does not match the dataset");
  std::vector<double> probs(policy.m());
  double total = 0.0;
  for (std::size_t i = 0; i < bandit_half.n(); ++i) {
    policy.action_probs(bandit_half.row(i), probs);
    total += probs[static_cast<std::size_t>(bandit_half.labels[i])];
  }
  return total / static_cast<double>(bandit_half.n());
}

std::size_t sample_action(std::span<const double> probs, double u) {
  require(!probs.empty(), "cannot sample from an empty distribution");
  double cumulative = 0.0;
  std::size_t last_positive = probs.size();
  for (std::size_t a = 0; a < probs.size(); ++a) {
    if (probs[a] <= 0.0) continue;
    last_positive = a;
    cumulative += probs[a];
    if (u < cumulative) return a;
  }
  require(last_positive < probs.size(), "distribution has no positive mass");
  // Rounding left the total just below u.
  return last_positive;
}

LoggedDataset generate_logged(const ClassificationDataset& bandit_half,
                              const SoftmaxLinearPolicy& logging, Rng& rng) {
  require(logging.m() == bandit_half.m && logging.d() == bandit_half.d,
          "logging policy shape does not match the dataset");
  const std::size_t n = bandit_half.n();
  std::vector<int> actions(n);
  std::vector<double> rewards(n);
  std::vector<double> propensities(n);
  std::vector<double> probs(logging.m());
  for (std::size_t i = 0; i < n; ++i) {
    logging.action_probs(bandit_half.row(i), probs);
    const std::size_t a = sample_action(probs, uniform01(rng));
    actions[i] = static_cast<int>(a);
    rewards[i] = static_cast<int>(a) == bandit_half.labels[i] ? 1.0 : 0.0;
    propensities[i] = probs[a];
  }
  return LoggedDataset(bandit_half.d, bandit_half.m, bandit_half.features, std::move(actions),
                       std::move(rewards), std::move(propensities));
}

BanditProblem build_problem(const ClassificationDataset& data, double beta0, double beta1, Rng& rng,
                            const LogisticOptions& options) {
  data.validate();
  require(data.n() >= 2 * data.m, "dataset needs at least 2m examples to build a bandit problem");
  require(std::isfinite(beta0) && std::isfinite(beta1), "inverse temperatures must be finite");
  BanditProblem p;
  std::tie(p.bandit_half, p.policy_half) = split_halves(data, rng);
  auto theta0 = fit_logistic_models(p.policy_half, rng, options);
  auto theta1 = fit_logistic_models(p.policy_half, rng, options);
  auto policies = make_policies(std::move(theta0), std::move(theta1), beta0, beta1);
  p.logging = std::move(policies.logging);
  p.target = std::move(policies.target);
  p.true_value = true_value(p.target, p.bandit_half);
  p.logged = generate_logged(p.bandit_half, p.logging, rng);
  return p;
}

BanditProblem subsample_problem(const BanditProblem& problem, std::size_t size, Rng& rng) {
  const std::size_t available = problem.bandit_half.n();
  require(size >= 1 && size <= available,
          "subsample size " + std::to_string(size) + " exceeds the bandit half (" +
              std::to_string(available) + " examples)");
  auto picked = sample_without_replacement(available, size, rng);
  std::sort(picked.begin(), picked.end());
  BanditProblem out;
  out.bandit_half = problem.bandit_half.subset(picked);
  out.policy_half = problem.policy_half;
  out.logging = problem.logging;
  out.target = problem.target;
  out.true_value = true_value(out.target, out.bandit_half);
  out.logged = generate_logged(out.bandit_half, out.logging, rng);
  return out;
}

}  // namespace opecv
