#include <benchmark/benchmark.h>

#include <map>
#include <optional>

#include "opecv/banditgen.hpp"
#include "opecv/estimators.hpp"
#include "opecv/harness/config.hpp"
#include "opecv/reward_model.hpp"
#include "opecv/selection.hpp"

namespace {

// Synthetic problem shaped like the larger benchmark datasets, with n logged samples.
const opecv::BanditProblem& problem(std::size_t n) {
  static std::map<std::size_t, opecv::BanditProblem> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    auto rng = opecv::make_rng({7, n});
    auto data = opecv::make_synthetic_classification(2 * n, 20, 5, rng);
    opecv::min_max_scale(data);
    it = cache.emplace(n, opecv::build_problem(data, 1.0, 10.0, rng)).first;
  }
  return it->second;
}

void BM_RidgeFit(benchmark::State& state) {
  const auto& p = problem(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(opecv::fit_ridge(p.logged));
}
BENCHMARK(BM_RidgeFit)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_Estimate(benchmark::State& state) {
  const auto& p = problem(5000);
  const auto kind = opecv::kAllKinds[state.range(0)];
  std::optional<double> hyper;
  if (kind == opecv::EstimatorKind::IPSLambda) {
    hyper = 0.5;
  } else if (kind == opecv::EstimatorKind::GroupIPS) {
    hyper = 8.0;
  } else if (opecv::is_tunable(kind)) {
    hyper = 4.0;
  }
  const auto spec = opecv::EstimatorSpec::make(kind, hyper);
  const auto model = opecv::fit_ridge(p.logged);
  state.SetLabel(spec.label());
  for (auto _ : state) {
    benchmark::DoNotOptimize(opecv::estimate_with_model(spec, p.logged, p.target, model, &p.logging));
  }
}
BENCHMARK(BM_Estimate)->DenseRange(0, 9)->Unit(benchmark::kMicrosecond);

void BM_OcvIpsDmDr(benchmark::State& state) {
  const auto& p = problem(static_cast<std::size_t>(state.range(0)));
  const auto candidates = opecv::harness::resolve_bundle("ips-dm-dr", p.logged, p.target);
  const auto validator = opecv::EstimatorSpec::make(opecv::EstimatorKind::DR);
  opecv::OcvOptions options;
  options.logging = &p.logging;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(opecv::ocv_select(p.target, p.logged, candidates, validator, 10, seed++, options));
  }
}
BENCHMARK(BM_OcvIpsDmDr)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
