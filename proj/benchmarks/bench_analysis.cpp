#include <benchmark/benchmark.h>

#include "gossa/analysis.hpp"

using namespace gossa;

static void BM_SolveLyapunov(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Eigen::MatrixXd h = -Eigen::MatrixXd::Identity(d, d);
  for (int k = 0; k < d; ++k) h(k, (k + 1) % d) += 0.3;
  Eigen::MatrixXd upsilon = Eigen::MatrixXd::Identity(d, d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_lyapunov(h, upsilon));
  }
}
BENCHMARK(BM_SolveLyapunov)->Arg(2)->Arg(4);

static void BM_EmpiricalCovariance(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::VectorXd> samples;
  for (int s = 0; s < state.range(0); ++s) {
    Eigen::VectorXd v(2);
    v << gauss(rng), gauss(rng);
    samples.push_back(v);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(empirical_covariance(samples));
  }
}
BENCHMARK(BM_EmpiricalCovariance)->Arg(180)->Arg(1000);

BENCHMARK_MAIN();
