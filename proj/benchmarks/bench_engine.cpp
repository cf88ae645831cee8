#include <benchmark/benchmark.h>

#include "gossa/engine.hpp"
#include "gossa/montecarlo.hpp"

using namespace gossa;

static void BM_Iterate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int d = 2;
  GossipScheme scheme = GossipScheme::pairwise(NetworkGraph::complete(n));
  std::mt19937_64 rng(1);
  GossipMatrix w = sample_gossip(scheme, 1, rng);
  StackedState s = make_initial_state(InitSpec::box(-1, 1), n, d, 1, 0);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(n * d);
  for (auto _ : state) {
    s = iterate(s, w, y, 1e-4);
    benchmark::DoNotOptimize(s.theta.data());
  }
}
BENCHMARK(BM_Iterate)->Arg(5)->Arg(40)->Arg(200);

static void BM_QuadraticTrajectory(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  QuadraticGaussianProblem problem(Eigen::MatrixXd::Identity(1, 1),
                                   Eigen::VectorXd::Zero(1), 1.0, n);
  GossipScheme scheme = GossipScheme::pairwise(NetworkGraph::complete(n));
  StepSchedule schedule(0.5, 0.7);
  for (auto _ : state) {
    StackedState init = make_initial_state(InitSpec::box(-1, 1), n, 1, 1, 0);
    std::mt19937_64 rng = make_stream(1, 0, StreamChannel::Trajectory);
    TrajectoryResult res = run_trajectory(problem, scheme, schedule, 10000, init, rng);
    benchmark::DoNotOptimize(res.final_state.theta.data());
  }
}
BENCHMARK(BM_QuadraticTrajectory)->Unit(benchmark::kMillisecond)->Arg(5)->Arg(40);

static void BM_LocalizationTrajectory(benchmark::State& state) {
  auto sensors = draw_uniform_points(40, 0.0, 50.0, 2012);
  LocalizationProblem problem(sensors, Eigen::Vector2d(25.0, 25.0), 1e-2);
  GossipScheme scheme =
      GossipScheme::pairwise(NetworkGraph::geometric_from_points(sensors, 15.0));
  StepSchedule schedule(1e-3, 0.7);
  Eigen::VectorXd star(2);
  star << 25.0, 25.0;
  for (auto _ : state) {
    StackedState init = make_initial_state(InitSpec::near_point(star, 0.1), 40, 2, 1, 0);
    std::mt19937_64 rng = make_stream(1, 0, StreamChannel::Trajectory);
    TrajectoryResult res = run_trajectory(problem, scheme, schedule, 10000, init, rng);
    benchmark::DoNotOptimize(res.final_state.theta.data());
  }
}
BENCHMARK(BM_LocalizationTrajectory)->Unit(benchmark::kMillisecond);
