#include <benchmark/benchmark.h>

#include "gossa/gossip.hpp"

using namespace gossa;

static void BM_SamplePairwise(benchmark::State& state) {
  GossipScheme scheme = GossipScheme::pairwise(
      NetworkGraph::geometric(static_cast<int>(state.range(0)), 15.0, 7));
  std::mt19937_64 rng(1);
  std::int64_t step = 1;
  for (auto _ : state) {
    GossipMatrix w = sample_gossip(scheme, step++, rng);
    benchmark::DoNotOptimize(w.entries.data());
  }
}
BENCHMARK(BM_SamplePairwise)->Arg(10)->Arg(40)->Arg(100);

static void BM_SampleBroadcast(benchmark::State& state) {
  GossipScheme scheme = GossipScheme::broadcast(
      NetworkGraph::geometric(static_cast<int>(state.range(0)), 15.0, 7), 0.5);
  std::mt19937_64 rng(1);
  std::int64_t step = 1;
  for (auto _ : state) {
    GossipMatrix w = sample_gossip(scheme, step++, rng);
    benchmark::DoNotOptimize(w.entries.data());
  }
}
BENCHMARK(BM_SampleBroadcast)->Arg(10)->Arg(40)->Arg(100);

static void BM_ContractionCoefficient(benchmark::State& state) {
  GossipScheme scheme = GossipScheme::pairwise(
      NetworkGraph::geometric(static_cast<int>(state.range(0)), 15.0, 7));
  for (auto _ : state) {
    benchmark::DoNotOptimize(contraction_coefficient(scheme));
  }
}
BENCHMARK(BM_ContractionCoefficient)->Unit(benchmark::kMillisecond)->Arg(10)->Arg(40);
