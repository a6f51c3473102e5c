#include <benchmark/benchmark.h>

#include "picarz/geometry.hpp"
#include "picarz/likelihoods.hpp"
#include "picarz/pipeline.hpp"
#include "picarz/random.hpp"
#include "picarz/simulation.hpp"
#include "picarz/spectral.hpp"

using namespace picarz;

namespace {

std::vector<Point2> uniform_sites(Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point2> s(static_cast<std::size_t>(n));
  for (auto& p : s) p = {rng.uniform(), rng.uniform()};
  return s;
}

void BM_MoranBasis(benchmark::State& state) {
  const auto sites = uniform_sites(1000, 1);
  const TriangleMesh mesh = build_mesh(sites, {MeshMode::regular_lattice, state.range(0), 0.1});
  const AdjacencyMatrix graph = adjacency(mesh);
  for (auto _ : state) benchmark::DoNotOptimize(moran_basis(graph, state.range(1)));
  state.counters["vertices"] = static_cast<double>(mesh.vertices().size());
}
BENCHMARK(BM_MoranBasis)->Args({400, 50})->Args({1600, 100})->Args({5888, 250})->Unit(benchmark::kMillisecond);

void BM_Projector(benchmark::State& state) {
  const auto sites = uniform_sites(state.range(0), 2);
  const TriangleMesh mesh = build_mesh(sites, {MeshMode::regular_lattice, 1600, 0.1});
  for (auto _ : state) benchmark::DoNotOptimize(build_projector(mesh, sites));
}
BENCHMARK(BM_Projector)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_TotalLoglik(benchmark::State& state) {
  const Index n = state.range(0);
  Rng rng(3);
  Eigen::VectorXd z(n), pi(n), loc(n);
  for (Index i = 0; i < n; ++i) {
    pi[i] = rng.uniform(0.05, 0.95);
    loc[i] = rng.uniform(0.5, 3.0);
    z[i] = rng.bernoulli(pi[i]) ? static_cast<double>(rng.zero_truncated_poisson(loc[i])) : 0.0;
  }
  const TwoPartFamily fam{Family::hurdle_count, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(total_loglik(fam, z, pi, loc, 0.0));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_TotalLoglik)->Arg(1000)->Arg(100000);

// Cost of a short PICAR chain at fixed ranks; per-iteration time is the
// reported time divided by the iteration count.
void BM_SamplerIterations(benchmark::State& state) {
  SimulationConfig sc;
  sc.family.tag = Family::hurdle_count;
  sc.n = state.range(0);
  sc.n_cv = 0;
  const SyntheticDataset d = generate_dataset(sc, 4);
  PipelineOptions o;
  o.p_o = o.p_p = o.p_max = 50;
  o.sampler.iterations = 1000;
  o.sampler.burn_in = 500;
  o.sampler.thinning = 10;
  o.sampler.seed = 5;
  const SpatialBasis b = build_spatial_basis(d, o.mesh, o.p_max);
  for (auto _ : state) benchmark::DoNotOptimize(fit_model(d, o, LatentKind::picar, &b));
  state.SetItemsProcessed(state.iterations() * o.sampler.iterations);
}
BENCHMARK(BM_SamplerIterations)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
