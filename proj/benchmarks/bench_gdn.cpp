#include <benchmark/benchmark.h>

#include <random>

#include "gdn/baselines.hpp"
#include "gdn/diffusion.hpp"
#include "gdn/linalg.hpp"
#include "gdn/model.hpp"
#include "gdn/rng.hpp"

using namespace gdn;

namespace {

SymMatrix random_observation(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Matrix x(n, 2 * n);
  for (double& v : x.values()) v = nd(rng);
  Matrix c = matmul(x, transpose(x));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) c(j, i) = c(i, j);
  const SymMatrix s(c);
  return SymMatrix(s.matrix() * (1.0 / max_abs_eigval(s)));
}

}  // namespace

static void BM_SymEig(benchmark::State& state) {
  const SymMatrix a = random_observation(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(sym_eig(a));
}
BENCHMARK(BM_SymEig)->Arg(20)->Arg(68);

static void BM_Forward(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const GdnParams p = init_params(Architecture{8, 8}, rng);
  const SymMatrix a_o = random_observation(n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(forward(a_o, p));
}
BENCHMARK(BM_Forward)->Arg(20)->Arg(68);

static void BM_ForwardBackward(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  const GdnParams p = init_params(Architecture{8, 8}, rng);
  const SymMatrix a_o = random_observation(n, 5);
  const Matrix up(n, n, 1.0);
  for (auto _ : state) {
    const ForwardResult f = forward(a_o, p);
    benchmark::DoNotOptimize(backward(f.tape, p, up));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(20)->Arg(68);

static void BM_Glasso(benchmark::State& state) {
  const SymMatrix s = covariance_to_correlation(random_observation(20, 6));
  for (auto _ : state) benchmark::DoNotOptimize(glasso(s, 0.05, 1e-6, 500));
}
BENCHMARK(BM_Glasso);

BENCHMARK_MAIN();
