#include "ncr/graph.hpp"
#include "ncr/kernels.hpp"
#include "ncr/synth.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace ncr;

namespace {

struct Fixture {
  AdjacencyMatrix A;
  Matrix X;
  Matrix Z;
  Vector r;

  Fixture(Index n, Index d) {
    Rng rng(1);
    A = gen_er(n, 0.05, true, rng);
    X = gen_covariates(n, CovSpec{d, 0.8}, rng);
    Z = Matrix::Random(n, 2 * d);
    r = Vector::Random(n);
  }

  kernels::CsrView csr() const { return A.csr(); }
};

const Fixture& fixture(Index n, Index d) {
  static std::map<std::pair<Index, Index>, Fixture> cache;
  auto it = cache.find({n, d});
  if (it == cache.end()) it = cache.emplace(std::pair{n, d}, Fixture(n, d)).first;
  return it->second;
}

template <Matrix (*F)(const kernels::CsrView&, double, const Matrix&)>
void BM_convolve(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(F(f.csr(), 0.1, f.X));
}

template <Matrix (*F)(const Matrix&)>
void BM_gram(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(F(f.Z));
}

template <Vector (*F)(const Matrix&, const Vector&)>
void BM_cross(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(F(f.Z, f.r));
}

}  // namespace

BENCHMARK(BM_convolve<kernels::serial::convolve>)->Args({500, 500})->Args({2000, 100});
BENCHMARK(BM_convolve<kernels::parallel::convolve>)->Args({500, 500})->Args({2000, 100});
BENCHMARK(BM_gram<kernels::serial::gram>)->Args({500, 250})->Args({2000, 50});
BENCHMARK(BM_gram<kernels::parallel::gram>)->Args({500, 250})->Args({2000, 50});
BENCHMARK(BM_cross<kernels::serial::cross_product>)->Args({500, 500})->Args({2000, 100});
BENCHMARK(BM_cross<kernels::parallel::cross_product>)->Args({500, 500})->Args({2000, 100});

BENCHMARK_MAIN();
