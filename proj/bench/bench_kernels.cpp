// Serial reference kernels against the OpenMP-parallel ones, same shapes.
// Run with --benchmark_filter=matmul to narrow, --benchmark_repetitions=N
// for variance. The parallel kernels fall back to the serial path below a
// flop threshold, so small shapes should report near-identical timings.
#include <benchmark/benchmark.h>

#include "loreopt/kernels.hpp"
#include "loreopt/matrix.hpp"
#include "loreopt/rng.hpp"

namespace {

loreopt::Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  loreopt::RandomSource rng(seed);
  loreopt::Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.next_normal();
  return m;
}

template <void (*Fn)(const loreopt::Matrix&, const loreopt::Matrix&, loreopt::Matrix&)>
void bench_matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const loreopt::Matrix a = random_matrix(n, n, 1);
  const loreopt::Matrix b = random_matrix(n, n, 2);
  loreopt::Matrix out(n, n);
  for (auto _ : state) {
    Fn(a, b, out);
    benchmark::DoNotOptimize(out.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
}

template <void (*Fn)(const loreopt::Matrix&, const loreopt::Matrix&, loreopt::Matrix&)>
void bench_elementwise(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const loreopt::Matrix a = random_matrix(n, n, 3);
  const loreopt::Matrix b = random_matrix(n, n, 4);
  loreopt::Matrix out(n, n);
  for (auto _ : state) {
    Fn(a, b, out);
    benchmark::DoNotOptimize(out.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(n) * n);
}

}  // namespace

BENCHMARK(bench_matmul<loreopt::serial::matmul>)->Name("serial/matmul")->Arg(64)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(bench_matmul<loreopt::kernels::matmul>)->Name("parallel/matmul")->Arg(64)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(bench_matmul<loreopt::serial::matmul_at_b>)->Name("serial/matmul_at_b")->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(bench_matmul<loreopt::kernels::matmul_at_b>)->Name("parallel/matmul_at_b")->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(bench_matmul<loreopt::serial::matmul_a_bt>)->Name("serial/matmul_a_bt")->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(bench_matmul<loreopt::kernels::matmul_a_bt>)->Name("parallel/matmul_a_bt")->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(bench_elementwise<loreopt::serial::hadamard>)->Name("serial/hadamard")->Arg(256)->Arg(1024);
BENCHMARK(bench_elementwise<loreopt::kernels::hadamard>)->Name("parallel/hadamard")->Arg(256)->Arg(1024);
BENCHMARK(bench_elementwise<loreopt::serial::add>)->Name("serial/add")->Arg(256)->Arg(1024);
BENCHMARK(bench_elementwise<loreopt::kernels::add>)->Name("parallel/add")->Arg(256)->Arg(1024);

BENCHMARK_MAIN();
