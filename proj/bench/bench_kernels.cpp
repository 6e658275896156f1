#include "fracdrift/nonlocal_solver.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

using namespace fracdrift;

static void BM_assemble_1d_parallel(benchmark::State& state) {
  auto K = StableKernel::fractional_laplacian(0.7, 1);
  auto g = Grid1D::make(0.0, 1.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_operator(K, g, 1.0).A.data());
  state.counters["threads"] = omp_get_max_threads();
}

static void BM_assemble_1d_serial(benchmark::State& state) {
  auto K = StableKernel::fractional_laplacian(0.7, 1);
  auto g = Grid1D::make(0.0, 1.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_operator_reference(K, g, 1.0).A.data());
}

static void BM_apply_2d_parallel(benchmark::State& state) {
  StableKernel K(0.6, 2, {1.0, 0.3}, 0.2);
  auto op = assemble_operator_2d(K, Grid2D::disk({0.0, 0.0}, 1.0, static_cast<int>(state.range(0))), {1.0, 0.0});
  Eigen::VectorXd u = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(op.grid.size()));
  for (auto _ : state) benchmark::DoNotOptimize(op.apply(u).data());
  state.counters["unknowns"] = static_cast<double>(op.grid.size());
  state.counters["threads"] = omp_get_max_threads();
}

static void BM_apply_2d_serial(benchmark::State& state) {
  StableKernel K(0.6, 2, {1.0, 0.3}, 0.2);
  auto op = assemble_operator_2d(K, Grid2D::disk({0.0, 0.0}, 1.0, static_cast<int>(state.range(0))), {1.0, 0.0});
  Eigen::VectorXd u = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(op.grid.size()));
  for (auto _ : state) benchmark::DoNotOptimize(op.apply_serial(u).data());
  state.counters["unknowns"] = static_cast<double>(op.grid.size());
}

BENCHMARK(BM_assemble_1d_parallel)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_assemble_1d_serial)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_apply_2d_parallel)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_apply_2d_serial)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
