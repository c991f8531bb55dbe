#include <benchmark/benchmark.h>

#include "blockade/dynamics.hpp"
#include "blockade/model.hpp"

namespace {

using namespace blockade;

SystemParams fig3_params(double Delta) {
  return SystemParams::constrained(Delta, 15.0, 40.0 / std::sqrt(2.0), 0.1,
                                   800.0, 0.05);
}

void BM_LiouvillianAssembly(benchmark::State& state) {
  const int trunc = static_cast<int>(state.range(0));
  const CompositeSpace space = make_space(trunc);
  const SystemParams p = fig3_params(32.0);
  const SparseOperator h =
      build_effective_hamiltonian(p, space) - fast_frame_generator(p, space);
  const std::vector<DissipatorSpec> diss = build_dissipators(p, space);
  for (auto _ : state) {
    Liouvillian L = build_liouvillian(h, diss);
    benchmark::DoNotOptimize(L.superoperator.nonZeros());
  }
}
BENCHMARK(BM_LiouvillianAssembly)->Arg(3)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_SuperoperatorMatvec(benchmark::State& state) {
  const int trunc = static_cast<int>(state.range(0));
  const CompositeSpace space = make_space(trunc);
  const SystemParams p = fig3_params(32.0);
  const SparseOperator h =
      build_effective_hamiltonian(p, space) - fast_frame_generator(p, space);
  const Liouvillian L = build_liouvillian(h, build_dissipators(p, space));
  Eigen::VectorXcd x = Eigen::VectorXcd::Random(L.side());
  Eigen::VectorXcd y(L.side());
  for (auto _ : state) {
    y.noalias() = L.superoperator * x;
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_SuperoperatorMatvec)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_SteadyStateSmall(benchmark::State& state) {
  const int trunc = static_cast<int>(state.range(0));
  const CompositeSpace space = make_space(trunc);
  const SystemParams p = fig3_params(32.0);
  const SparseOperator h =
      build_effective_hamiltonian(p, space) - fast_frame_generator(p, space);
  const Liouvillian L = build_liouvillian(h, build_dissipators(p, space));
  for (auto _ : state) {
    DensityMatrix rho = steady_state(L);
    benchmark::DoNotOptimize(rho.matrix().data());
  }
}
BENCHMARK(BM_SteadyStateSmall)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
