// Parallel kernels against their serial references.

#include "hybridtele/averages.hpp"
#include "hybridtele/channels.hpp"

#include <benchmark/benchmark.h>

using namespace hybridtele;

namespace {

void kraus_args(benchmark::internal::Benchmark* b) {
  for (double a : {0.5, 1.0, 2.0}) b->Arg(default_truncation(a));
}

template <bool Parallel>
void BM_ApplyKraus(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const auto rho = DensityOperator::from_pure(hybrid_pc_initial(1.0, dim));
  const auto kraus = damping_kraus(ModeKind::fock(dim), 0.8);
  for (auto _ : state) {
    auto out = Parallel ? apply_kraus(rho, 1, kraus) : apply_kraus_reference(rho, 1, kraus);
    benchmark::DoNotOptimize(out);
  }
}

template <bool Parallel>
void BM_BlochAverage(benchmark::State& state) {
  const auto p = ChannelParams::from_r(0.5, 1.0);
  const Protocol cp{Direction::CtoP};
  const SphereFunction f = [&](const BlochInput& in) { return per_input_fidelity(cp, in, p); };
  const QuadratureSpec spec{static_cast<int>(state.range(0)), 2 * static_cast<int>(state.range(0))};
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? bloch_average(f, spec) : bloch_average_reference(f, spec));
  }
}

}  // namespace

BENCHMARK(BM_ApplyKraus<true>)->Apply(kraus_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplyKraus<false>)->Apply(kraus_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlochAverage<true>)->Arg(64)->Arg(256);
BENCHMARK(BM_BlochAverage<false>)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
