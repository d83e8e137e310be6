#include <benchmark/benchmark.h>

#include "qlink/channel.hpp"
#include "qlink/dual_rail.hpp"
#include "qlink/mixing.hpp"
#include "qlink/random.hpp"
#include "qlink/zero_error.hpp"

using namespace qlink;

static void BM_HermExp(benchmark::State& state) {
  Rng rng(1);
  const Matrix h = random_hermitian(state.range(0), rng);
  for (auto _ : state) benchmark::DoNotOptimize(herm_exp(h, 0.3));
}
BENCHMARK(BM_HermExp)->Arg(16)->Arg(64)->Arg(256);

static void BM_GreedyCode(benchmark::State& state) {
  Rng rng(2);
  const auto ch = finite_memory_channel(random_unitary(4, rng), 2, 2, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(greedy_classical_code(ch).size());
}
BENCHMARK(BM_GreedyCode)->Arg(5)->Arg(7)->Arg(9)->Unit(benchmark::kMillisecond);

static void BM_ProtocolRun(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DualRailProtocol p(LinkModel::uniform(3, 1.0, 0.8), Schedule::uniform(n, 2));
  Rng rng(3);
  const Vector psi = random_state(HilbertFactorization::uniform(2, n), rng).amplitudes();
  for (auto _ : state) benchmark::DoNotOptimize(p.run(psi).pi_n);
}
BENCHMARK(BM_ProtocolRun)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

static void BM_ReceiverSpectrum(benchmark::State& state) {
  const auto ch = receiver_map(LinkModel::uniform(static_cast<std::size_t>(state.range(0)), 1.0, 0.7), 1);
  for (auto _ : state) benchmark::DoNotOptimize(to_spectrum(Superoperator(ch)).gap);
}
BENCHMARK(BM_ReceiverSpectrum)->Arg(2)->Arg(3)->Arg(4);
BENCHMARK_MAIN();
