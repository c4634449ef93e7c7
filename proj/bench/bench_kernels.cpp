// Parallel kernels against their serial twins, and padded-FFT convolution
// against the direct sum.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "nlch/kernel.hpp"
#include "nlch/kernels.hpp"
#include "nlch/potential.hpp"
#include "nlch/spectral.hpp"

namespace {

std::vector<double> noise(std::size_t n, unsigned seed = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

nlch::SpectralSpace space_for(std::int64_t n, bool two_d) {
  const auto m = static_cast<std::size_t>(n);
  return two_d ? nlch::SpectralSpace::unit_square(m) : nlch::SpectralSpace::unit_interval(m);
}

nlch::Kernel kernel_for(const nlch::SpectralSpace& sp) {
  nlch::KernelSpec ks;
  ks.width = 0.1;
  ks.mass = 10.0;
  return nlch::build_kernel(ks, sp);
}

template <bool Parallel>
void BM_ChemicalSource(benchmark::State& state) {
  const auto sp = space_for(state.range(0), true);
  const auto k = kernel_for(sp);
  const auto pot = nlch::Potential::double_well();
  const auto phi = noise(sp.size());
  const auto conv = noise(sp.size(), 5);
  std::vector<double> out(sp.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      nlch::kernels::chemical_source(k.a_field().values(), phi, conv, pot.dF(), out);
    } else {
      nlch::kernels::serial::chemical_source(k.a_field().values(), phi, conv, pot.dF(), out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sp.size()));
}

template <bool Parallel>
void BM_ImexUpdate(benchmark::State& state) {
  const auto sp = space_for(state.range(0), true);
  const auto& lam = sp.eigenvalues();
  const auto w = noise(sp.size());
  const auto th = noise(sp.size(), 7);
  std::vector<double> d(sp.size()), tn(sp.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      nlch::kernels::imex_phi_increment(lam, w, th, 1e-3, 8.0, 0.1, 0.1, d);
      nlch::kernels::imex_theta_update(lam, th, d, 0.1, 1e-3, 0.1, tn);
    } else {
      nlch::kernels::serial::imex_phi_increment(lam, w, th, 1e-3, 8.0, 0.1, 0.1, d);
      nlch::kernels::serial::imex_theta_update(lam, th, d, 0.1, 1e-3, 0.1, tn);
    }
    benchmark::DoNotOptimize(tn.data());
  }
}

template <bool Parallel>
void BM_DirectConvolution(benchmark::State& state) {
  const auto sp = space_for(state.range(0), true);
  const auto k = kernel_for(sp);
  const auto f = noise(sp.size());
  const auto& c = k.convolver();
  for (auto _ : state) {
    auto out = Parallel ? nlch::kernels::convolve_direct(c.offsets(), c.weight(), c.samples(), f)
                        : nlch::kernels::serial::convolve_direct(c.offsets(), c.weight(), c.samples(), f);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_FftConvolution(benchmark::State& state) {
  const auto sp = space_for(state.range(0), true);
  const auto k = kernel_for(sp);
  const auto f = noise(sp.size());
  for (auto _ : state) {
    auto out = k.convolver().apply(f);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_ChemicalSource<true>)->Arg(33)->Arg(65)->Arg(129);
BENCHMARK(BM_ChemicalSource<false>)->Arg(33)->Arg(65)->Arg(129);
BENCHMARK(BM_ImexUpdate<true>)->Arg(33)->Arg(65)->Arg(129);
BENCHMARK(BM_ImexUpdate<false>)->Arg(33)->Arg(65)->Arg(129);
BENCHMARK(BM_DirectConvolution<true>)->Arg(17)->Arg(33);
BENCHMARK(BM_DirectConvolution<false>)->Arg(17)->Arg(33);
BENCHMARK(BM_FftConvolution)->Arg(17)->Arg(33)->Arg(65);

BENCHMARK_MAIN();
