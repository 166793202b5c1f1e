#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "coagdiff/coagulation.hpp"
#include "coagdiff/convolution.hpp"
#include "coagdiff/simulator.hpp"

using namespace coagdiff;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

std::vector<double> random_state(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = u(rng) / static_cast<double>(i + 1);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 3;
  const KernelSpec k = KernelSpec::product_power(1.0, 0.6, 0.6);

  std::printf("gain evaluation, %s\n", k.name().c_str());
  std::printf("%8s %14s %14s %14s %10s\n", "n", "reference[s]", "direct[s]", "fft[s]", "ref/fft");
  for (std::size_t n : {256, 1024, 4096}) {
    const auto c = random_state(n, n);
    FftConvolver fft;
    const CoagulationOperator direct(k, n, GainEvaluator::Direct);
    auto ws = direct.make_workspace();
    std::vector<double> g(n), rate(n);
    volatile double sink = 0.0;
    const double t_ref = best_of(reps, [&] { sink = sink + gain(c, k)[n - 1]; });
    const double t_dir = best_of(reps, [&] {
      direct.gain_and_rate(c, g, rate, ws);
      sink = sink + g[n - 1];
    });
    const double t_fft = best_of(reps, [&] { sink = sink + gain_fast(c, k, fft)[n - 1]; });
    std::printf("%8zu %14.6f %14.6f %14.6f %10.1f\n", n, t_ref, t_dir, t_fft, t_ref / t_fft);
  }

  SimConfig cfg;
  cfg.kernel = KernelSpec::sum_power(1.0, 0.5);
  cfg.n = 256;
  cfg.cells = 64;
  cfg.dt = 1e-3;
  const CoagulationOperator op(cfg.kernel, cfg.n);
  const ClusterField init = make_initial_state(cfg);
  const int threads = omp_get_max_threads();
  std::printf("\nreaction step, n = %zu, cells = %zu\n", cfg.n, cfg.cells);
  std::printf("%8s %14s\n", "threads", "time[s]");
  for (int t : {1, threads}) {
    omp_set_num_threads(t);
    const double secs = best_of(reps, [&] {
      ClusterField s = init;
      reaction_substep(s, op, cfg.dt, cfg);
    });
    std::printf("%8d %14.6f\n", t, secs);
    if (threads == 1) break;
  }
  return 0;
}
