// Times the OpenMP Monte Carlo kernel against the serial reference and
// checks that both produce identical statistics.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "tempamb/evaluation.hpp"

using namespace tempamb;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  std::uint64_t worlds = 20000;
  std::uint64_t seed = 7;
  TimeRange range{2000, 2024};
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--worlds" && i + 1 < argc) worlds = std::strtoull(argv[++i], nullptr, 10);
    else if (arg == "--seed" && i + 1 < argc) seed = std::strtoull(argv[++i], nullptr, 10);
  }

  const ChangePointDist dist{ChangePointKind::UniformSingleChange, 0.0};
  const std::vector<std::string> strategies = {"linear", "skip:2", "skip:5",
                                               "skip:10", "random:5", "dac"};

  std::printf("%-10s %12s %12s %9s %8s %s\n", "strategy", "serial (s)", "openmp (s)",
              "speedup", "mean", "agree");
  bool all_agree = true;
  for (const std::string& name : strategies) {
    const StrategySpec spec = StrategySpec::parse(name);

    auto t0 = std::chrono::steady_clock::now();
    const EfficiencyEntry serial =
        efficiency_monte_carlo_serial(range, spec, worlds, dist, seed);
    const double serial_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const EfficiencyEntry parallel =
        efficiency_monte_carlo(range, spec, worlds, dist, seed);
    const double parallel_s = seconds_since(t0);

    const bool agree = serial.mean_comparisons == parallel.mean_comparisons &&
                       serial.stddev_comparisons == parallel.stddev_comparisons &&
                       serial.min_comparisons == parallel.min_comparisons &&
                       serial.max_comparisons == parallel.max_comparisons;
    all_agree = all_agree && agree;
    std::printf("%-10s %12.3f %12.3f %8.2fx %8.3f %s\n", name.c_str(), serial_s,
                parallel_s, parallel_s > 0 ? serial_s / parallel_s : 0.0,
                parallel.mean_comparisons, agree ? "yes" : "NO");
  }
  if (!all_agree) {
    std::fprintf(stderr, "serial and parallel kernels disagree\n");
    return 1;
  }
  return 0;
}
