#include <random>

#include <benchmark/benchmark.h>

#include "surfkin/equilibrium.hpp"
#include "surfkin/kernel.hpp"
#include "surfkin/kinetic.hpp"
#include "surfkin/transport.hpp"

namespace {

using namespace surfkin;

struct Model {
  OrbitTable orbit{NormalPotential(Tent{2.0, 0.5}, 1.0, 1.0), TangentialPotential(CosineU{}, 1.0, 0.5), {}};
  EquilibriumWeights eq{orbit, 1.0};
  RelaxationKernel kernel{orbit, eq, 1.0};
};

const Model& model() {
  static const Model m;
  return m;
}

SurfaceDistribution random_state(std::size_t nx, std::size_t nv) {
  const auto& m = model();
  SurfaceDistribution g(XGrid(nx, -0.5, 0.5), VelocityGrid(nv, 6.0, 1.0), m.orbit.e_z());
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  for (double& v : g.values()) v = dist(rng);
  return g;
}

void advect(benchmark::State& state, Execution exec) {
  auto g = random_state(static_cast<std::size_t>(state.range(0)), 64);
  const auto lay = g.layout();
  std::vector<double> measure(lay.slice(), 1.0);
  TransportOptions opt;
  opt.execution = exec;
  const double dt = 0.4 * g.x().dx() / g.v().v_max();
  for (auto _ : state) {
    advect_x(g.values(), lay, g.v().nodes(), g.x().dx(), dt, measure, opt);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(lay.total()));
}

void step(benchmark::State& state, Execution exec) {
  auto g = random_state(static_cast<std::size_t>(state.range(0)), 64);
  const auto& m = model();
  KineticOptions opt;
  opt.transport.execution = exec;
  const double dt = stable_dt(g, m.orbit.tangential(), 0.5);
  for (auto _ : state) {
    g = step_trapped(g, m.kernel, m.orbit.tangential(), dt, opt);
    benchmark::DoNotOptimize(g.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.layout().total()));
}

void theta_slice(benchmark::State& state) {
  const auto g = random_state(8, 64);
  const auto& m = model();
  for (auto _ : state) benchmark::DoNotOptimize(theta(m.kernel, g, 3));
}

}  // namespace

BENCHMARK_CAPTURE(advect, serial, Execution::serial)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(advect, parallel, Execution::parallel)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(step, serial, Execution::serial)->Arg(128);
BENCHMARK_CAPTURE(step, parallel, Execution::parallel)->Arg(128);
BENCHMARK(theta_slice);

BENCHMARK_MAIN();
