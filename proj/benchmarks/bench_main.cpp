#include <benchmark/benchmark.h>

#include "renewal_ldp/rate.hpp"
#include "renewal_ldp/simulate.hpp"
#include "renewal_ldp/tilt.hpp"

namespace {

rldp::Model two_state() {
  rldp::Model m;
  m.states = rldp::StateSpace({"a", "b"});
  m.kernel.p = (rldp::Matrix(2, 2) << 0.2, 0.8, 0.6, 0.4).finished();
  m.waits = {rldp::WaitLaw(rldp::Exponential{1.0}), rldp::WaitLaw(rldp::Exponential{2.0})};
  m.initial = rldp::Vector::Constant(2, 0.5);
  return m;
}

void BM_simulate(benchmark::State& state) {
  const auto model = two_state();
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(rldp::simulate(model, static_cast<double>(state.range(0)), seed++));
}
BENCHMARK(BM_simulate)->Arg(100)->Arg(10000);

void BM_rate_I(benchmark::State& state) {
  const auto model = two_state();
  auto flat = model;
  flat.kernel.p = rldp::Matrix::Constant(2, 2, 0.5);
  const auto pair = rldp::lln_limit(flat, rldp::QuadGrid::build(model));
  for (auto _ : state) benchmark::DoNotOptimize(rldp::rate_I(model, pair).value);
}
BENCHMARK(BM_rate_I);

void BM_donsker_varadhan(benchmark::State& state) {
  const auto model = two_state();
  const rldp::Vector zeta = (rldp::Vector(2) << 0.3, 0.9).finished();
  for (auto _ : state) benchmark::DoNotOptimize(rldp::donsker_varadhan(model.kernel, zeta).value);
}
BENCHMARK(BM_donsker_varadhan);

void BM_rate_I1(benchmark::State& state) {
  const auto model = two_state();
  const rldp::Vector pi = (rldp::Vector(2) << 0.9, 0.1).finished();
  for (auto _ : state) benchmark::DoNotOptimize(rldp::rate_I1(model, pi).value);
}
BENCHMARK(BM_rate_I1)->Unit(benchmark::kMillisecond);

void BM_likelihood_ratio(benchmark::State& state) {
  const auto model = two_state();
  auto flat = model;
  flat.kernel.p = rldp::Matrix::Constant(2, 2, 0.5);
  const auto tilted = rldp::tilt_from_pair(model, rldp::lln_limit(flat, rldp::QuadGrid::build(model)));
  const auto traj = rldp::simulate(tilted, 200.0, 3);
  for (auto _ : state) benchmark::DoNotOptimize(rldp::log_likelihood_ratio(traj, model, tilted));
}
BENCHMARK(BM_likelihood_ratio);

}  // namespace
BENCHMARK_MAIN();
