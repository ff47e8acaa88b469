// Serial vs OpenMP variants of the assembly and estimator kernels.
// Second benchmark argument: 0 = serial, 1 = parallel.
#include <benchmark/benchmark.h>

#include <memory>

#include "fembem/bem.hpp"
#include "fembem/estimate.hpp"
#include "fembem/fem.hpp"
#include "fembem/model.hpp"

using namespace fembem;

namespace {

std::shared_ptr<const Mesh> mesh_of(int uniform) {
  Mesh m = make_initial_mesh(DomainId::LShape);
  for (int k = 0; k < uniform; ++k) m = refine_uniform(m).first;
  return std::make_shared<const Mesh>(std::move(m));
}

Exec exec_of(const benchmark::State& s) { return s.range(1) ? Exec::parallel : Exec::serial; }

void BM_Riesz(benchmark::State& state) {
  const auto mesh = mesh_of(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_riesz(*mesh, exec_of(state)));
  state.counters["elements"] = static_cast<double>(mesh->num_triangles());
}

void BM_WRhs(benchmark::State& state) {
  const auto mesh = mesh_of(static_cast<int>(state.range(0)));
  const ProblemSpec p = make_problem(ExampleId::NonlinearZShape);
  const FeFunction u = interpolate(mesh, [](Vertex x) { return x.x * x.y; });
  const RieszLoad load{p.f, p.phi0, {}};
  for (auto _ : state) benchmark::DoNotOptimize(assemble_w_rhs(*mesh, load, u, p.op, triangle_default(), exec_of(state)));
  state.counters["elements"] = static_cast<double>(mesh->num_triangles());
}

void BM_Eta(benchmark::State& state) {
  const auto mesh = mesh_of(static_cast<int>(state.range(0)));
  const ProblemSpec p = make_problem(ExampleId::NonlinearZShape);
  const FeFunction u = interpolate(mesh, [](Vertex x) { return x.x * x.y; });
  const FeFunction w = interpolate(mesh, [](Vertex x) { return x.x - x.y; });
  const BoundaryFlux phi = [&p](Index, Vertex x, Vertex n) { return p.phi0(x, n); };
  for (auto _ : state) benchmark::DoNotOptimize(eta_fem(*mesh, w, u, phi, p.f, p.op, exec_of(state)));
  state.counters["elements"] = static_cast<double>(mesh->num_triangles());
}

void BM_H1Error(benchmark::State& state) {
  const auto mesh = mesh_of(static_cast<int>(state.range(0)));
  const ProblemSpec p = make_problem(ExampleId::LaplaceLShape);
  const FeFunction u = interpolate(mesh, p.exact->u);
  for (auto _ : state)
    benchmark::DoNotOptimize(h1_error(p.exact->u, p.exact->grad_u, u, triangle_default(), exec_of(state)));
  state.counters["elements"] = static_cast<double>(mesh->num_triangles());
}

void BM_SingleLayer(benchmark::State& state) {
  const BoundaryMesh bm = boundary_trace(*mesh_of(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_single_layer(bm, {}, exec_of(state)));
  state.counters["segments"] = static_cast<double>(bm.num_segments());
}

void BM_DoubleLayer(benchmark::State& state) {
  const BoundaryMesh bm = boundary_trace(*mesh_of(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_double_layer(bm, {}, exec_of(state)));
  state.counters["segments"] = static_cast<double>(bm.num_segments());
}

void BM_BoundaryOperators(benchmark::State& state) {
  const auto bm = std::make_shared<const BoundaryMesh>(boundary_trace(*mesh_of(static_cast<int>(state.range(0)))));
  for (auto _ : state) benchmark::DoNotOptimize(build_boundary_operators(bm, 4, {}, exec_of(state)));
  state.counters["segments"] = static_cast<double>(bm->num_segments());
}

}  // namespace

BENCHMARK(BM_Riesz)->ArgsProduct({{6, 10}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WRhs)->ArgsProduct({{6, 10}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Eta)->ArgsProduct({{6, 10}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_H1Error)->ArgsProduct({{6, 10}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SingleLayer)->ArgsProduct({{4, 8}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DoubleLayer)->ArgsProduct({{4, 8}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BoundaryOperators)->ArgsProduct({{4, 8}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
