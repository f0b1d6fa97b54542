// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include <memory>

#include "miga/basis_table.hpp"
#include "miga/fem.hpp"
#include "miga/mesh_generators.hpp"
#include "miga/shell.hpp"

using namespace miga;

namespace {

// Unstructured square refined `levels` times, cubic blending, biquadratic two-ring patches.
const ManifoldBasis& fixture(int levels) {
    static std::vector<std::unique_ptr<ManifoldBasis>> cache(4);
    if (!cache[levels]) {
        ControlMesh mesh = reflect_ghosts(unstructured_square(), 2);
        for (int l = 0; l < levels; ++l) mesh = catmull_clark_refine(mesh);
        BasisConfig c;
        c.ring_depth = 2;
        cache[levels] = std::make_unique<ManifoldBasis>(mesh, c);
    }
    return *cache[levels];
}

Execution exec_of(const benchmark::State& state) { return state.range(1) ? Execution::parallel : Execution::serial; }

void label(benchmark::State& state) {
    state.SetLabel(state.range(1) ? "parallel" : "serial");
    state.counters["elements"] = static_cast<double>(domain_elements(fixture(state.range(0)).mesh()).size());
}

void tabulate(benchmark::State& state) {
    const ManifoldBasis& basis = fixture(state.range(0));
    const QuadRule rule = gauss_rule(9);
    for (auto _ : state) benchmark::DoNotOptimize(tabulate_mesh(basis, rule, 2, exec_of(state)));
    label(state);
}

void poisson(benchmark::State& state) {
    const ManifoldBasis& basis = fixture(state.range(0));
    const QuadRule rule = gauss_rule(9);
    const ScalarField f = [](const Vec2& x) { return x.x() * x.y(); };
    for (auto _ : state) benchmark::DoNotOptimize(assemble_poisson(basis, rule, f, exec_of(state)));
    label(state);
}

void kirchhoff_love(benchmark::State& state) {
    const ManifoldBasis& basis = fixture(state.range(0));
    const QuadRule rule = gauss_rule(9);
    ShellMaterial material;
    material.youngs_modulus = 1e5;
    material.poisson_ratio = 0.3;
    material.thickness = 0.01;
    const ShellLoad load{[](const Vec3&, const Vec3& n) { return Vec3(n); }, {}};
    for (auto _ : state) benchmark::DoNotOptimize(assemble_kirchhoff_love(basis, rule, material, load, exec_of(state)));
    label(state);
}

} // namespace

BENCHMARK(tabulate)->ArgsProduct({{1, 2}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(poisson)->ArgsProduct({{1, 2}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(kirchhoff_love)->ArgsProduct({{1, 2}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
