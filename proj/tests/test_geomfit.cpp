#include <doctest.h>

#include <cmath>
#include <random>

#include "miga/geomfit.hpp"
#include "miga/mesh_generators.hpp"

using namespace miga;

namespace {

BasisConfig cubic(int depth = 1) {
    BasisConfig c;
    c.ring_depth = depth;
    c.poly.degree = depth + 1;
    return c;
}

// Closest point on the boundary of the unit square (for points near it).
Vec3 square_boundary(const Vec3& x) {
    const double d[4] = {std::abs(x.x()), std::abs(1.0 - x.x()), std::abs(x.y()), std::abs(1.0 - x.y())};
    const int k = static_cast<int>(std::min_element(d, d + 4) - d);
    Vec3 p = x;
    p.z() = 0.0;
    if (k == 0) p.x() = 0.0;
    if (k == 1) p.x() = 1.0;
    if (k == 2) p.y() = 0.0;
    if (k == 3) p.y() = 1.0;
    return p;
}

} // namespace

TEST_CASE("target projections") {
    const FitTarget c = circle_target(0.5);
    CHECK(c.project(Vec3(3.0, 4.0, 0.0)).isApprox(Vec3(0.3, 0.4, 0.0)));
    const FitTarget l = line_target(Vec3(0, 1, 0), Vec3(2, 0, 0));
    CHECK(l.project(Vec3(0.7, 3.0, 0.0)).isApprox(Vec3(0.7, 1.0, 0.0)));
    const FitTarget cyl = cylinder_target(2.0);
    CHECK(cyl.project(Vec3(0.0, 1.0, 5.0)).isApprox(Vec3(0.0, 2.0, 5.0)));
    const FitTarget s = sphere_target(10.0);
    CHECK(s.project(Vec3(1.0, 2.0, 2.0)).isApprox(Vec3(10.0, 20.0, 20.0) / 3.0));
    CHECK(make_target("circle", {0.5}).project(Vec3(0, 2, 0)).isApprox(Vec3(0, 0.5, 0)));
    CHECK(make_target("hemisphere", {10.0}).project(Vec3(0, 0, 1)).isApprox(Vec3(0, 0, 10)));
    CHECK_THROWS(make_target("torus", {1.0}));
}

TEST_CASE("free vertex sets") {
    const ControlMesh mesh = reflect_ghosts(structured_square(4), 2);
    const std::vector<int> near = near_boundary_vertices(mesh);
    // every non-interior vertex plus the interior ring next to the boundary
    int non_interior = 0;
    for (int v = 0; v < mesh.num_vertices(); ++v) non_interior += mesh.vertex_kind(v) != VertexKind::interior;
    CHECK(static_cast<int>(near.size()) == non_interior + 8);
    CHECK(std::is_sorted(near.begin(), near.end()));
    CHECK(all_vertices(mesh).size() == static_cast<std::size_t>(mesh.num_vertices()));
}

TEST_CASE("fitting to the current geometry changes nothing") {
    const ControlMesh mesh = reflect_ghosts(unstructured_square(), 2);
    const ManifoldBasis basis(mesh, cubic());
    // samples already lie on the target: the identity projection
    const FitTarget self{"self", [](const Vec3& x) { return x; }};
    for (FitDomain d : {FitDomain::boundary, FitDomain::surface}) {
        const FitResult r = fit_to_target(basis, {self, d, all_vertices(mesh), 4, 2});
        double moved = 0.0;
        for (int v = 0; v < mesh.num_vertices(); ++v) moved = std::max(moved, (r.positions[v] - mesh.position(v)).norm());
        CHECK(moved < 1e-10);
        CHECK(r.final_rms < 1e-14);
        CHECK(r.num_samples > 0);
    }
}

TEST_CASE("straight boundaries are fitted exactly on a regular mesh") {
    const ControlMesh mesh = reflect_ghosts(structured_square(4), 2);
    std::vector<Vec3> perturbed = mesh.positions();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-0.002, 0.002);
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (mesh.vertex_kind(v) == VertexKind::boundary) perturbed[v] += Vec3(u(rng), u(rng), 0.0);
    const ManifoldBasis basis(mesh.with_positions(perturbed), cubic());
    // corner vertices couple the tangential slip of two edges, so re-projection converges linearly
    const FitProblem fp{{"square", square_boundary}, FitDomain::boundary, near_boundary_vertices(mesh), 4, 30};
    const FitResult r = fit_to_target(basis, fp);
    CHECK(r.initial_rms > 1e-4);
    CHECK(r.final_rms < 1e-10);
}

TEST_CASE("circle boundary residual decays at third order") {
    ControlMesh mesh = reflect_ghosts(disk_ogrid(0.5), 2);
    std::vector<double> rms;
    for (int level = 0; level < 4; ++level) {
        if (level > 0) mesh = catmull_clark_refine(mesh);
        const ManifoldBasis basis(mesh, cubic());
        const FitResult r = fit_to_target(basis, {circle_target(0.5), FitDomain::boundary, near_boundary_vertices(mesh), 4, 4});
        CHECK(r.final_rms < r.initial_rms);
        mesh = mesh.with_positions(r.positions);
        rms.push_back(r.final_rms);
    }
    // least-squares slope of log2(rms) against the level, h halving per level
    double num = 0.0, den = 0.0;
    const double mean_level = 1.5;
    double mean_log = 0.0;
    for (double e : rms) mean_log += std::log2(e) / rms.size();
    for (std::size_t k = 0; k < rms.size(); ++k) {
        num += (k - mean_level) * (std::log2(rms[k]) - mean_log);
        den += (k - mean_level) * (k - mean_level);
    }
    const double rate = -num / den;
    CAPTURE(rate);
    CHECK(rate >= 3.0);
}

TEST_CASE("shell surfaces") {
    const ControlMesh mesh = reflect_ghosts(cylinder_mesh(4.953, 10.35, 8, 4), 2);
    const ManifoldBasis basis(mesh, cubic());
    const FitResult r = fit_to_target(basis, {cylinder_target(4.953), FitDomain::surface, all_vertices(mesh), 4, 4});
    CHECK(r.final_rms < r.initial_rms);

    const ControlMesh hemi = reflect_ghosts(hemisphere_mesh(10.0, 4), 2);
    const FitResult h = fit_to_target(ManifoldBasis(hemi, cubic()), {sphere_target(10.0), FitDomain::surface, all_vertices(hemi), 4, 4});
    CHECK(h.final_rms < h.initial_rms);
}

TEST_CASE("invalid fit problems") {
    const ControlMesh mesh = reflect_ghosts(structured_square(2), 1);
    const ManifoldBasis basis(mesh, cubic());
    CHECK_THROWS_AS(fit_to_target(basis, {circle_target(0.5), FitDomain::boundary, {}, 4, 4}), std::invalid_argument);
}
