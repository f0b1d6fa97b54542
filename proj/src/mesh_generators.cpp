#include "miga/mesh_generators.hpp"

#include "miga/charts.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>

namespace miga {

namespace {

std::vector<Quad> grid_quads(int nx, int ny, bool periodic_x)
{
    const int row = periodic_x ? nx : nx + 1;
    auto id = [&](int i, int j) { return j * row + (periodic_x ? i % nx : i); };
    std::vector<Quad> quads;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) quads.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    }
    return quads;
}

} // namespace

ControlMesh structured_square(int n)
{
    if (n < 1) throw MeshError("grid size must be positive");
    std::vector<Vec3> verts;
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) verts.emplace_back(double(i) / n, double(j) / n, 0.0);
    }
    return ControlMesh::from_quads(std::move(verts), grid_quads(n, n, false));
}

void rotate_edge(std::vector<Quad>& quads, int p, int q)
{
    int f1 = -1, k1 = 0, f2 = -1, k2 = 0;
    for (int f = 0; f < static_cast<int>(quads.size()); ++f) {
        for (int k = 0; k < 4; ++k) {
            if (quads[f][k] == p && quads[f][(k + 1) % 4] == q) f1 = f, k1 = k;
            if (quads[f][k] == q && quads[f][(k + 1) % 4] == p) f2 = f, k2 = k;
        }
    }
    if (f1 < 0 || f2 < 0) throw MeshError("edge to rotate is not interior");
    const int a = quads[f1][(k1 + 2) % 4];
    const int b = quads[f1][(k1 + 3) % 4];
    const int c = quads[f2][(k2 + 2) % 4];
    const int d = quads[f2][(k2 + 3) % 4];
    quads[f1] = {a, b, p, c};
    quads[f2] = {c, d, q, a};
}

ControlMesh laplacian_smooth(const ControlMesh& mesh, int iterations)
{
    std::vector<std::set<int>> nbr(mesh.num_vertices());
    for (const Quad& q : mesh.quads()) {
        for (int k = 0; k < 4; ++k) {
            nbr[q[k]].insert(q[(k + 1) % 4]);
            nbr[q[(k + 1) % 4]].insert(q[k]);
        }
    }
    std::vector<Vec3> x = mesh.positions();
    for (int it = 0; it < iterations; ++it) {
        std::vector<Vec3> y = x;
        for (int v = 0; v < mesh.num_vertices(); ++v) {
            if (mesh.vertex_kind(v) != VertexKind::interior) continue;
            Vec3 s = Vec3::Zero();
            for (int w : nbr[v]) s += x[w];
            y[v] = s / static_cast<double>(nbr[v].size());
        }
        x = std::move(y);
    }
    return mesh.with_positions(std::move(x));
}

ControlMesh unstructured_square()
{
    const int n = 8;
    ControlMesh grid = structured_square(n);
    std::vector<Quad> quads = grid.quads();
    auto id = [&](int i, int j) { return j * (n + 1) + i; };
    rotate_edge(quads, id(3, 2), id(3, 3));
    rotate_edge(quads, id(5, 6), id(5, 5));
    return laplacian_smooth(ControlMesh::from_quads(grid.positions(), std::move(quads)), 50);
}

ControlMesh disk_ogrid(double radius, int k, int layers)
{
    if (k < 2 || layers < 1) throw MeshError("disk needs k >= 2 and at least one layer");
    const double s = 0.4 * radius;
    std::vector<Vec3> verts;
    std::vector<Quad> quads;
    auto inner = [&](int i, int j) { return j * (k + 1) + i; };
    for (int j = 0; j <= k; ++j) {
        for (int i = 0; i <= k; ++i) verts.emplace_back(s * (2.0 * i / k - 1.0), s * (2.0 * j / k - 1.0), 0.0);
    }
    for (int j = 0; j < k; ++j) {
        for (int i = 0; i < k; ++i) quads.push_back({inner(i, j), inner(i + 1, j), inner(i + 1, j + 1), inner(i, j + 1)});
    }

    // inner-block boundary loop, counter-clockwise from corner (0,0)
    std::vector<int> loop;
    for (int i = 0; i < k; ++i) loop.push_back(inner(i, 0));
    for (int j = 0; j < k; ++j) loop.push_back(inner(k, j));
    for (int i = k; i > 0; --i) loop.push_back(inner(i, k));
    for (int j = k; j > 0; --j) loop.push_back(inner(0, j));
    const int m = static_cast<int>(loop.size());

    std::vector<int> prev = loop;
    for (int r = 1; r <= layers; ++r) {
        std::vector<int> ring(m);
        const double t = double(r) / layers;
        for (int i = 0; i < m; ++i) {
            const double theta = 1.25 * std::numbers::pi + 2.0 * std::numbers::pi * i / m;
            const Vec3 on_circle(radius * std::cos(theta), radius * std::sin(theta), 0.0);
            ring[i] = static_cast<int>(verts.size());
            verts.push_back((1.0 - t) * verts[loop[i]] + t * on_circle);
        }
        for (int i = 0; i < m; ++i) quads.push_back({prev[i], ring[i], ring[(i + 1) % m], prev[(i + 1) % m]});
        prev = std::move(ring);
    }
    return laplacian_smooth(ControlMesh::from_quads(std::move(verts), std::move(quads)), 20);
}

ControlMesh cylinder_mesh(double radius, double length, int n_circ, int n_axial, bool rotated_edges)
{
    if (n_circ % 4 != 0 || n_axial % 2 != 0) throw MeshError("cylinder needs n_circ % 4 == 0 and even n_axial");
    std::vector<Vec3> verts;
    for (int k = 0; k <= n_axial; ++k) {
        for (int t = 0; t < n_circ; ++t) {
            const double th = 2.0 * std::numbers::pi * t / n_circ;
            verts.emplace_back(radius * std::cos(th), radius * std::sin(th), -0.5 * length + length * k / n_axial);
        }
    }
    std::vector<Quad> quads = grid_quads(n_circ, n_axial, true);
    if (rotated_edges) {
        if (n_axial < 8) throw MeshError("rotated cylinder edges need n_axial >= 8");
        auto id = [&](int t, int k) { return k * n_circ + t; };
        const int ka = n_axial / 4;
        rotate_edge(quads, id(n_circ / 4, ka), id(n_circ / 4, ka + 1));
        rotate_edge(quads, id(3 * n_circ / 4, n_axial - ka), id(3 * n_circ / 4, n_axial - ka - 1));
    }
    return ControlMesh::from_quads(std::move(verts), std::move(quads));
}

ControlMesh star_mesh(int valence, int n)
{
    if (valence < 3) throw std::invalid_argument("star mesh needs valence >= 3");
    if (n < 1) throw std::invalid_argument("star mesh needs n >= 1");
    // block point (i, j) of sector s; (s, 0, j) is the same vertex as (s + 1, j, 0)
    std::vector<Vec3> verts{Vec3::Zero()};
    std::vector<int> ids(static_cast<std::size_t>(valence) * (n + 1) * (n + 1), -1);
    auto slot = [&](int s, int i, int j) { return (s * (n + 1) + i) * (n + 1) + j; };
    for (int s = 0; s < valence; ++s)
        for (int i = 1; i <= n; ++i)
            for (int j = 0; j <= n; ++j) {
                ids[slot(s, i, j)] = static_cast<int>(verts.size());
                const Vec2 xi = chart_map(Vec2(i, j) / n, {valence, s});
                verts.emplace_back(xi.x(), xi.y(), 0.0);
            }
    auto id = [&](int s, int i, int j) {
        if (i == 0 && j == 0) return 0;
        if (i == 0) return ids[slot((s + 1) % valence, j, 0)];
        return ids[slot(s, i, j)];
    };
    std::vector<Quad> quads;
    for (int s = 0; s < valence; ++s)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) quads.push_back({id(s, i, j), id(s, i + 1, j), id(s, i + 1, j + 1), id(s, i, j + 1)});
    return ControlMesh::from_quads(std::move(verts), std::move(quads));
}

ControlMesh hemisphere_mesh(double radius, int n)
{
    if (n < 2 || n % 2 != 0) throw MeshError("hemisphere needs an even element count per cube edge");
    std::map<std::array<long, 3>, int> index;
    std::vector<Vec3> cube;
    auto vertex = [&](const Vec3& x) {
        const std::array<long, 3> key{std::lround(x[0] * n), std::lround(x[1] * n), std::lround(x[2] * n)};
        auto [it, fresh] = index.emplace(key, static_cast<int>(cube.size()));
        if (fresh) cube.push_back(x);
        return it->second;
    };
    std::vector<Quad> quads;
    // face given by origin and two spanning directions; j counts cells along `dv`
    auto add_face = [&](const Vec3& origin, const Vec3& du, const Vec3& dv, int nu, int nv) {
        for (int j = 0; j < nv; ++j) {
            for (int i = 0; i < nu; ++i) {
                auto at = [&](int a, int b) { return vertex(origin + (2.0 * a / n) * du + (2.0 * b / n) * dv); };
                Quad q{at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)};
                const Vec3 c = 0.25 * (cube[q[0]] + cube[q[1]] + cube[q[2]] + cube[q[3]]);
                const Vec3 nrm = (cube[q[1]] - cube[q[0]]).cross(cube[q[3]] - cube[q[0]]);
                if (nrm.dot(c) < 0.0) std::swap(q[1], q[3]);
                quads.push_back(q);
            }
        }
    };
    const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();
    add_face(Vec3(-1, -1, 1), ex, ey, n, n);
    add_face(Vec3(-1, -1, 0), ex, ez, n, n / 2);
    add_face(Vec3(1, -1, 0), ey, ez, n, n / 2);
    add_face(Vec3(-1, 1, 0), ex, ez, n, n / 2);
    add_face(Vec3(-1, -1, 0), ey, ez, n, n / 2);

    std::vector<Vec3> verts;
    verts.reserve(cube.size());
    for (const Vec3& x : cube) {
        Vec3 y;
        for (int d = 0; d < 3; ++d) {
            y[d] = std::abs(std::abs(x[d]) - 1.0) < 1e-12 ? x[d] : std::tan(0.25 * std::numbers::pi * x[d]);
        }
        verts.push_back(radius * y.normalized());
    }
    return ControlMesh::from_quads(std::move(verts), std::move(quads));
}

} // namespace miga
