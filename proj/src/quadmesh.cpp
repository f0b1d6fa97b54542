#include "miga/quadmesh.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace miga {

namespace {

std::uint64_t edge_key(int a, int b)
{
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

std::string edge_name(int a, int b)
{
    std::ostringstream os;
    os << "(" << a << ", " << b << ")";
    return os.str();
}

} // namespace

ControlMesh ControlMesh::from_quads(std::vector<Vec3> vertices,
                                    std::vector<Quad> quads,
                                    std::vector<VertexKind> vertex_kinds,
                                    std::vector<ElementKind> element_kinds,
                                    int ghost_layers)
{
    const int nv = static_cast<int>(vertices.size());
    std::vector<int> use(nv, 0);
    for (std::size_t f = 0; f < quads.size(); ++f) {
        const Quad& q = quads[f];
        for (int k = 0; k < 4; ++k) {
            if (q[k] < 0 || q[k] >= nv) {
                throw MeshError("dangling vertex index " + std::to_string(q[k]) + " in face " +
                                std::to_string(f));
            }
            for (int l = 0; l < k; ++l) {
                if (q[k] == q[l]) {
                    throw MeshError("face " + std::to_string(f) + " repeats vertex " +
                                    std::to_string(q[k]));
                }
            }
            ++use[q[k]];
        }
    }
    for (int v = 0; v < nv; ++v) {
        if (use[v] == 0) throw MeshError("isolated vertex " + std::to_string(v));
    }

    ControlMesh m;
    m.vertices_ = std::move(vertices);
    m.quads_ = std::move(quads);
    m.ghost_layers_ = ghost_layers;
    m.build_connectivity();

    if (element_kinds.empty()) element_kinds.assign(m.quads_.size(), ElementKind::interior);
    if (element_kinds.size() != m.quads_.size()) throw MeshError("element flag count mismatch");
    m.element_kinds_ = std::move(element_kinds);

    if (vertex_kinds.empty()) {
        vertex_kinds.assign(nv, VertexKind::interior);
        for (int v = 0; v < nv; ++v) {
            if (!m.closed_[v]) vertex_kinds[v] = VertexKind::boundary;
        }
    }
    if (static_cast<int>(vertex_kinds.size()) != nv) throw MeshError("vertex flag count mismatch");
    m.vertex_kinds_ = std::move(vertex_kinds);
    return m;
}

ControlMesh ControlMesh::with_positions(std::vector<Vec3> positions) const
{
    if (positions.size() != vertices_.size()) throw MeshError("position count mismatch");
    ControlMesh m = *this;
    m.vertices_ = std::move(positions);
    return m;
}

void ControlMesh::build_connectivity()
{
    const int nh = num_halfedges();
    std::unordered_map<std::uint64_t, int> lookup;
    lookup.reserve(static_cast<std::size_t>(nh) * 2);
    for (int h = 0; h < nh; ++h) {
        const int a = from(h);
        const int b = to(h);
        if (!lookup.emplace(edge_key(a, b), h).second) {
            throw MeshError("non-manifold edge " + edge_name(a, b));
        }
    }
    twin_.assign(nh, -1);
    for (int h = 0; h < nh; ++h) {
        auto it = lookup.find(edge_key(to(h), from(h)));
        if (it != lookup.end()) twin_[h] = it->second;
    }

    const int nv = num_vertices();
    std::vector<int> any_out(nv, -1);
    std::vector<int> incident(nv, 0);
    for (int h = 0; h < nh; ++h) {
        if (any_out[from(h)] < 0) any_out[from(h)] = h;
        ++incident[from(h)];
    }

    outgoing_.assign(nv, -1);
    valence_.assign(nv, 0);
    closed_.assign(nv, false);
    for (int v = 0; v < nv; ++v) {
        const int start = any_out[v];
        // rotate clockwise to the first half-edge of an open fan
        int h = start;
        bool closed = false;
        while (twin_[h] >= 0) {
            h = next(twin_[h]);
            if (h == start) {
                closed = true;
                break;
            }
        }
        outgoing_[v] = closed ? start : h;
        closed_[v] = closed;

        int count = 0;
        int g = outgoing_[v];
        do {
            ++count;
            g = rotate_ccw(g);
        } while (g >= 0 && g != outgoing_[v] && count <= incident[v]);
        if (count != incident[v]) {
            throw MeshError("non-manifold vertex " + std::to_string(v));
        }
        valence_[v] = count;
    }
}

std::vector<int> ControlMesh::fan(int v) const
{
    std::vector<int> out;
    int h = outgoing_[v];
    do {
        out.push_back(h);
        h = rotate_ccw(h);
    } while (h >= 0 && h != outgoing_[v]);
    return out;
}

int ControlMesh::count_extraordinary() const
{
    int n = 0;
    for (int v = 0; v < num_vertices(); ++v) {
        if (!is_ghost_vertex(v) && closed_[v] && valence_[v] != 4) ++n;
    }
    return n;
}

std::vector<int> ControlMesh::domain_boundary_halfedges() const
{
    std::vector<int> out;
    for (int f = 0; f < num_quads(); ++f) {
        if (is_ghost_element(f)) continue;
        for (int k = 0; k < 4; ++k) {
            const int h = 4 * f + k;
            const int t = twin_[h];
            if (t < 0 || is_ghost_element(face(t))) out.push_back(h);
        }
    }
    return out;
}

int RingPatch::sector_of_element(int element) const
{
    for (const CellPlacement& c : cells) {
        if (c.element == element) return c.sector;
    }
    return -1;
}

namespace {

void require_closed(const ControlMesh& mesh, int vertex)
{
    if (!mesh.closed_fan(vertex)) {
        throw MeshError("vertex " + std::to_string(vertex) + " has an incomplete ring");
    }
    if (mesh.valence(vertex) < 3) {
        throw MeshError("vertex " + std::to_string(vertex) + " has valence below 3");
    }
}

RingPatch one_ring(const ControlMesh& mesh, int c)
{
    require_closed(mesh, c);
    RingPatch p;
    p.center = c;
    const std::vector<int> hs = mesh.fan(c);
    p.valence = static_cast<int>(hs.size());
    p.ordered_vertices.push_back(c);
    p.nodes.push_back({c, {{0, 0, 0}}});
    for (int s = 0; s < p.valence; ++s) {
        const int h = hs[s];
        const int f = ControlMesh::face(h);
        p.cells.push_back({f, s, 0, 0, ControlMesh::corner(h)});
        p.ordered_elements.push_back(f);
        const int a = mesh.to(h);
        const int d = mesh.to(ControlMesh::next(h));
        p.ordered_vertices.push_back(a);
        p.nodes.push_back({a, {{s, 1, 0}}});
        p.ordered_vertices.push_back(d);
        p.nodes.push_back({d, {{s, 1, 1}}});
    }
    return p;
}

// Second-ring cells of one sector. Entries are -1 where the mesh has no element.
struct SectorBlock {
    int f_cell = -1, f_corner = 0; // cell (1,0)
    int g_cell = -1, g_corner = 0; // cell (0,1)
    int h_cell = -1, h_corner = 0; // cell (1,1), reached from (1,0)
    int x = -1, y = -1;            // (2,0), (2,1)
    int xp = -1, yp = -1;          // (1,2), (0,2)
    int p = -1, q = -1;            // (2,2), (1,2) via (1,1)
};

SectorBlock sector_block(const ControlMesh& mesh, int h)
{
    SectorBlock b;
    const int t = mesh.twin(ControlMesh::next(h)); // d -> a
    if (t >= 0) {
        const int ax = ControlMesh::next(t);
        b.f_cell = ControlMesh::face(t);
        b.f_corner = ControlMesh::corner(ax);
        b.x = mesh.to(ax);
        b.y = mesh.to(ControlMesh::next(ax));
        const int u = mesh.twin(ControlMesh::prev(t)); // d -> y
        if (u >= 0) {
            b.h_cell = ControlMesh::face(u);
            b.h_corner = ControlMesh::corner(u);
            b.p = mesh.to(ControlMesh::next(u));
            b.q = mesh.to(ControlMesh::next(ControlMesh::next(u)));
        }
    }
    const int t2 = mesh.twin(ControlMesh::next(ControlMesh::next(h))); // b -> d
    if (t2 >= 0) {
        b.g_cell = ControlMesh::face(t2);
        b.g_corner = ControlMesh::corner(t2);
        b.xp = mesh.to(ControlMesh::next(t2));
        b.yp = mesh.to(ControlMesh::next(ControlMesh::next(t2)));
    }
    return b;
}

} // namespace

RingPatch extract_ring(const ControlMesh& mesh, int vertex, int depth)
{
    if (depth != 1 && depth != 2) throw MeshError("ring depth must be 1 or 2");
    RingPatch p = one_ring(mesh, vertex);
    if (depth == 1) return p;

    const std::vector<int> hs = mesh.fan(vertex);
    const int v = p.valence;
    auto fail = [&](const std::string& why) {
        throw MeshError("vertex " + std::to_string(vertex) + " has no regular two-ring: " + why);
    };
    for (std::size_t k = 1; k < p.ordered_vertices.size(); ++k) {
        const int w = p.ordered_vertices[k];
        if (!mesh.closed_fan(w) || mesh.valence(w) != 4) fail("irregular neighbour " + std::to_string(w));
    }

    RingPatch out;
    out.center = vertex;
    out.valence = v;
    out.depth = 2;
    out.blend_depth = 2;
    out.ordered_vertices.push_back(vertex);
    out.nodes.push_back({vertex, {{0, 0, 0}}});
    std::vector<SectorBlock> blocks(v);
    for (int s = 0; s < v; ++s) {
        blocks[s] = sector_block(mesh, hs[s]);
        const SectorBlock& b = blocks[s];
        if (b.f_cell < 0 || b.g_cell < 0 || b.h_cell < 0) fail("open second ring");
        if (b.q != b.xp) fail("second ring does not close at a diagonal vertex");
    }
    for (int s = 0; s < v; ++s) {
        const SectorBlock& b = blocks[s];
        if (b.yp != blocks[(s + 1) % v].x) fail("sector blocks do not match");
        const int h = hs[s];
        const int e = ControlMesh::face(h);
        out.cells.push_back({e, s, 0, 0, ControlMesh::corner(h)});
        out.cells.push_back({b.f_cell, s, 1, 0, b.f_corner});
        out.cells.push_back({b.g_cell, s, 0, 1, b.g_corner});
        out.cells.push_back({b.h_cell, s, 1, 1, b.h_corner});
        for (const CellPlacement& c : std::span(out.cells).last(4)) out.ordered_elements.push_back(c.element);

        const int a = mesh.to(h);
        const int d = mesh.to(ControlMesh::next(h));
        const std::array<std::pair<int, std::array<int, 2>>, 6> ring = {{
            {a, {1, 0}}, {b.x, {2, 0}}, {d, {1, 1}}, {b.y, {2, 1}}, {b.xp, {1, 2}}, {b.p, {2, 2}},
        }};
        for (const auto& [w, ij] : ring) {
            out.ordered_vertices.push_back(w);
            out.nodes.push_back({w, {{s, ij[0], ij[1]}}});
        }
    }
    const std::set<int> elems(out.ordered_elements.begin(), out.ordered_elements.end());
    const std::set<int> verts(out.ordered_vertices.begin(), out.ordered_vertices.end());
    if (static_cast<int>(elems.size()) != 4 * v) fail("ring overlaps itself");
    if (static_cast<int>(verts.size()) != 6 * v + 1) fail("ring vertices repeat");
    return out;
}

RingPatch extract_relaxed_two_ring(const ControlMesh& mesh, int vertex)
{
    RingPatch p = one_ring(mesh, vertex);
    p.depth = 2;
    p.blend_depth = 1;
    p.regular_layout = false;

    std::map<int, std::size_t> index;
    for (std::size_t k = 0; k < p.nodes.size(); ++k) index[p.nodes[k].vertex] = k;
    std::map<int, std::size_t> second;

    const std::vector<int> hs = mesh.fan(vertex);
    auto place = [&](int w, int s, int i, int j) {
        if (w < 0 || index.count(w)) return;
        auto it = second.find(w);
        if (it == second.end()) {
            second[w] = p.nodes.size();
            p.nodes.push_back({w, {{s, i, j}}});
            p.ordered_vertices.push_back(w);
        } else {
            p.nodes[it->second].positions.push_back({s, i, j});
        }
    };
    for (int s = 0; s < p.valence; ++s) {
        const SectorBlock b = sector_block(mesh, hs[s]);
        place(b.x, s, 2, 0);
        place(b.y, s, 2, 1);
        place(b.xp, s, 1, 2);
        place(b.yp, s, 0, 2);
        place(b.p, s, 2, 2);
        place(b.q, s, 1, 2);
    }
    return p;
}

namespace {

struct BoundaryInfo {
    std::vector<int> loop_next; // along boundary, -1 for non-boundary vertices
    std::vector<int> loop_prev;
};

BoundaryInfo boundary_loops(const ControlMesh& mesh)
{
    BoundaryInfo bi;
    bi.loop_next.assign(mesh.num_vertices(), -1);
    bi.loop_prev.assign(mesh.num_vertices(), -1);
    for (int h = 0; h < mesh.num_halfedges(); ++h) {
        if (mesh.twin(h) >= 0) continue;
        bi.loop_next[mesh.from(h)] = mesh.to(h);
        bi.loop_prev[mesh.to(h)] = mesh.from(h);
    }
    return bi;
}

// Vertex beyond `at` continuing the straight grid line coming from `from_vertex`.
int straight_continuation(const ControlMesh& mesh, int at, int from_vertex)
{
    if (!mesh.closed_fan(at) || mesh.valence(at) != 4) {
        throw MeshError("ghost reflection stencil incomplete at vertex " + std::to_string(at) +
                        " (irregular vertex too close to the boundary)");
    }
    const std::vector<int> f = mesh.fan(at);
    for (int k = 0; k < 4; ++k) {
        if (mesh.to(f[k]) == from_vertex) return mesh.to(f[(k + 2) % 4]);
    }
    throw MeshError("ghost reflection stencil broken at vertex " + std::to_string(at));
}

struct MirrorPlane {
    Vec3 origin;
    Vec3 normal;
    [[nodiscard]] Vec3 reflect(const Vec3& x) const { return x - 2.0 * (x - origin).dot(normal) * normal; }
};

MirrorPlane plane_from(const Vec3& origin, Vec3 tangent, const Vec3& inward)
{
    tangent.normalize();
    Vec3 m = inward - inward.dot(tangent) * tangent;
    const double len = m.norm();
    if (len <= 0.0) throw MeshError("degenerate boundary geometry for ghost reflection");
    return {origin, m / len};
}

} // namespace

ControlMesh reflect_ghosts(const ControlMesh& mesh, int layers)
{
    if (mesh.has_ghosts()) throw MeshError("mesh already carries ghosts");
    if (layers < 0) throw MeshError("ghost layer count must be non-negative");
    if (layers == 0) return mesh;

    const BoundaryInfo bi = boundary_loops(mesh);
    const int nv = mesh.num_vertices();
    std::vector<bool> is_corner(nv, false);
    bool any_boundary = false;
    for (int v = 0; v < nv; ++v) {
        if (bi.loop_next[v] < 0) continue;
        any_boundary = true;
        const int k = mesh.valence(v);
        if (k == 1) {
            is_corner[v] = true;
        } else if (k != 2) {
            throw MeshError("boundary vertex " + std::to_string(v) + " has " + std::to_string(k) +
                            " incident elements; reflection supports 1 or 2");
        }
    }
    if (!any_boundary) return ControlMesh::from_quads(mesh.positions(), mesh.quads(), {}, {}, layers);

    // sides: maximal boundary runs between corners; closed loops without corners form one side
    struct Side {
        std::vector<int> verts; // in loop order; endpoints are corners for open sides
        bool closed = false;
    };
    std::vector<Side> sides;
    std::vector<bool> visited(nv, false);
    for (int v = 0; v < nv; ++v) {
        if (bi.loop_next[v] < 0 || visited[v]) continue;
        std::vector<int> loop;
        int w = v;
        do {
            loop.push_back(w);
            visited[w] = true;
            w = bi.loop_next[w];
        } while (w != v);
        auto first_corner = std::find_if(loop.begin(), loop.end(), [&](int x) { return is_corner[x]; });
        if (first_corner == loop.end()) {
            sides.push_back({loop, true});
            continue;
        }
        std::rotate(loop.begin(), first_corner, loop.end());
        loop.push_back(loop.front());
        Side cur;
        cur.verts.push_back(loop[0]);
        for (std::size_t i = 1; i < loop.size(); ++i) {
            cur.verts.push_back(loop[i]);
            if (is_corner[loop[i]]) {
                sides.push_back(cur);
                cur = Side{};
                cur.verts.push_back(loop[i]);
            }
        }
    }

    std::vector<Vec3> pos = mesh.positions();
    std::vector<Quad> quads = mesh.quads();
    std::vector<VertexKind> vkinds(nv);
    for (int v = 0; v < nv; ++v) vkinds[v] = mesh.vertex_kind(v);
    std::vector<ElementKind> ekinds(quads.size(), ElementKind::interior);
    auto new_ghost = [&](const Vec3& x) {
        pos.push_back(x);
        vkinds.push_back(VertexKind::ghost);
        return static_cast<int>(pos.size()) - 1;
    };

    // inward chain of vertex b relative to a side; chain[0] = b
    auto inward_chain = [&](int b, std::size_t idx) {
        std::vector<int> chain{b};
        if (is_corner[b]) {
            // walk along the other side of the corner
            const bool at_start = idx == 0;
            int cur = b;
            for (int l = 1; l <= layers; ++l) {
                cur = at_start ? bi.loop_prev[cur] : bi.loop_next[cur];
                chain.push_back(cur);
            }
            return chain;
        }
        const std::vector<int> f = mesh.fan(b);
        chain.push_back(mesh.to(f[1]));
        for (int l = 2; l <= layers; ++l) chain.push_back(straight_continuation(mesh, chain[l - 1], chain[l - 2]));
        return chain;
    };

    // side ghost map per side: interior vertex -> ghost vertex
    std::vector<std::map<int, int>> side_maps(sides.size());
    // ghosts of corner chains, keyed by (corner, neighbour along the side)
    std::map<std::pair<int, int>, std::vector<int>> corner_chain_ghosts;

    for (std::size_t si = 0; si < sides.size(); ++si) {
        const Side& side = sides[si];
        std::map<int, int>& mu = side_maps[si];
        for (int b : side.verts) mu[b] = b;
        const std::size_t n = side.verts.size();
        for (std::size_t idx = 0; idx < n; ++idx) {
            const int b = side.verts[idx];
            if (side.closed == false && idx > 0 && idx + 1 < n && is_corner[b]) continue;
            const std::vector<int> chain = inward_chain(b, idx);
            MirrorPlane plane;
            if (is_corner[b]) {
                const int along = idx == 0 ? side.verts[1] : side.verts[n - 2];
                plane = plane_from(pos[b], pos[along] - pos[b], pos[chain[1]] - pos[b]);
            } else {
                const int prev = bi.loop_prev[b];
                const int next = bi.loop_next[b];
                plane = plane_from(pos[b], pos[next] - pos[prev], pos[chain[1]] - pos[b]);
            }
            std::vector<int> ghosts;
            for (int l = 1; l <= layers; ++l) {
                const int src = chain[l];
                if (mu.count(src)) {
                    throw MeshError("ghost reflection stencil incomplete: vertex " + std::to_string(src) +
                                    " reached twice while mirroring (mesh too coarse)");
                }
                const int g = new_ghost(plane.reflect(mesh.position(src)));
                mu[src] = g;
                ghosts.push_back(g);
            }
            if (is_corner[b]) {
                const int along = idx == 0 ? side.verts[1] : side.verts[n - 2];
                corner_chain_ghosts[{b, along}] = ghosts;
            }
        }

        // mirrored strip elements
        std::size_t made = 0;
        for (int f = 0; f < mesh.num_quads(); ++f) {
            const Quad& q = mesh.quad(f);
            bool inside = true;
            for (int k = 0; k < 4 && inside; ++k) inside = mu.count(q[k]) > 0;
            if (!inside) continue;
            quads.push_back({mu[q[3]], mu[q[2]], mu[q[1]], mu[q[0]]});
            ekinds.push_back(ElementKind::ghost);
            ++made;
        }
        const std::size_t edges = side.closed ? n : n - 1;
        if (made != edges * static_cast<std::size_t>(layers)) {
            throw MeshError("ghost reflection stencil incomplete along a boundary side (mesh too coarse)");
        }
    }

    // point-reflected corner blocks
    for (int c = 0; c < nv; ++c) {
        if (!is_corner[c]) continue;
        const int n1 = bi.loop_next[c];
        const int n2 = bi.loop_prev[c];
        // grid(i, j): i along c->n1, j along c->n2
        std::vector<std::vector<int>> grid(layers + 1, std::vector<int>(layers + 1, -1));
        grid[0][0] = c;
        int cur = c;
        for (int i = 1; i <= layers; ++i) grid[i][0] = cur = bi.loop_next[cur];
        cur = c;
        for (int j = 1; j <= layers; ++j) grid[0][j] = cur = bi.loop_prev[cur];
        for (int i = 1; i <= layers; ++i) {
            const int b = grid[i][0];
            if (is_corner[b]) {
                int w = b;
                for (int j = 1; j <= layers; ++j) grid[i][j] = w = bi.loop_next[w];
                continue;
            }
            const std::vector<int> f = mesh.fan(b);
            std::vector<int> chain{b, mesh.to(f[1])};
            for (int j = 2; j <= layers; ++j) chain.push_back(straight_continuation(mesh, chain[j - 1], chain[j - 2]));
            for (int j = 1; j <= layers; ++j) grid[i][j] = chain[j];
        }
        std::vector<std::vector<int>> img(layers + 1, std::vector<int>(layers + 1, -1));
        img[0][0] = c;
        const std::vector<int>& along_i = corner_chain_ghosts.at({c, n2}); // mirror of (i,0) across c-n2
        const std::vector<int>& along_j = corner_chain_ghosts.at({c, n1}); // mirror of (0,j) across c-n1
        for (int i = 1; i <= layers; ++i) img[i][0] = along_i[i - 1];
        for (int j = 1; j <= layers; ++j) img[0][j] = along_j[j - 1];
        for (int i = 1; i <= layers; ++i) {
            for (int j = 1; j <= layers; ++j) img[i][j] = new_ghost(2.0 * mesh.position(c) - mesh.position(grid[i][j]));
        }
        for (int i = 0; i < layers; ++i) {
            for (int j = 0; j < layers; ++j) {
                quads.push_back({img[i][j], img[i + 1][j], img[i + 1][j + 1], img[i][j + 1]});
                ekinds.push_back(ElementKind::ghost);
            }
        }
    }

    return ControlMesh::from_quads(std::move(pos), std::move(quads), std::move(vkinds), std::move(ekinds), layers);
}

ControlMesh strip_ghosts(const ControlMesh& mesh)
{
    std::vector<int> remap(mesh.num_vertices(), -1);
    std::vector<Vec3> pos;
    std::vector<VertexKind> kinds;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.is_ghost_vertex(v)) continue;
        remap[v] = static_cast<int>(pos.size());
        pos.push_back(mesh.position(v));
        kinds.push_back(mesh.vertex_kind(v));
    }
    std::vector<Quad> quads;
    for (int f = 0; f < mesh.num_quads(); ++f) {
        if (mesh.is_ghost_element(f)) continue;
        Quad q = mesh.quad(f);
        for (int& v : q) v = remap[v];
        quads.push_back(q);
    }
    return ControlMesh::from_quads(std::move(pos), std::move(quads));
}

ControlMesh catmull_clark_refine(const ControlMesh& mesh)
{
    int layers_out = mesh.ghost_layers();
    ControlMesh g;
    if (mesh.has_ghosts()) {
        g = mesh;
    } else {
        bool open = false;
        for (int v = 0; v < mesh.num_vertices() && !open; ++v) open = !mesh.closed_fan(v);
        g = open ? reflect_ghosts(mesh, 1) : mesh;
    }

    const int nv = g.num_vertices();
    const int nf = g.num_quads();
    const int nh = g.num_halfedges();

    std::vector<int> edge_of(nh, -1);
    int ne = 0;
    for (int h = 0; h < nh; ++h) {
        const int t = g.twin(h);
        if (t < 0 || h < t) {
            edge_of[h] = ne;
            if (t >= 0) edge_of[t] = ne;
            ++ne;
        }
    }

    std::vector<Vec3> face_pt(nf);
    for (int f = 0; f < nf; ++f) {
        Vec3 s = Vec3::Zero();
        for (int v : g.quad(f)) s += g.position(v);
        face_pt[f] = 0.25 * s;
    }
    std::vector<Vec3> edge_pt(ne);
    for (int h = 0; h < nh; ++h) {
        const int t = g.twin(h);
        if (t >= 0 && t < h) continue;
        const Vec3 mid = g.position(g.from(h)) + g.position(g.to(h));
        edge_pt[edge_of[h]] = t < 0 ? Vec3(0.5 * mid)
                                    : Vec3(0.25 * (mid + face_pt[ControlMesh::face(h)] + face_pt[ControlMesh::face(t)]));
    }
    std::vector<Vec3> vert_pt(nv);
    for (int v = 0; v < nv; ++v) {
        if (!g.closed_fan(v)) {
            vert_pt[v] = g.position(v);
            continue;
        }
        const std::vector<int> f = g.fan(v);
        const double n = static_cast<double>(f.size());
        Vec3 favg = Vec3::Zero();
        Vec3 ravg = Vec3::Zero();
        for (int h : f) {
            favg += face_pt[ControlMesh::face(h)];
            ravg += 0.5 * (g.position(v) + g.position(g.to(h)));
        }
        favg /= n;
        ravg /= n;
        vert_pt[v] = (favg + 2.0 * ravg + (n - 3.0) * g.position(v)) / n;
    }

    // global ids: old vertices, edge points, face points; compacted to the kept ones
    const int total = nv + ne + nf;
    std::vector<Quad> children;
    for (int f = 0; f < nf; ++f) {
        if (g.is_ghost_element(f)) continue;
        for (int k = 0; k < 4; ++k) {
            const int h = 4 * f + k;
            children.push_back({g.quad(f)[k], nv + edge_of[h], nv + ne + f, nv + edge_of[ControlMesh::prev(h)]});
        }
    }
    std::vector<int> remap(total, -1);
    std::vector<char> used(total, 0);
    for (const Quad& q : children) {
        for (int v : q) used[v] = 1;
    }
    std::vector<Vec3> pos;
    for (int id = 0; id < total; ++id) {
        if (!used[id]) continue;
        remap[id] = static_cast<int>(pos.size());
        if (id < nv) {
            if (!g.closed_fan(id)) throw MeshError("refinement stencil incomplete at vertex " + std::to_string(id));
            pos.push_back(vert_pt[id]);
        } else if (id < nv + ne) {
            pos.push_back(edge_pt[id - nv]);
        } else {
            pos.push_back(face_pt[id - nv - ne]);
        }
    }
    for (Quad& q : children) {
        for (int& v : q) v = remap[v];
    }
    ControlMesh fine = ControlMesh::from_quads(std::move(pos), std::move(children));
    return layers_out > 0 ? reflect_ghosts(fine, layers_out) : fine;
}

ControlMesh load_obj(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw MeshError("cannot open mesh file " + path.string());
    std::vector<Vec3> verts;
    std::vector<Quad> quads;
    std::string line;
    int face_index = 0;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 x;
            if (!(ls >> x[0] >> x[1] >> x[2])) throw MeshError("malformed vertex record: " + line);
            verts.push_back(x);
        } else if (tag == "f") {
            std::vector<int> ids;
            std::string tok;
            while (ls >> tok) {
                const auto slash = tok.find('/');
                ids.push_back(std::stoi(tok.substr(0, slash)) - 1);
            }
            if (ids.size() != 4) throw MeshError("non-quad face at index " + std::to_string(face_index));
            quads.push_back({ids[0], ids[1], ids[2], ids[3]});
            ++face_index;
        }
    }

    std::filesystem::path sidecar = path;
    sidecar += ".json";
    if (std::filesystem::exists(sidecar)) {
        std::ifstream js(sidecar);
        const nlohmann::json j = nlohmann::json::parse(js);
        const int layers = j.value("ghost_layers", 0);
        std::vector<VertexKind> vk(verts.size(), VertexKind::interior);
        std::vector<ElementKind> ek(quads.size(), ElementKind::interior);
        for (int v : j.value("boundary_vertices", std::vector<int>{})) vk.at(v) = VertexKind::boundary;
        for (int v : j.value("ghost_vertices", std::vector<int>{})) vk.at(v) = VertexKind::ghost;
        for (int f : j.value("ghost_elements", std::vector<int>{})) ek.at(f) = ElementKind::ghost;
        return ControlMesh::from_quads(std::move(verts), std::move(quads), std::move(vk), std::move(ek), layers);
    }
    return ControlMesh::from_quads(std::move(verts), std::move(quads));
}

void save_obj(const ControlMesh& mesh, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw MeshError("cannot write mesh file " + path.string());
    out.precision(17);
    out << "# quad control mesh: " << mesh.num_vertices() << " vertices, " << mesh.num_quads() << " quads\n";
    for (const Vec3& x : mesh.positions()) out << "v " << x[0] << ' ' << x[1] << ' ' << x[2] << '\n';
    for (const Quad& q : mesh.quads()) {
        out << "f " << q[0] + 1 << ' ' << q[1] + 1 << ' ' << q[2] + 1 << ' ' << q[3] + 1 << '\n';
    }
    if (mesh.has_ghosts()) {
        nlohmann::json j;
        j["ghost_layers"] = mesh.ghost_layers();
        std::vector<int> bv, gv, ge;
        for (int v = 0; v < mesh.num_vertices(); ++v) {
            if (mesh.vertex_kind(v) == VertexKind::boundary) bv.push_back(v);
            if (mesh.is_ghost_vertex(v)) gv.push_back(v);
        }
        for (int f = 0; f < mesh.num_quads(); ++f) {
            if (mesh.is_ghost_element(f)) ge.push_back(f);
        }
        j["boundary_vertices"] = bv;
        j["ghost_vertices"] = gv;
        j["ghost_elements"] = ge;
        std::filesystem::path sidecar = path;
        sidecar += ".json";
        std::ofstream(sidecar) << j.dump(2) << '\n';
    }
}

} // namespace miga
