#include "miga/patches.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <tuple>

namespace miga {

std::vector<Vec2> ring_node_positions(const RingPatch& ring, int scale)
{
    std::vector<Vec2> out;
    out.reserve(ring.nodes.size());
    for (const RingNode& node : ring.nodes) {
        Vec2 sum = Vec2::Zero();
        for (const BlockPosition& b : node.positions) {
            sum += chart_map(Vec2(b.bi, b.bj) / scale, {ring.valence, b.sector});
        }
        out.push_back(sum / static_cast<double>(node.positions.size()));
    }
    return out;
}

namespace {

std::shared_ptr<const PatchOperator> build_operator(const Patch& p, const PolySpec& spec)
{
    double radius = 0.0;
    for (const Vec2& x : p.nodes) radius = std::max(radius, x.cwiseAbs().maxCoeff());
    PolyBasis basis = PolyBasis::for_patch(spec, static_cast<int>(p.nodes.size()), radius);
    basis.align_nodes(p.nodes);
    Eigen::MatrixXd a;
    try {
        a = projection_matrix(basis, p.nodes, p.valence);
    } catch (const std::runtime_error&) {
        if (basis.kind() != PolyKind::tensor_lagrange || basis.dim() > static_cast<int>(p.nodes.size())) throw;
        a = min_norm_projection_matrix(basis, p.nodes);
    }
    Eigen::MatrixXd g = a.transpose() * basis.coefficients();
    return std::make_shared<const PatchOperator>(PatchOperator{std::move(basis), std::move(a), std::move(g)});
}

} // namespace

ManifoldBasis::ManifoldBasis(ControlMesh mesh, const BasisConfig& config)
    : mesh_(std::move(mesh)), config_(config)
{
    if (config.ring_depth != 1 && config.ring_depth != 2) throw std::invalid_argument("ring depth must be 1 or 2");
    if (mesh_.ghost_layers() < config.ring_depth) {
        bool open = false;
        for (int v = 0; v < mesh_.num_vertices() && !open; ++v) open = !mesh_.closed_fan(v) && !mesh_.is_ghost_vertex(v);
        if (open) throw MeshError("mesh needs at least " + std::to_string(config.ring_depth) + " ghost layers");
    }

    const int nv = mesh_.num_vertices();
    patch_of_vertex_.assign(nv, -1);
    std::map<std::tuple<int, int>, std::shared_ptr<const PatchOperator>> cache;
    for (int v = 0; v < nv; ++v) {
        if (mesh_.is_ghost_vertex(v)) continue;
        Patch p;
        p.center = v;
        if (config.ring_depth == 1) {
            p.ring = extract_ring(mesh_, v, 1);
            p.scale = 1;
            p.blend_depth = 1;
        } else {
            try {
                p.ring = extract_ring(mesh_, v, 2);
                p.blend_depth = 2;
            } catch (const MeshError&) {
                p.ring = extract_relaxed_two_ring(mesh_, v);
                p.blend_depth = 1;
            }
            p.scale = 2;
        }
        p.valence = p.ring.valence;
        p.regular_layout = p.ring.regular_layout;
        p.vertices = p.ring.ordered_vertices;
        p.nodes = ring_node_positions(p.ring, p.scale);
        if (p.regular_layout) {
            auto& slot = cache[{p.valence, p.blend_depth}];
            if (!slot) {
                slot = build_operator(p, config.poly);
                ++distinct_operators_;
            }
            p.op = slot;
        } else {
            p.op = build_operator(p, config.poly);
            ++distinct_operators_;
        }
        patch_of_vertex_[v] = static_cast<int>(patches_.size());
        patches_.push_back(std::move(p));
    }

    covers_.assign(mesh_.num_quads(), {});
    for (int j = 0; j < static_cast<int>(patches_.size()); ++j) {
        const Patch& p = patches_[j];
        for (const CellPlacement& c : p.ring.cells) {
            if (c.oi >= p.blend_depth || c.oj >= p.blend_depth) continue;
            if (mesh_.is_ghost_element(c.element)) continue;
            covers_[c.element].push_back({j, {{p.valence, c.sector}, c.corner, c.oi, c.oj, p.scale}, p.blend_depth});
        }
    }
    element_vertices_.assign(mesh_.num_quads(), {});
    for (int e = 0; e < mesh_.num_quads(); ++e) {
        if (mesh_.is_ghost_element(e)) continue;
        if (covers_[e].empty()) throw MeshError("element " + std::to_string(e) + " is not covered by any patch");
        std::set<int> verts;
        for (const Cover& c : covers_[e]) verts.insert(patches_[c.patch].vertices.begin(), patches_[c.patch].vertices.end());
        element_vertices_[e].assign(verts.begin(), verts.end());
    }
}

std::vector<std::pair<int, double>> ManifoldBasis::blending_weights(int element, const Vec2& eta) const
{
    std::vector<std::pair<int, double>> out;
    double sum = 0.0;
    for (const Cover& c : covers_[element]) {
        const double w = blending_block(element_to_block(eta, c.chart), c.blend_depth, config_.blending).value;
        out.emplace_back(c.patch, w);
        sum += w;
    }
    if (!(sum > 0.0)) throw std::runtime_error("all blending weights vanish on element " + std::to_string(element));
    for (auto& [j, w] : out) w /= sum;
    return out;
}

} // namespace miga
