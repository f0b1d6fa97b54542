#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace miga {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Quad = std::array<int, 4>;

/// Raised for malformed or unsupported control meshes.
class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class VertexKind : std::uint8_t { interior, boundary, ghost };
enum class ElementKind : std::uint8_t { interior, ghost };

///
/// Quadrilateral control mesh with half-edge connectivity.
///
/// Half-edge `h` belongs to quad `h / 4` and runs from corner `h % 4` to corner
/// `(h + 1) % 4`. Quads are counter-clockwise; the element parameter square has
/// corner 0 at (0,0), 1 at (1,0), 2 at (1,1) and 3 at (0,1).
///
/// Instances are immutable once built; geometry updates produce a new mesh.
///
class ControlMesh {
public:
    ControlMesh() = default;

    /// Builds connectivity and validates the quad list. Vertices not referenced by any
    /// quad are rejected. Boundary flags are derived from open edges unless `kinds` is
    /// given (ghosted meshes carry their own flags).
    static ControlMesh from_quads(std::vector<Vec3> vertices,
                                  std::vector<Quad> quads,
                                  std::vector<VertexKind> vertex_kinds = {},
                                  std::vector<ElementKind> element_kinds = {},
                                  int ghost_layers = 0);

    [[nodiscard]] ControlMesh with_positions(std::vector<Vec3> positions) const;

    [[nodiscard]] int num_vertices() const { return static_cast<int>(vertices_.size()); }
    [[nodiscard]] int num_quads() const { return static_cast<int>(quads_.size()); }
    [[nodiscard]] int num_halfedges() const { return 4 * num_quads(); }

    [[nodiscard]] const std::vector<Vec3>& positions() const { return vertices_; }
    [[nodiscard]] const Vec3& position(int v) const { return vertices_[v]; }
    [[nodiscard]] const std::vector<Quad>& quads() const { return quads_; }
    [[nodiscard]] const Quad& quad(int f) const { return quads_[f]; }
    [[nodiscard]] VertexKind vertex_kind(int v) const { return vertex_kinds_[v]; }
    [[nodiscard]] ElementKind element_kind(int f) const { return element_kinds_[f]; }
    [[nodiscard]] bool is_ghost_vertex(int v) const { return vertex_kinds_[v] == VertexKind::ghost; }
    [[nodiscard]] bool is_ghost_element(int f) const { return element_kinds_[f] == ElementKind::ghost; }
    [[nodiscard]] int ghost_layers() const { return ghost_layers_; }
    [[nodiscard]] bool has_ghosts() const { return ghost_layers_ > 0; }

    // half-edge navigation
    [[nodiscard]] static int face(int h) { return h / 4; }
    [[nodiscard]] static int corner(int h) { return h % 4; }
    [[nodiscard]] static int next(int h) { return h - h % 4 + (h % 4 + 1) % 4; }
    [[nodiscard]] static int prev(int h) { return h - h % 4 + (h % 4 + 3) % 4; }
    [[nodiscard]] int from(int h) const { return quads_[h / 4][h % 4]; }
    [[nodiscard]] int to(int h) const { return quads_[h / 4][(h % 4 + 1) % 4]; }
    [[nodiscard]] int twin(int h) const { return twin_[h]; }

    /// Outgoing half-edge of `v`; for open fans this is the most clockwise one.
    [[nodiscard]] int outgoing(int v) const { return outgoing_[v]; }
    /// Next outgoing half-edge counter-clockwise around `from(h)`, or -1 at an open edge.
    [[nodiscard]] int rotate_ccw(int h) const { return twin_[prev(h)]; }

    /// Number of incident quads.
    [[nodiscard]] int valence(int v) const { return valence_[v]; }
    /// True if the fan of quads around `v` closes.
    [[nodiscard]] bool closed_fan(int v) const { return closed_[v]; }

    /// Outgoing half-edges of `v` in counter-clockwise order, starting at outgoing(v).
    [[nodiscard]] std::vector<int> fan(int v) const;

    /// Non-ghost vertices with a closed fan and valence != 4.
    [[nodiscard]] int count_extraordinary() const;

    /// Half-edges of non-ghost quads whose twin is missing or lies in a ghost quad.
    [[nodiscard]] std::vector<int> domain_boundary_halfedges() const;

private:
    void build_connectivity();

    std::vector<Vec3> vertices_;
    std::vector<Quad> quads_;
    std::vector<VertexKind> vertex_kinds_;
    std::vector<ElementKind> element_kinds_;
    int ghost_layers_ = 0;

    std::vector<int> twin_;
    std::vector<int> outgoing_;
    std::vector<int> valence_;
    std::vector<bool> closed_;
};

/// Placement of one element inside a ring patch. The element corner `corner` sits at the
/// cell origin, block coordinates of the cell are [oi, oi+1] x [oj, oj+1] inside `sector`.
struct CellPlacement {
    int element = -1;
    int sector = 0;
    int oi = 0;
    int oj = 0;
    int corner = 0;
};

struct BlockPosition {
    int sector = 0;
    int bi = 0;
    int bj = 0;
};

/// A ring vertex and its block position(s). Regular layouts have exactly one position;
/// relaxed two-ring layouts may reach a vertex along several paths.
struct RingNode {
    int vertex = -1;
    std::vector<BlockPosition> positions;
};

///
/// One- or two-ring neighbourhood of a vertex in counter-clockwise sector order.
///
/// `cells` are the elements the patch covers with its blending function; `nodes` are the
/// vertices used by the local least-squares fit. Both are ordered deterministically.
///
struct RingPatch {
    int center = -1;
    int valence = 0;
    int depth = 1;       // ring depth of the node set
    int blend_depth = 1; // ring depth covered by the blending function
    bool regular_layout = true;
    std::vector<CellPlacement> cells;
    std::vector<int> ordered_elements;
    std::vector<int> ordered_vertices;
    std::vector<RingNode> nodes; // parallel to ordered_vertices

    [[nodiscard]] int sector_of_element(int element) const;
};

/// Strict ring extraction. Depth 2 requires every one-ring vertex to be regular.
RingPatch extract_ring(const ControlMesh& mesh, int vertex, int depth);

/// Two-ring node set with one-ring blending support; used where a strict two-ring
/// layout does not exist (irregular vertices in the one-ring, wrapped meshes).
RingPatch extract_relaxed_two_ring(const ControlMesh& mesh, int vertex);

/// Adds `layers` rings of mirrored ghost elements along every open boundary.
ControlMesh reflect_ghosts(const ControlMesh& mesh, int layers);

/// Removes ghost elements and ghost vertices; non-ghost vertex ids are preserved.
ControlMesh strip_ghosts(const ControlMesh& mesh);

/// One level of Catmull-Clark refinement. Boundary stencils come from a ghost layer,
/// which is regenerated on the result with the same layer count as the input.
ControlMesh catmull_clark_refine(const ControlMesh& mesh);

ControlMesh load_obj(const std::filesystem::path& path);
void save_obj(const ControlMesh& mesh, const std::filesystem::path& path);

} // namespace miga
