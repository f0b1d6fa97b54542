#pragma once

#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "miga/blending.hpp"
#include "miga/polynomial.hpp"
#include "miga/quadmesh.hpp"

namespace miga {

struct BasisConfig {
    BlendingSpec blending;
    PolySpec poly;
    int ring_depth = 1;
};

/// Local fit of one patch: phi(xi) = G m(xi), where m are the scaled monomials of `basis`
/// and row I of G belongs to the I-th patch node.
struct PatchOperator {
    PolyBasis basis;
    Eigen::MatrixXd projection; // A, dim x nodes
    Eigen::MatrixXd fit;        // G = A^T C, nodes x terms
};

struct Patch {
    int center = -1;
    int valence = 0;
    int scale = 1;       // block coordinates are divided by this before the power map
    int blend_depth = 1; // blending covers [0, blend_depth]^2 of each sector block
    bool regular_layout = true;
    RingPatch ring;
    std::vector<int> vertices; // node vertex ids
    std::vector<Vec2> nodes;   // node chart coordinates
    std::shared_ptr<const PatchOperator> op;
};

/// One patch whose blending function is non-zero over an element, and how the element sits
/// in that patch's chart.
struct Cover {
    int patch = -1;
    ElementChart chart;
    int blend_depth = 1;
};

/// Chart positions of the nodes of a ring patch (placements of a node are averaged).
std::vector<Vec2> ring_node_positions(const RingPatch& ring, int scale);

///
/// The manifold basis on a ghosted control mesh: one patch per non-ghost vertex, with
/// projection operators shared between patches of identical layout.
///
/// Only connectivity is used; vertex coordinates never enter the basis.
///
class ManifoldBasis {
public:
    ManifoldBasis(ControlMesh mesh, const BasisConfig& config);

    [[nodiscard]] const ControlMesh& mesh() const { return mesh_; }
    [[nodiscard]] const BasisConfig& config() const { return config_; }
    [[nodiscard]] const std::vector<Patch>& patches() const { return patches_; }
    /// -1 for ghost vertices
    [[nodiscard]] int patch_of_vertex(int v) const { return patch_of_vertex_[v]; }
    [[nodiscard]] const std::vector<Cover>& covers(int element) const { return covers_[element]; }
    /// Sorted ids of all vertices whose basis functions are non-zero over the element.
    [[nodiscard]] const std::vector<int>& element_vertices(int element) const { return element_vertices_[element]; }
    /// Operators built, shared ones counted once.
    [[nodiscard]] int distinct_operators() const { return distinct_operators_; }

    /// Normalised blending weights (patch, w) at an element point.
    [[nodiscard]] std::vector<std::pair<int, double>> blending_weights(int element, const Vec2& eta) const;

private:
    ControlMesh mesh_;
    BasisConfig config_;
    std::vector<Patch> patches_;
    std::vector<int> patch_of_vertex_;
    std::vector<std::vector<Cover>> covers_;
    std::vector<std::vector<int>> element_vertices_;
    int distinct_operators_ = 0;
};

} // namespace miga
