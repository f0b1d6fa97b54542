#pragma once

#include <functional>
#include <vector>

#include <Eigen/Sparse>

#include "miga/basis_table.hpp"

namespace miga {

using ScalarField = std::function<double(const Vec2&)>;
using GradientField = std::function<Vec2(const Vec2&)>;

/// Maps mesh vertices to unknowns. Only vertices that carry a basis function over some domain
/// element get dofs; each has `components` consecutive unknowns.
struct DofMap {
    int components = 1;
    int num_nodes = 0;
    std::vector<int> node_of_vertex; // -1 when the vertex has no dof
    std::vector<int> vertex_of_node;

    [[nodiscard]] int num_dofs() const { return components * num_nodes; }
    [[nodiscard]] int dof(int vertex, int component) const { return components * node_of_vertex[vertex] + component; }
};
DofMap make_dof_map(const ManifoldBasis& basis, int components);

struct SparseSystem {
    DofMap dofs;
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd rhs;
};

/// Element contribution: dense block over sorted global dofs.
struct LocalSystem {
    std::vector<int> dofs;
    Eigen::MatrixXd matrix;
    Eigen::VectorXd rhs;
};

///
/// Accumulates element blocks into a fixed sparsity pattern. Blocks are added one at a time in
/// the caller's order, so the result does not depend on how the blocks were computed.
///
class SparseAssembler {
public:
    SparseAssembler(int n, const std::vector<std::vector<int>>& element_dofs);
    void add(const LocalSystem& local);
    [[nodiscard]] Eigen::SparseMatrix<double> matrix() const;
    [[nodiscard]] const Eigen::VectorXd& rhs() const { return rhs_; }

private:
    int n_;
    std::vector<int> outer_;
    std::vector<int> inner_;
    std::vector<double> values_;
    Eigen::VectorXd rhs_;
};

using ElementKernel = std::function<void(int element, LocalSystem& out)>;

/// Runs `kernel` over `elements` (in chunks, in parallel when requested) and scatters the
/// blocks in list order.
void assemble(SparseAssembler& assembler, const std::vector<int>& elements, const ElementKernel& kernel, Execution exec);

/// Domain elements of the basis mesh in id order.
std::vector<int> domain_elements(const ControlMesh& mesh);

/// Vertex coordinates, values and first/second derivatives of the geometry at tabulated points.
Vec3 geometry_point(const ControlMesh& mesh, const ElementBasis& eb, int q);
std::array<Vec3, 2> geometry_tangents(const ControlMesh& mesh, const ElementBasis& eb, int q);

/// Stiffness of -div grad u = q on a planar mesh (z ignored).
SparseSystem assemble_poisson(const ManifoldBasis& basis, const QuadRule& rule, const ScalarField& source, Execution exec);

/// Point on a domain boundary edge: element, edge half-edge and parameter along the edge.
struct BoundarySample {
    int element = -1;
    Vec2 eta;
    Vec2 direction; // d eta / d s along the edge, s in [0, 1]
    double weight = 0.0;
};
std::vector<BoundarySample> boundary_samples(const ControlMesh& mesh, int points_per_edge);

/// Adds beta * int N_I N_J ds to the matrix and beta * int N_I g_c ds to the right-hand side
/// for every component c. `values` may be empty for homogeneous data.
void apply_penalty_dirichlet(SparseSystem& system, const ManifoldBasis& basis, double beta, int points_per_edge,
                             const std::vector<ScalarField>& values, Execution exec);

/// Sparse Cholesky with two refinement steps, falling back to diagonally preconditioned CG.
/// Throws std::runtime_error if the backward error |b - Ax| / (|A| |x| + |b|) stays above `tolerance`.
Eigen::VectorXd solve(const SparseSystem& system, double tolerance = 1e-10);

/// Per-vertex coefficients of one component (zero where the vertex has no dof).
std::vector<double> vertex_coefficients(const DofMap& dofs, const Eigen::VectorXd& x, int component = 0);

struct ErrorNorms {
    double l2 = 0.0;
    double h1_semi = 0.0;
};
ErrorNorms error_norms(const ManifoldBasis& basis, const QuadRule& rule, const std::vector<double>& coeffs,
                       const ScalarField& exact, const GradientField& exact_grad, Execution exec);

/// Field value at a control vertex.
double evaluate_at_vertex(const ManifoldBasis& basis, const std::vector<double>& coeffs, int vertex);

/// Largest element diameter (corner distance) over domain elements.
double max_element_diameter(const ControlMesh& mesh);

} // namespace miga
