#pragma once

#include <functional>
#include <vector>

#include "miga/fem.hpp"

namespace miga {

struct ShellMaterial {
    double youngs_modulus = 1.0;
    double poisson_ratio = 0.0;
    double thickness = 1.0;

    /// Throws std::invalid_argument for E <= 0, h <= 0 or nu outside (-1, 0.5).
    void validate() const;
    [[nodiscard]] double membrane_rigidity() const;
    [[nodiscard]] double bending_rigidity() const;
};

/// Reference geometry at a tabulated point.
struct SurfaceState {
    Vec3 x;
    std::array<Vec3, 2> tangents;
    std::array<Vec3, 3> second; // x_11, x_12, x_22
    Vec3 normal;
    double area_element = 0.0; // |a_1 x a_2|
    Mat2 metric;               // a_ab
    Mat2 curvature;            // b_ab = x_ab . n
};
SurfaceState surface_state(const ControlMesh& mesh, const ElementBasis& eb, int q);

/// Contravariant constitutive matrix in Voigt order (11, 22, 12) with engineering shear.
Eigen::Matrix3d contravariant_material(const Mat2& metric, double poisson_ratio);

struct PointLoad {
    int vertex = -1;
    Vec3 force = Vec3::Zero();
};

struct ShellLoad {
    /// Force per unit reference area as a function of position and unit normal.
    std::function<Vec3(const Vec3&, const Vec3&)> area;
    std::vector<PointLoad> points;
};

/// Linear Kirchhoff-Love stiffness (membrane + bending) and load vector, 3 dofs per vertex.
/// Requires cubic blending and second-derivative tabulation.
SparseSystem assemble_kirchhoff_love(const ManifoldBasis& basis, const QuadRule& rule, const ShellMaterial& material,
                                     const ShellLoad& load, Execution exec);

/// Partial Navier double sine series of the simply supported unit square plate; `terms`
/// counts the odd indices i, j <= terms.
double navier_plate_deflection(const Vec2& x, double pressure, const ShellMaterial& material, int terms = 101);
/// Gradient of the same partial sum.
Vec2 navier_plate_gradient(const Vec2& x, double pressure, const ShellMaterial& material, int terms = 101);

/// Throws if the point loads, applied at the surface points of their vertices, carry a net force
/// or moment above `tolerance` relative to sum |F| (times the load extent for moments).
void check_self_equilibrated(const ManifoldBasis& basis, const std::vector<PointLoad>& loads, double tolerance = 1e-8);

/// Surface point of a control vertex.
Vec3 surface_point_at_vertex(const ManifoldBasis& basis, int vertex);

/// Six control-vertex dofs whose pinning removes rigid translations and rotations: three
/// components at one vertex, two at a distant vertex and one at a third off the line.
std::vector<int> rigid_mode_constraints(const ControlMesh& mesh, const DofMap& dofs, int first_vertex = -1);

/// Rigid displacement modes in coefficient space (dofs x 6).
Eigen::MatrixXd rigid_modes(const ControlMesh& mesh, const DofMap& dofs);

/// Pins the given dofs to zero (row and column replaced by the identity). Throws if they do not
/// fix all six rigid modes.
void remove_rigid_modes(SparseSystem& system, const ControlMesh& mesh, const std::vector<int>& pinned);

/// Displacement vector at a control vertex.
Vec3 displacement_at_vertex(const ManifoldBasis& basis, const DofMap& dofs, const Eigen::VectorXd& x, int vertex);

} // namespace miga
