#pragma once

#include <functional>
#include <string>
#include <vector>

#include "miga/patches.hpp"

namespace miga {

/// Target geometry given by its closest-point projection.
struct FitTarget {
    std::string name;
    std::function<Vec3(const Vec3&)> project;
};

/// Circle of the given radius about the origin in the z = 0 plane.
FitTarget circle_target(double radius);
/// Line through `point` with direction `direction`.
FitTarget line_target(const Vec3& point, const Vec3& direction);
/// Infinite cylinder about the z axis.
FitTarget cylinder_target(double radius);
/// Sphere about the origin.
FitTarget sphere_target(double radius);
/// Named lookup: "circle" {R}, "cylinder" {R} or {R, L}, "hemisphere" / "sphere" {R}.
FitTarget make_target(const std::string& name, const std::vector<double>& params);

enum class FitDomain {
    boundary, // samples on domain boundary edges
    surface,  // samples over all domain elements
};

struct FitProblem {
    FitTarget target;
    FitDomain domain = FitDomain::boundary;
    std::vector<int> free_vertices;
    int samples = 4; // Gauss points per edge, or per direction on elements
    int iterations = 4;
};

struct FitResult {
    std::vector<Vec3> positions;
    double initial_rms = 0.0; // RMS distance of the samples to the target
    double final_rms = 0.0;
    int num_samples = 0;
};

/// Least-squares update of the free control vertices so that the surface samples move onto
/// the target. Targets are re-projected between iterations. Throws std::invalid_argument for
/// an empty free set and std::runtime_error for a singular normal matrix.
FitResult fit_to_target(const ManifoldBasis& basis, const FitProblem& problem);

/// Boundary and ghost vertices plus every vertex sharing an element with a boundary vertex.
std::vector<int> near_boundary_vertices(const ControlMesh& mesh);

/// All vertices of the mesh.
std::vector<int> all_vertices(const ControlMesh& mesh);

} // namespace miga
