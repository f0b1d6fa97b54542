#pragma once

#include "miga/quadmesh.hpp"

namespace miga {

/// n x n grid on the unit square [0,1]^2.
ControlMesh structured_square(int n);

/// 8 x 8 unit-square mesh with two rotated interior edges, giving four valence-3 and four
/// valence-5 vertices, followed by Laplacian smoothing of the interior vertices.
ControlMesh unstructured_square();

/// O-grid on the disk of the given radius: a k x k inner block surrounded by `layers`
/// rings of quads. The four inner-block corners have valence 3.
ControlMesh disk_ogrid(double radius = 0.5, int k = 4, int layers = 2);

/// Open cylinder about the z axis, z in [-length/2, length/2]. `n_circ` must be a multiple
/// of 4 and `n_axial` even so that load points coincide with vertices. With `rotated_edges`
/// two interior edges are rotated, introducing valence-3 and valence-5 vertices.
ControlMesh cylinder_mesh(double radius, double length, int n_circ, int n_axial, bool rotated_edges = false);

/// Disk made of `valence` n x n sector blocks around a centre vertex of that valence, laid
/// out by the sector power maps.
ControlMesh star_mesh(int valence, int n);
/// Upper half (z >= 0) of a cube-sphere with `n` elements per cube edge (n even).
ControlMesh hemisphere_mesh(double radius, int n);

/// Rotates the interior edge p-q inside the hexagon formed by its two quads.
void rotate_edge(std::vector<Quad>& quads, int p, int q);

/// Jacobi smoothing of non-boundary vertices towards the average of their edge neighbours.
ControlMesh laplacian_smooth(const ControlMesh& mesh, int iterations);

} // namespace miga
