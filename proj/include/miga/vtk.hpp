#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "miga/patches.hpp"

namespace miga {

///
/// Writes the smooth surface and a field as a legacy ASCII VTK unstructured grid. Every domain
/// element is sampled on a (2^s + 1)^2 grid, giving 4^s quads per element. `field` holds one
/// per-vertex coefficient array per component (1 for a scalar, 3 for a vector).
///
void export_vtk(const ManifoldBasis& basis, const std::vector<std::vector<double>>& field, const std::string& name,
                int subdivision, const std::filesystem::path& path);

} // namespace miga
