#pragma once

#include <vector>

#include "miga/patches.hpp"
#include "miga/quadrature.hpp"

namespace miga {

enum class Execution { serial, parallel };

///
/// Basis functions of one element at a set of parameter points. Matrices are points x
/// vertices, columns follow `vertices` (sorted global ids). Derivatives are with respect to
/// the element parameter eta; second derivatives are stored as (11, 12, 22).
///
struct ElementBasis {
    int element = -1;
    int order = 0;
    std::vector<int> vertices;
    Eigen::MatrixXd value;
    std::array<Eigen::MatrixXd, 2> grad;
    std::array<Eigen::MatrixXd, 3> hess;

    [[nodiscard]] int num_points() const { return static_cast<int>(value.rows()); }
    [[nodiscard]] int num_vertices() const { return static_cast<int>(vertices.size()); }
};

/// Evaluates the basis functions of `element` at `points`. `order` 0, 1 or 2 selects how many
/// derivatives are computed; derivatives at a chart singularity throw ChartError.
ElementBasis evaluate_element(const ManifoldBasis& basis, int element, const std::vector<Vec2>& points, int order);

/// Basis values at a control vertex (limit at the element corner), as (vertex, N) pairs.
std::vector<std::pair<int, double>> evaluate_at_vertex(const ManifoldBasis& basis, int vertex);

/// Element and parameter point at which a vertex sits in a non-ghost element.
std::pair<int, Vec2> vertex_location(const ControlMesh& mesh, int vertex);

struct BasisTable {
    QuadRule rule;
    int order = 0;
    std::vector<ElementBasis> elements; // indexed by element id; ghost entries are empty
};

ElementBasis tabulate_element(const ManifoldBasis& basis, int element, const QuadRule& rule, int order);
BasisTable tabulate_mesh(const ManifoldBasis& basis, const QuadRule& rule, int order, Execution exec);

/// Field value and eta-derivatives at point q of an element.
struct FieldValue {
    double value = 0.0;
    Vec2 grad = Vec2::Zero();
    Mat2 hess = Mat2::Zero();
};
/// Throws std::out_of_range when a contributing vertex has no coefficient.
FieldValue evaluate_field(const std::vector<double>& coeffs, const ElementBasis& eb, int q);

} // namespace miga
