#pragma once

#include <vector>

#include "miga/charts.hpp"

namespace miga {

/// Gauss-Legendre points and weights on (0, 1); weights sum to 1.
struct Rule1D {
    std::vector<double> points;
    std::vector<double> weights;
};
Rule1D gauss_legendre(int n);

/// Tensor Gauss rule on the unit square, point index q = j * n + i.
struct QuadRule {
    int n = 0;
    std::vector<Vec2> points;
    std::vector<double> weights;
    [[nodiscard]] int size() const { return static_cast<int>(points.size()); }
};
QuadRule gauss_rule(int n);

} // namespace miga
