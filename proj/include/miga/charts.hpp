#pragma once

#include <array>
#include <stdexcept>

#include <Eigen/Core>

namespace miga {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
/// Second derivatives of a planar map: h[k](a, b) = d^2 xi_k / d eta_a d eta_b.
using Hess2 = std::array<Mat2, 2>;

class ChartError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sector map xi = R(2 pi sector / valence) * (eta1 + i eta2)^(4 / valence).
struct ChartMap {
    int valence = 4;
    int sector = 0;
};

Vec2 square_to_wedge(const Vec2& eta, int valence);
/// Inverse of square_to_wedge; throws if zeta lies outside the image of the unit square.
Vec2 wedge_to_square(const Vec2& zeta, int valence);

Vec2 chart_map(const Vec2& eta, const ChartMap& chart);
Vec2 chart_inverse(const Vec2& xi, const ChartMap& chart);
/// Throws at eta = 0 for valence != 4, where the power map is singular.
Mat2 chart_jacobian(const Vec2& eta, const ChartMap& chart);
Hess2 chart_hessian(const Vec2& eta, const ChartMap& chart);

///
/// How one element sits in one vertex chart. The element parameter eta is turned into
/// the corner-local coordinate lambda (element corner `corner` at lambda = 0), shifted by the
/// cell offset inside the sector block, scaled by 1 / `scale` and pushed through the sector map.
///
struct ElementChart {
    ChartMap map;
    int corner = 0;
    int oi = 0;
    int oj = 0;
    int scale = 1;
};

/// lambda = rot_corner(eta), a rigid motion of the unit square.
Vec2 corner_local(const Vec2& eta, int corner);
Vec2 corner_local_inverse(const Vec2& lambda, int corner);
/// d lambda / d eta (constant).
Mat2 corner_local_jacobian(int corner);

/// Block coordinate offset + lambda.
Vec2 element_to_block(const Vec2& eta, const ElementChart& ec);
Vec2 element_to_chart(const Vec2& eta, const ElementChart& ec);
/// Throws if xi does not lie over the element.
Vec2 chart_to_element(const Vec2& xi, const ElementChart& ec);

struct ChartDerivatives {
    Vec2 xi;
    Mat2 jacobian; // d xi / d eta
    Hess2 hessian;
};
ChartDerivatives element_chart_derivatives(const Vec2& eta, const ElementChart& ec);

/// Coordinates of the same element point in chart j given its coordinates in chart i.
Vec2 transition_apply(const Vec2& xi_i, const ElementChart& from, const ElementChart& to);

} // namespace miga
