#pragma once

#include "miga/charts.hpp"

namespace miga {

struct BlendingSpec {
    int degree = 3; // 1, 2 or 3
};

/// Profile b(t) on [0, 1] with its first two derivatives. b is the centred uniform B-spline of
/// the given degree stretched to the support [-1, 1], so b(1) = 0 with contact order degree - 1.
struct Profile {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};
Profile blend_profile(double t, int degree);

struct BlendValue {
    double value = 0.0;
    Vec2 grad = Vec2::Zero();
    Mat2 hess = Mat2::Zero();
};

/// Raw tensor-product weight b(eta1) b(eta2) on the unit square.
BlendValue blending_raw(const Vec2& eta, const BlendingSpec& spec);

/// Raw weight at block coordinate `block` of a patch whose blending covers `depth` rings.
BlendValue blending_block(const Vec2& block, int depth, const BlendingSpec& spec);

} // namespace miga
