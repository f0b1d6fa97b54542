#include "miga/blending.hpp"

#include <stdexcept>

namespace miga {

Profile blend_profile(double t, int degree)
{
    if (degree < 1 || degree > 3) throw std::invalid_argument("blending degree must be 1, 2 or 3");
    const double c = 0.5 * (degree + 1);
    const double x = c * t;
    Profile p;
    switch (degree) {
    case 1:
        if (x < 1.0) p = {1.0 - x, -1.0, 0.0};
        break;
    case 2:
        if (x < 0.5) {
            p = {0.75 - x * x, -2.0 * x, -2.0};
        } else if (x < 1.5) {
            const double y = 1.5 - x;
            p = {0.5 * y * y, -y, 1.0};
        }
        break;
    default:
        if (x < 1.0) {
            p = {2.0 / 3.0 - x * x + 0.5 * x * x * x, -2.0 * x + 1.5 * x * x, -2.0 + 3.0 * x};
        } else if (x < 2.0) {
            const double y = 2.0 - x;
            p = {y * y * y / 6.0, -0.5 * y * y, y};
        }
        break;
    }
    p.d1 *= c;
    p.d2 *= c * c;
    return p;
}

BlendValue blending_raw(const Vec2& eta, const BlendingSpec& spec)
{
    const Profile a = blend_profile(eta[0], spec.degree);
    const Profile b = blend_profile(eta[1], spec.degree);
    BlendValue w;
    w.value = a.value * b.value;
    w.grad << a.d1 * b.value, a.value * b.d1;
    w.hess << a.d2 * b.value, a.d1 * b.d1, a.d1 * b.d1, a.value * b.d2;
    return w;
}

BlendValue blending_block(const Vec2& block, int depth, const BlendingSpec& spec)
{
    const double s = 1.0 / depth;
    BlendValue w = blending_raw(block * s, spec);
    w.grad *= s;
    w.hess *= s * s;
    return w;
}

} // namespace miga
