#include "miga/charts.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace miga {

namespace {

using cplx = std::complex<double>;

constexpr double kTol = 1e-10;

double exponent(int valence)
{
    if (valence < 3) throw ChartError("chart valence must be at least 3");
    return 4.0 / valence;
}

Mat2 rotation(const ChartMap& chart)
{
    const double a = 2.0 * std::numbers::pi * chart.sector / chart.valence;
    Mat2 r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
}

// f = z^alpha with first and second complex derivatives
struct Power {
    cplx f, df, d2f;
};

Power power(const Vec2& eta, int valence, bool derivatives)
{
    if (valence == 4) return {cplx(eta[0], eta[1]), 1.0, 0.0};
    const double alpha = exponent(valence);
    const cplx z(eta[0], eta[1]);
    if (std::abs(z) == 0.0) {
        if (derivatives) throw ChartError("singular chart derivative at eta = (0,0)");
        return {0.0, 0.0, 0.0};
    }
    const cplx za = std::pow(z, alpha);
    if (!derivatives) return {za, 0.0, 0.0};
    const cplx df = alpha * za / z;
    const cplx d2f = (alpha - 1.0) * df / z;
    return {za, df, d2f};
}

Mat2 complex_jacobian(const cplx& df)
{
    Mat2 j;
    j << df.real(), -df.imag(), df.imag(), df.real();
    return j;
}

Hess2 complex_hessian(const cplx& d2f)
{
    Hess2 h;
    h[0] << d2f.real(), -d2f.imag(), -d2f.imag(), -d2f.real();
    h[1] << d2f.imag(), d2f.real(), d2f.real(), -d2f.imag();
    return h;
}

Hess2 rotate(const Mat2& r, const Hess2& h)
{
    return {r(0, 0) * h[0] + r(0, 1) * h[1], r(1, 0) * h[0] + r(1, 1) * h[1]};
}

} // namespace

Vec2 square_to_wedge(const Vec2& eta, int valence)
{
    const cplx f = power(eta, valence, false).f;
    return {f.real(), f.imag()};
}

Vec2 wedge_to_square(const Vec2& zeta, int valence)
{
    const double alpha = exponent(valence);
    const cplx w(zeta[0], zeta[1]);
    const double r = std::abs(w);
    if (r == 0.0) return Vec2::Zero();
    const double arg = std::atan2(zeta[1], zeta[0]);
    const double wedge = 2.0 * std::numbers::pi / valence;
    if (arg < -kTol || arg > wedge + kTol) {
        std::ostringstream os;
        os << "point outside wedge: angle " << arg << ", radius " << r;
        throw ChartError(os.str());
    }
    const cplx z = valence == 4 ? w : std::polar(std::pow(r, 1.0 / alpha), std::clamp(arg, 0.0, wedge) / alpha);
    const Vec2 eta(z.real(), z.imag());
    if (eta.minCoeff() < -kTol || eta.maxCoeff() > 1.0 + kTol) {
        std::ostringstream os;
        os << "point outside wedge: angle " << arg << ", radius " << r;
        throw ChartError(os.str());
    }
    return eta;
}

Vec2 chart_map(const Vec2& eta, const ChartMap& chart)
{
    return rotation(chart) * square_to_wedge(eta, chart.valence);
}

Vec2 chart_inverse(const Vec2& xi, const ChartMap& chart)
{
    return wedge_to_square(rotation(chart).transpose() * xi, chart.valence);
}

Mat2 chart_jacobian(const Vec2& eta, const ChartMap& chart)
{
    return rotation(chart) * complex_jacobian(power(eta, chart.valence, true).df);
}

Hess2 chart_hessian(const Vec2& eta, const ChartMap& chart)
{
    return rotate(rotation(chart), complex_hessian(power(eta, chart.valence, true).d2f));
}

Vec2 corner_local(const Vec2& eta, int corner)
{
    switch (corner & 3) {
    case 0: return eta;
    case 1: return {eta[1], 1.0 - eta[0]};
    case 2: return {1.0 - eta[0], 1.0 - eta[1]};
    default: return {1.0 - eta[1], eta[0]};
    }
}

Vec2 corner_local_inverse(const Vec2& lambda, int corner)
{
    switch (corner & 3) {
    case 0: return lambda;
    case 1: return {1.0 - lambda[1], lambda[0]};
    case 2: return {1.0 - lambda[0], 1.0 - lambda[1]};
    default: return {lambda[1], 1.0 - lambda[0]};
    }
}

Mat2 corner_local_jacobian(int corner)
{
    Mat2 m;
    switch (corner & 3) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, -1, 0; break;
    case 2: m << -1, 0, 0, -1; break;
    default: m << 0, -1, 1, 0; break;
    }
    return m;
}

Vec2 element_to_block(const Vec2& eta, const ElementChart& ec)
{
    return Vec2(ec.oi, ec.oj) + corner_local(eta, ec.corner);
}

Vec2 element_to_chart(const Vec2& eta, const ElementChart& ec)
{
    return chart_map(element_to_block(eta, ec) / ec.scale, ec.map);
}

Vec2 chart_to_element(const Vec2& xi, const ElementChart& ec)
{
    const Vec2 lambda = chart_inverse(xi, ec.map) * ec.scale - Vec2(ec.oi, ec.oj);
    if (lambda.minCoeff() < -kTol || lambda.maxCoeff() > 1.0 + kTol) {
        throw ChartError("point does not lie over the shared element");
    }
    return corner_local_inverse(lambda, ec.corner);
}

ChartDerivatives element_chart_derivatives(const Vec2& eta, const ElementChart& ec)
{
    const double s = 1.0 / ec.scale;
    const Vec2 u = element_to_block(eta, ec) * s;
    const Mat2 r = rotation(ec.map);
    const Power p = power(u, ec.map.valence, true);
    const Mat2 l = corner_local_jacobian(ec.corner) * s; // d u / d eta

    ChartDerivatives d;
    d.xi = r * Vec2(p.f.real(), p.f.imag());
    d.jacobian = r * complex_jacobian(p.df) * l;
    const Hess2 h = rotate(r, complex_hessian(p.d2f));
    d.hessian = {l.transpose() * h[0] * l, l.transpose() * h[1] * l};
    return d;
}

Vec2 transition_apply(const Vec2& xi_i, const ElementChart& from, const ElementChart& to)
{
    return element_to_chart(chart_to_element(xi_i, from), to);
}

} // namespace miga
