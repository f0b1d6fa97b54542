#include "miga/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace miga {

Rule1D gauss_legendre(int n)
{
    if (n < 1) throw std::invalid_argument("Gauss rule needs at least one point");
    Rule1D r;
    r.points.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        // Newton iteration on P_n from the Chebyshev-like initial guess
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // ascending order on (0, 1)
        r.points[n - 1 - i] = 0.5 * (1.0 + x);
        r.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

QuadRule gauss_rule(int n)
{
    const Rule1D g = gauss_legendre(n);
    QuadRule q;
    q.n = n;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            q.points.emplace_back(g.points[i], g.points[j]);
            q.weights.push_back(g.weights[i] * g.weights[j]);
        }
    }
    return q;
}

} // namespace miga
