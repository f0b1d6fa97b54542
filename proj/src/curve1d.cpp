#include "miga/curve1d.hpp"

#include <array>
#include <cmath>
#include <map>
#include <stdexcept>

#include "miga/blending.hpp"

namespace miga {

Curve1D::Curve1D(int num_vertices, bool closed, int blend_degree)
    : n_(num_vertices), closed_(closed), degree_(blend_degree)
{
    if (n_ < 3) throw std::invalid_argument("control polygon needs at least three vertices");
}

std::vector<CurveBasisValue> Curve1D::basis(int segment, double t) const
{
    if (segment < 0 || segment >= num_segments()) throw std::out_of_range("segment index out of range");

    struct Local {
        int center;
        double xi; // chart coordinate, d xi / d t = 1
    };
    std::vector<Local> patches;
    if (owns_patch(segment)) patches.push_back({segment, t});
    if (owns_patch(wrap(segment + 1))) patches.push_back({segment + 1, t - 1.0});
    if (patches.empty()) throw std::runtime_error("segment is not covered by any patch");

    // raw weights b(|xi|) with derivatives in xi
    std::vector<Profile> raw;
    Profile sum;
    for (const Local& p : patches) {
        Profile b = blend_profile(std::abs(p.xi), degree_);
        if (p.xi < 0.0) b.d1 = -b.d1;
        raw.push_back(b);
        sum.value += b.value;
        sum.d1 += b.d1;
        sum.d2 += b.d2;
    }

    std::map<int, CurveBasisValue> acc;
    for (std::size_t k = 0; k < patches.size(); ++k) {
        const double w = raw[k].value / sum.value;
        const double w1 = (raw[k].d1 - w * sum.d1) / sum.value;
        const double w2 = (raw[k].d2 - 2.0 * w1 * sum.d1 - w * sum.d2) / sum.value;
        const double x = patches[k].xi;
        // quadratic Lagrange on nodes -1, 0, 1
        const std::array<double, 3> l = {0.5 * x * (x - 1.0), 1.0 - x * x, 0.5 * x * (x + 1.0)};
        const std::array<double, 3> l1 = {x - 0.5, -2.0 * x, x + 0.5};
        const std::array<double, 3> l2 = {1.0, -2.0, 1.0};
        for (int i = 0; i < 3; ++i) {
            const int v = wrap(patches[k].center - 1 + i);
            CurveBasisValue& out = acc[v];
            out.vertex = v;
            out.value += w * l[i];
            out.d1 += w1 * l[i] + w * l1[i];
            out.d2 += w2 * l[i] + 2.0 * w1 * l1[i] + w * l2[i];
        }
    }
    std::vector<CurveBasisValue> out;
    for (const auto& [v, b] : acc) out.push_back(b);
    return out;
}

Eigen::Vector3d Curve1D::point(const std::vector<Eigen::Vector3d>& control, int segment, double t) const
{
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    for (const CurveBasisValue& b : basis(segment, t)) x += b.value * control.at(b.vertex);
    return x;
}

} // namespace miga
