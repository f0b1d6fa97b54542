#pragma once

#include <vector>

#include <Eigen/Core>

namespace miga {

/// Non-zero basis function of a curve segment with derivatives in the segment parameter.
struct CurveBasisValue {
    int vertex = -1;
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

///
/// Manifold basis on a control polygon. Every vertex with two neighbours owns a one-ring
/// patch with chart coordinate xi in [-1, 1] (the vertex at 0), a quadratic Lagrange
/// approximant and a blending profile of the given degree. Neighbouring charts differ by a
/// unit shift. Segment s joins vertices s and s + 1 (mod n for closed polygons).
///
class Curve1D {
public:
    Curve1D(int num_vertices, bool closed, int blend_degree = 3);

    [[nodiscard]] int num_segments() const { return closed_ ? n_ : n_ - 1; }
    [[nodiscard]] std::vector<CurveBasisValue> basis(int segment, double t) const;
    [[nodiscard]] Eigen::Vector3d point(const std::vector<Eigen::Vector3d>& control, int segment, double t) const;

private:
    [[nodiscard]] bool owns_patch(int v) const { return closed_ || (v > 0 && v < n_ - 1); }
    [[nodiscard]] int wrap(int v) const { return (v % n_ + n_) % n_; }

    int n_;
    bool closed_;
    int degree_;
};

} // namespace miga
