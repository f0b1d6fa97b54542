#include "miga/polynomial.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace miga {

std::string to_string(const PolySpec& spec)
{
    return std::string(spec.kind == PolyKind::tensor_lagrange ? "tensor_lagrange" : "complete_monomial") +
           "(degree " + std::to_string(spec.degree) + ")";
}

MonomialValues evaluate_monomials(const std::vector<Term>& terms, double radius, const Vec2& xi, int order)
{
    const double inv = 1.0 / radius;
    const double s = xi[0] * inv;
    const double u = xi[1] * inv;
    // powers and derivatives of powers, up to degree 3 in practice
    std::array<double, 8> ps{}, pu{};
    ps[0] = pu[0] = 1.0;
    for (int k = 1; k < 8; ++k) {
        ps[k] = ps[k - 1] * s;
        pu[k] = pu[k - 1] * u;
    }
    const auto n = static_cast<Eigen::Index>(terms.size());
    MonomialValues m;
    m.value.resize(n);
    if (order >= 1) m.grad.resize(n, 2);
    if (order >= 2) m.hess.resize(n, 3);
    for (Eigen::Index t = 0; t < n; ++t) {
        const int a = terms[t][0];
        const int b = terms[t][1];
        m.value[t] = ps[a] * pu[b];
        if (order >= 1) {
            m.grad(t, 0) = a > 0 ? a * ps[a - 1] * pu[b] * inv : 0.0;
            m.grad(t, 1) = b > 0 ? b * ps[a] * pu[b - 1] * inv : 0.0;
        }
        if (order >= 2) {
            const double i2 = inv * inv;
            m.hess(t, 0) = a > 1 ? a * (a - 1) * ps[a - 2] * pu[b] * i2 : 0.0;
            m.hess(t, 1) = a > 0 && b > 0 ? a * b * ps[a - 1] * pu[b - 1] * i2 : 0.0;
            m.hess(t, 2) = b > 1 ? b * (b - 1) * ps[a] * pu[b - 2] * i2 : 0.0;
        }
    }
    return m;
}

PolyBasis::PolyBasis(PolyKind kind, int degree, double radius)
    : kind_(kind), degree_(degree), radius_(radius)
{
    if (degree < 1 || degree > 3) throw std::invalid_argument("polynomial degree must be 1, 2 or 3");
    if (!(radius > 0.0)) throw std::invalid_argument("polynomial radius must be positive");
    if (kind == PolyKind::complete_monomial) {
        for (int d = 0; d <= degree; ++d) {
            for (int a = d; a >= 0; --a) terms_.push_back({a, d - a});
        }
        coeffs_ = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(terms_.size()),
                                            static_cast<Eigen::Index>(terms_.size()));
        return;
    }

    // 1D Lagrange polynomials on equispaced nodes of [-1, 1] in the scaled variable
    const int n1 = degree + 1;
    Eigen::MatrixXd vander(n1, n1);
    std::vector<double> nodes1(n1);
    for (int i = 0; i < n1; ++i) {
        nodes1[i] = -1.0 + 2.0 * i / degree;
        for (int p = 0; p < n1; ++p) vander(i, p) = std::pow(nodes1[i], p);
    }
    const Eigen::MatrixXd c1 = vander.inverse(); // column k: coefficients of L_k

    for (int a = 0; a <= degree; ++a) {
        for (int b = 0; b <= degree; ++b) terms_.push_back({a, b});
    }
    const auto nt = static_cast<Eigen::Index>(terms_.size());
    coeffs_.resize(n1 * n1, nt);
    for (int j = 0; j < n1; ++j) {
        for (int i = 0; i < n1; ++i) {
            const int row = j * n1 + i;
            for (Eigen::Index t = 0; t < nt; ++t) coeffs_(row, t) = c1(terms_[t][0], i) * c1(terms_[t][1], j);
            nodes_.emplace_back(radius * nodes1[i], radius * nodes1[j]);
        }
    }
}

PolyBasis PolyBasis::for_patch(const PolySpec& spec, int n_nodes, double radius)
{
    if (spec.kind == PolyKind::tensor_lagrange && (spec.degree + 1) * (spec.degree + 1) <= n_nodes) {
        return {PolyKind::tensor_lagrange, spec.degree, radius};
    }
    return {PolyKind::complete_monomial, spec.degree, radius};
}

Eigen::VectorXd PolyBasis::values(const Vec2& xi) const
{
    return coeffs_ * evaluate_monomials(terms_, radius_, xi, 0).value;
}

void PolyBasis::align_nodes(const std::vector<Vec2>& points)
{
    if (kind_ != PolyKind::tensor_lagrange || points.size() != nodes_.size()) return;
    std::vector<int> order;
    for (const Vec2& p : points) {
        int hit = -1;
        for (int k = 0; k < static_cast<int>(nodes_.size()); ++k) {
            if ((nodes_[k] - p).norm() < 1e-12 * radius_) hit = k;
        }
        if (hit < 0) return;
        order.push_back(hit);
    }
    Eigen::MatrixXd c(coeffs_.rows(), coeffs_.cols());
    std::vector<Vec2> n;
    for (int k = 0; k < static_cast<int>(order.size()); ++k) {
        c.row(k) = coeffs_.row(order[k]);
        n.push_back(nodes_[order[k]]);
    }
    coeffs_ = std::move(c);
    nodes_ = std::move(n);
}

Eigen::MatrixXd projection_matrix(const PolyBasis& basis, const std::vector<Vec2>& nodes, int valence)
{
    const auto n = static_cast<Eigen::Index>(nodes.size());
    const auto nt = static_cast<Eigen::Index>(basis.terms().size());
    auto fail = [&](const std::string& why) {
        std::ostringstream os;
        os << "projection for valence " << valence << " with "
           << to_string({basis.kind(), basis.degree()}) << " is " << why;
        throw std::runtime_error(os.str());
    };
    if (basis.dim() > n) fail("underdetermined");
    Eigen::MatrixXd m(nt, n);
    for (Eigen::Index i = 0; i < n; ++i) m.col(i) = evaluate_monomials(basis.terms(), basis.radius(), nodes[i], 0).value;
    const Eigen::MatrixXd p = basis.coefficients() * m;
    const Eigen::MatrixXd normal = p * p.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12) fail("singular (condition number above 1e12)");
    return normal.ldlt().solve(p);
}

Eigen::MatrixXd min_norm_projection_matrix(const PolyBasis& basis, const std::vector<Vec2>& nodes)
{
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(basis.terms().size()), n);
    for (Eigen::Index i = 0; i < n; ++i) m.col(i) = evaluate_monomials(basis.terms(), basis.radius(), nodes[i], 0).value;
    const Eigen::MatrixXd p = basis.coefficients() * m;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(p.transpose());
    cod.setThreshold(1e-10);
    return cod.pseudoInverse();
}

} // namespace miga
