#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "miga/charts.hpp"

namespace miga {

enum class PolyKind { tensor_lagrange, complete_monomial };

struct PolySpec {
    PolyKind kind = PolyKind::tensor_lagrange;
    int degree = 2;
};

std::string to_string(const PolySpec& spec);

/// Exponent pair (a, b) of the scaled monomial (xi1 / r)^a (xi2 / r)^b.
using Term = std::array<int, 2>;

/// Values and derivatives of a list of scaled monomials at one point. Derivatives are with
/// respect to the unscaled chart coordinates; hessian columns are (11, 12, 22).
struct MonomialValues {
    Eigen::VectorXd value;
    Eigen::MatrixX2d grad;
    Eigen::MatrixX3d hess;
};
MonomialValues evaluate_monomials(const std::vector<Term>& terms, double radius, const Vec2& xi, int order);

///
/// Local polynomial basis on a patch chart. Each basis function is stored as coefficients
/// over scaled monomials, so evaluation only needs the monomial values.
///
/// Tensor Lagrange bases use (degree + 1)^2 equispaced nodes on [-r, r]^2; complete bases are
/// the scaled monomials of total degree <= degree with the constant first.
///
class PolyBasis {
public:
    PolyBasis(PolyKind kind, int degree, double radius);

    /// Tensor Lagrange when its dimension fits the node count, complete monomials otherwise.
    static PolyBasis for_patch(const PolySpec& spec, int n_nodes, double radius);

    [[nodiscard]] PolyKind kind() const { return kind_; }
    [[nodiscard]] int degree() const { return degree_; }
    [[nodiscard]] double radius() const { return radius_; }
    [[nodiscard]] int dim() const { return static_cast<int>(coeffs_.rows()); }
    [[nodiscard]] const std::vector<Term>& terms() const { return terms_; }
    /// dim x terms
    [[nodiscard]] const Eigen::MatrixXd& coefficients() const { return coeffs_; }
    /// Lagrange nodes in basis order (tensor kind only).
    [[nodiscard]] const std::vector<Vec2>& nodes() const { return nodes_; }

    [[nodiscard]] Eigen::VectorXd values(const Vec2& xi) const;

    /// Reorders Lagrange basis functions to follow `points` when the two node sets coincide.
    void align_nodes(const std::vector<Vec2>& points);

private:
    PolyKind kind_;
    int degree_;
    double radius_;
    std::vector<Term> terms_;
    Eigen::MatrixXd coeffs_;
    std::vector<Vec2> nodes_;
};

/// A = (P P^T)^-1 P with P = [p(xi_1) ... p(xi_n)]. Throws when P P^T is singular or its
/// condition number exceeds 1e12; `valence` is only used in the message.
Eigen::MatrixXd projection_matrix(const PolyBasis& basis, const std::vector<Vec2>& nodes, int valence);

/// Minimum-norm least-squares projection P^+ for node sets on which some polynomial of the
/// span vanishes (cubics on a valence-3 two-ring, whose nodes lie on six rays).
Eigen::MatrixXd min_norm_projection_matrix(const PolyBasis& basis, const std::vector<Vec2>& nodes);

} // namespace miga
