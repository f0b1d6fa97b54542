#include "miga/basis_table.hpp"

#include <algorithm>

namespace miga {

namespace {

// Raw blending weight of a cover with derivatives in eta.
BlendValue cover_weight(const Cover& c, const Vec2& eta, const BlendingSpec& spec)
{
    BlendValue w = blending_block(element_to_block(eta, c.chart), c.blend_depth, spec);
    const Mat2 r = corner_local_jacobian(c.chart.corner);
    w.grad = r.transpose() * w.grad;
    w.hess = r.transpose() * w.hess * r;
    return w;
}

bool vanishes(const BlendValue& w)
{
    return w.value == 0.0 && w.grad.isZero(0.0) && w.hess.isZero(0.0);
}

} // namespace

ElementBasis evaluate_element(const ManifoldBasis& basis, int element, const std::vector<Vec2>& points, int order)
{
    const std::vector<int>& verts = basis.element_vertices(element);
    const std::vector<Cover>& covers = basis.covers(element);
    const auto np = static_cast<Eigen::Index>(points.size());
    const auto nv = static_cast<Eigen::Index>(verts.size());

    ElementBasis eb;
    eb.element = element;
    eb.order = order;
    eb.vertices = verts;
    eb.value.setZero(np, nv);
    if (order >= 1) {
        for (auto& m : eb.grad) m.setZero(np, nv);
    }
    if (order >= 2) {
        for (auto& m : eb.hess) m.setZero(np, nv);
    }

    // column of every patch node in the element's vertex list
    std::vector<std::vector<Eigen::Index>> cols(covers.size());
    for (std::size_t c = 0; c < covers.size(); ++c) {
        for (int v : basis.patches()[covers[c].patch].vertices) {
            cols[c].push_back(std::lower_bound(verts.begin(), verts.end(), v) - verts.begin());
        }
    }

    std::vector<BlendValue> raw(covers.size());
    Eigen::MatrixXd mono;
    Eigen::MatrixXd phi;
    for (Eigen::Index q = 0; q < np; ++q) {
        const Vec2& eta = points[q];
        BlendValue sum;
        for (std::size_t c = 0; c < covers.size(); ++c) {
            raw[c] = cover_weight(covers[c], eta, basis.config().blending);
            sum.value += raw[c].value;
            sum.grad += raw[c].grad;
            sum.hess += raw[c].hess;
        }
        if (!(sum.value > 0.0)) throw std::runtime_error("all blending weights vanish on element " + std::to_string(element));
        const double inv = 1.0 / sum.value;

        for (std::size_t c = 0; c < covers.size(); ++c) {
            if (vanishes(raw[c])) continue;
            // normalised weight and its derivatives (quotient rule)
            const double w = raw[c].value * inv;
            const Vec2 gw = (raw[c].grad - w * sum.grad) * inv;
            const Mat2 hw = (raw[c].hess - gw * sum.grad.transpose() - sum.grad * gw.transpose() - w * sum.hess) * inv;

            const PatchOperator& op = *basis.patches()[covers[c].patch].op;
            const std::vector<Term>& terms = op.basis.terms();
            const auto nt = static_cast<Eigen::Index>(terms.size());
            mono.resize(nt, order >= 2 ? 6 : order >= 1 ? 3 : 1);
            if (order == 0) {
                const Vec2 xi = element_to_chart(eta, covers[c].chart);
                mono.col(0) = evaluate_monomials(terms, op.basis.radius(), xi, 0).value;
            } else {
                const ChartDerivatives cd = element_chart_derivatives(eta, covers[c].chart);
                const MonomialValues m = evaluate_monomials(terms, op.basis.radius(), cd.xi, order);
                mono.col(0) = m.value;
                mono.middleCols(1, 2) = m.grad * cd.jacobian;
                if (order >= 2) {
                    for (Eigen::Index t = 0; t < nt; ++t) {
                        Mat2 h;
                        h << m.hess(t, 0), m.hess(t, 1), m.hess(t, 1), m.hess(t, 2);
                        h = cd.jacobian.transpose() * h * cd.jacobian + m.grad(t, 0) * cd.hessian[0] +
                            m.grad(t, 1) * cd.hessian[1];
                        mono(t, 3) = h(0, 0);
                        mono(t, 4) = h(0, 1);
                        mono(t, 5) = h(1, 1);
                    }
                }
            }
            phi.noalias() = op.fit * mono;

            for (Eigen::Index i = 0; i < phi.rows(); ++i) {
                const Eigen::Index col = cols[c][i];
                const double p = phi(i, 0);
                eb.value(q, col) += w * p;
                if (order >= 1) {
                    const Vec2 gp(phi(i, 1), phi(i, 2));
                    eb.grad[0](q, col) += gw[0] * p + w * gp[0];
                    eb.grad[1](q, col) += gw[1] * p + w * gp[1];
                    if (order >= 2) {
                        eb.hess[0](q, col) += hw(0, 0) * p + 2.0 * gw[0] * gp[0] + w * phi(i, 3);
                        eb.hess[1](q, col) += hw(0, 1) * p + gw[0] * gp[1] + gp[0] * gw[1] + w * phi(i, 4);
                        eb.hess[2](q, col) += hw(1, 1) * p + 2.0 * gw[1] * gp[1] + w * phi(i, 5);
                    }
                }
            }
        }
    }
    return eb;
}

std::pair<int, Vec2> vertex_location(const ControlMesh& mesh, int vertex)
{
    static const std::array<Vec2, 4> corners = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    for (int h : mesh.fan(vertex)) {
        const int f = ControlMesh::face(h);
        if (!mesh.is_ghost_element(f)) return {f, corners[ControlMesh::corner(h)]};
    }
    throw MeshError("vertex " + std::to_string(vertex) + " touches no domain element");
}

std::vector<std::pair<int, double>> evaluate_at_vertex(const ManifoldBasis& basis, int vertex)
{
    const auto [element, eta] = vertex_location(basis.mesh(), vertex);
    const ElementBasis eb = evaluate_element(basis, element, {eta}, 0);
    std::vector<std::pair<int, double>> out;
    for (int i = 0; i < eb.num_vertices(); ++i) {
        if (eb.value(0, i) != 0.0) out.emplace_back(eb.vertices[i], eb.value(0, i));
    }
    return out;
}

ElementBasis tabulate_element(const ManifoldBasis& basis, int element, const QuadRule& rule, int order)
{
    return evaluate_element(basis, element, rule.points, order);
}

BasisTable tabulate_mesh(const ManifoldBasis& basis, const QuadRule& rule, int order, Execution exec)
{
    BasisTable table;
    table.rule = rule;
    table.order = order;
    const int ne = basis.mesh().num_quads();
    table.elements.resize(ne);
    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
        for (int e = 0; e < ne; ++e) {
            if (!basis.mesh().is_ghost_element(e)) table.elements[e] = tabulate_element(basis, e, rule, order);
        }
    } else {
        for (int e = 0; e < ne; ++e) {
            if (!basis.mesh().is_ghost_element(e)) table.elements[e] = tabulate_element(basis, e, rule, order);
        }
    }
    return table;
}

FieldValue evaluate_field(const std::vector<double>& coeffs, const ElementBasis& eb, int q)
{
    FieldValue f;
    for (int i = 0; i < eb.num_vertices(); ++i) {
        const double c = coeffs.at(eb.vertices[i]);
        f.value += eb.value(q, i) * c;
        if (eb.order >= 1) {
            f.grad[0] += eb.grad[0](q, i) * c;
            f.grad[1] += eb.grad[1](q, i) * c;
        }
        if (eb.order >= 2) {
            f.hess(0, 0) += eb.hess[0](q, i) * c;
            f.hess(0, 1) += eb.hess[1](q, i) * c;
            f.hess(1, 1) += eb.hess[2](q, i) * c;
        }
    }
    f.hess(1, 0) = f.hess(0, 1);
    return f;
}

} // namespace miga
