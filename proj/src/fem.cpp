#include "miga/fem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

namespace miga {

DofMap make_dof_map(const ManifoldBasis& basis, int components)
{
    const ControlMesh& mesh = basis.mesh();
    std::vector<char> used(mesh.num_vertices(), 0);
    for (int e = 0; e < mesh.num_quads(); ++e) {
        if (mesh.is_ghost_element(e)) continue;
        for (int v : basis.element_vertices(e)) used[v] = 1;
    }
    DofMap d;
    d.components = components;
    d.node_of_vertex.assign(mesh.num_vertices(), -1);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (!used[v]) continue;
        d.node_of_vertex[v] = d.num_nodes++;
        d.vertex_of_node.push_back(v);
    }
    return d;
}

SparseAssembler::SparseAssembler(int n, const std::vector<std::vector<int>>& element_dofs)
    : n_(n), rhs_(Eigen::VectorXd::Zero(n))
{
    std::vector<std::vector<int>> cols(n);
    std::vector<std::size_t> compacted(n, 0);
    for (const std::vector<int>& dofs : element_dofs) {
        for (int j : dofs) {
            std::vector<int>& c = cols[j];
            c.insert(c.end(), dofs.begin(), dofs.end());
            if (c.size() > 4 * compacted[j] + 256) {
                std::sort(c.begin(), c.end());
                c.erase(std::unique(c.begin(), c.end()), c.end());
                compacted[j] = c.size();
            }
        }
    }
    outer_.assign(n + 1, 0);
    for (int j = 0; j < n; ++j) {
        std::vector<int>& c = cols[j];
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
        outer_[j + 1] = outer_[j] + static_cast<int>(c.size());
    }
    inner_.reserve(outer_[n]);
    for (int j = 0; j < n; ++j) {
        inner_.insert(inner_.end(), cols[j].begin(), cols[j].end());
        std::vector<int>().swap(cols[j]);
    }
    values_.assign(inner_.size(), 0.0);
}

void SparseAssembler::add(const LocalSystem& local)
{
    const auto& dofs = local.dofs;
    const auto m = static_cast<Eigen::Index>(dofs.size());
    if (!std::is_sorted(dofs.begin(), dofs.end())) throw std::logic_error("element dofs must be sorted");
    for (Eigen::Index b = 0; b < m; ++b) {
        const int col = dofs[b];
        int p = outer_[col];
        const int end = outer_[col + 1];
        for (Eigen::Index a = 0; a < m; ++a) {
            while (p < end && inner_[p] < dofs[a]) ++p;
            if (p == end || inner_[p] != dofs[a]) throw std::logic_error("entry outside the sparsity pattern");
            values_[p] += local.matrix(a, b);
        }
    }
    if (local.rhs.size() == m) {
        for (Eigen::Index a = 0; a < m; ++a) rhs_[dofs[a]] += local.rhs[a];
    }
}

Eigen::SparseMatrix<double> SparseAssembler::matrix() const
{
    return Eigen::Map<const Eigen::SparseMatrix<double>>(n_, n_, static_cast<Eigen::Index>(values_.size()),
                                                           outer_.data(), inner_.data(), values_.data());
}

void assemble(SparseAssembler& assembler, const std::vector<int>& elements, const ElementKernel& kernel, Execution exec)
{
    constexpr int chunk = 256;
    std::vector<LocalSystem> buffer(chunk);
    const int n = static_cast<int>(elements.size());
    for (int start = 0; start < n; start += chunk) {
        const int count = std::min(chunk, n - start);
        if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
            for (int k = 0; k < count; ++k) kernel(elements[start + k], buffer[k]);
        } else {
            for (int k = 0; k < count; ++k) kernel(elements[start + k], buffer[k]);
        }
        for (int k = 0; k < count; ++k) assembler.add(buffer[k]);
    }
}

std::vector<int> domain_elements(const ControlMesh& mesh)
{
    std::vector<int> out;
    for (int e = 0; e < mesh.num_quads(); ++e) {
        if (!mesh.is_ghost_element(e)) out.push_back(e);
    }
    return out;
}

Vec3 geometry_point(const ControlMesh& mesh, const ElementBasis& eb, int q)
{
    Vec3 x = Vec3::Zero();
    for (int i = 0; i < eb.num_vertices(); ++i) x += eb.value(q, i) * mesh.position(eb.vertices[i]);
    return x;
}

std::array<Vec3, 2> geometry_tangents(const ControlMesh& mesh, const ElementBasis& eb, int q)
{
    std::array<Vec3, 2> a = {Vec3::Zero(), Vec3::Zero()};
    for (int i = 0; i < eb.num_vertices(); ++i) {
        const Vec3& x = mesh.position(eb.vertices[i]);
        a[0] += eb.grad[0](q, i) * x;
        a[1] += eb.grad[1](q, i) * x;
    }
    return a;
}

namespace {

std::vector<int> element_dofs(const DofMap& dofs, const std::vector<int>& vertices)
{
    std::vector<int> out;
    out.reserve(vertices.size() * dofs.components);
    for (int v : vertices) {
        for (int c = 0; c < dofs.components; ++c) out.push_back(dofs.dof(v, c));
    }
    return out;
}

std::vector<std::vector<int>> all_element_dofs(const ManifoldBasis& basis, const DofMap& dofs,
                                               const std::vector<int>& elements)
{
    std::vector<std::vector<int>> out;
    out.reserve(elements.size());
    for (int e : elements) out.push_back(element_dofs(dofs, basis.element_vertices(e)));
    return out;
}

// Planar Jacobian d x / d eta at a tabulated point.
Mat2 planar_jacobian(const ControlMesh& mesh, const ElementBasis& eb, int q)
{
    const auto a = geometry_tangents(mesh, eb, q);
    Mat2 j;
    j << a[0][0], a[1][0], a[0][1], a[1][1];
    return j;
}

void check_jacobian(double det, int element, int q)
{
    if (!(det > 1e-14)) {
        std::ostringstream os;
        os << "singular geometry Jacobian in element " << element << " at point " << q << " (det " << det << ")";
        throw std::runtime_error(os.str());
    }
}

} // namespace

SparseSystem assemble_poisson(const ManifoldBasis& basis, const QuadRule& rule, const ScalarField& source, Execution exec)
{
    const ControlMesh& mesh = basis.mesh();
    SparseSystem sys;
    sys.dofs = make_dof_map(basis, 1);
    const std::vector<int> elements = domain_elements(mesh);
    SparseAssembler asmb(sys.dofs.num_dofs(), all_element_dofs(basis, sys.dofs, elements));

    const ElementKernel kernel = [&](int e, LocalSystem& out) {
        const ElementBasis eb = tabulate_element(basis, e, rule, 1);
        const auto nv = static_cast<Eigen::Index>(eb.num_vertices());
        out.dofs = element_dofs(sys.dofs, eb.vertices);
        out.matrix.setZero(nv, nv);
        out.rhs.setZero(nv);
        Eigen::Matrix<double, 2, Eigen::Dynamic> g(2, nv);
        for (int q = 0; q < rule.size(); ++q) {
            const Mat2 j = planar_jacobian(mesh, eb, q);
            const double det = j.determinant();
            check_jacobian(det, e, q);
            g.row(0) = eb.grad[0].row(q);
            g.row(1) = eb.grad[1].row(q);
            const Eigen::Matrix<double, 2, Eigen::Dynamic> b = j.inverse().transpose() * g;
            const double dw = rule.weights[q] * det;
            out.matrix.noalias() += dw * b.transpose() * b;
            const Vec3 x = geometry_point(mesh, eb, q);
            out.rhs.noalias() += (dw * source(x.head<2>())) * eb.value.row(q).transpose();
        }
    };
    assemble(asmb, elements, kernel, exec);
    sys.matrix = asmb.matrix();
    sys.rhs = asmb.rhs();
    return sys;
}

std::vector<BoundarySample> boundary_samples(const ControlMesh& mesh, int points_per_edge)
{
    static const std::array<Vec2, 4> corners = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    const Rule1D g = gauss_legendre(points_per_edge);
    std::vector<BoundarySample> out;
    for (int h : mesh.domain_boundary_halfedges()) {
        const int k = ControlMesh::corner(h);
        const Vec2 a = corners[k];
        const Vec2 d = corners[(k + 1) % 4] - a;
        for (int i = 0; i < points_per_edge; ++i) {
            out.push_back({ControlMesh::face(h), a + g.points[i] * d, d, g.weights[i]});
        }
    }
    return out;
}

void apply_penalty_dirichlet(SparseSystem& system, const ManifoldBasis& basis, double beta, int points_per_edge,
                             const std::vector<ScalarField>& values, Execution exec)
{
    if (!(beta > 0.0)) throw std::invalid_argument("penalty parameter must be positive");
    const ControlMesh& mesh = basis.mesh();
    const DofMap& dofs = system.dofs;
    const int nc = dofs.components;

    std::map<int, std::vector<BoundarySample>> by_element;
    for (const BoundarySample& s : boundary_samples(mesh, points_per_edge)) by_element[s.element].push_back(s);
    std::vector<int> elements;
    for (const auto& [e, s] : by_element) elements.push_back(e);

    SparseAssembler asmb(dofs.num_dofs(), all_element_dofs(basis, dofs, elements));
    const ElementKernel kernel = [&](int e, LocalSystem& out) {
        const std::vector<BoundarySample>& samples = by_element.at(e);
        std::vector<Vec2> pts;
        for (const BoundarySample& s : samples) pts.push_back(s.eta);
        const ElementBasis eb = evaluate_element(basis, e, pts, 1);
        const auto nv = static_cast<Eigen::Index>(eb.num_vertices());
        out.dofs = element_dofs(dofs, eb.vertices);
        out.matrix.setZero(nv * nc, nv * nc);
        out.rhs.setZero(nv * nc);
        for (int q = 0; q < eb.num_points(); ++q) {
            const auto a = geometry_tangents(mesh, eb, q);
            const double ds = (a[0] * samples[q].direction[0] + a[1] * samples[q].direction[1]).norm() * samples[q].weight;
            const Eigen::RowVectorXd n = eb.value.row(q);
            const Eigen::MatrixXd nn = (beta * ds) * n.transpose() * n;
            const Vec3 x = geometry_point(mesh, eb, q);
            for (int c = 0; c < nc; ++c) {
                for (Eigen::Index i = 0; i < nv; ++i) {
                    for (Eigen::Index j = 0; j < nv; ++j) out.matrix(i * nc + c, j * nc + c) += nn(i, j);
                }
                if (!values.empty() && values[c]) {
                    const double g = values[c](x.head<2>());
                    for (Eigen::Index i = 0; i < nv; ++i) out.rhs[i * nc + c] += beta * ds * g * n[i];
                }
            }
        }
    };
    assemble(asmb, elements, kernel, exec);
    system.matrix += asmb.matrix();
    system.rhs += asmb.rhs();
}

Eigen::VectorXd solve(const SparseSystem& system, double tolerance)
{
    const Eigen::SparseMatrix<double>& a = system.matrix;
    const Eigen::VectorXd& b = system.rhs;
    const double bn = b.norm();
    if (bn == 0.0) return Eigen::VectorXd::Zero(b.size());
    // normwise backward error, so scaling between unknown types does not inflate it
    const double an = a.norm();
    auto residual = [&](const Eigen::VectorXd& x) {
        return (b - a.selfadjointView<Eigen::Lower>() * x).norm() / (an * x.norm() + bn);
    };

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt(a);
    if (ldlt.info() == Eigen::Success) {
        Eigen::VectorXd x = ldlt.solve(b);
        for (int it = 0; it < 3 && residual(x) > tolerance; ++it) x += ldlt.solve(b - a.selfadjointView<Eigen::Lower>() * x);
        const double r = residual(x);
        if (r <= tolerance && x.allFinite()) return x;
    }
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg(a);
    cg.setTolerance(tolerance);
    cg.setMaxIterations(20 * static_cast<int>(b.size()));
    Eigen::VectorXd x = cg.solve(b);
    const double r = residual(x);
    if (!(r <= tolerance)) {
        std::ostringstream os;
        os << "linear solve did not converge: backward error " << r;
        throw std::runtime_error(os.str());
    }
    return x;
}

std::vector<double> vertex_coefficients(const DofMap& dofs, const Eigen::VectorXd& x, int component)
{
    std::vector<double> out(dofs.node_of_vertex.size(), 0.0);
    for (int n = 0; n < dofs.num_nodes; ++n) out[dofs.vertex_of_node[n]] = x[dofs.components * n + component];
    return out;
}

ErrorNorms error_norms(const ManifoldBasis& basis, const QuadRule& rule, const std::vector<double>& coeffs,
                       const ScalarField& exact, const GradientField& exact_grad, Execution exec)
{
    const ControlMesh& mesh = basis.mesh();
    const std::vector<int> elements = domain_elements(mesh);
    const int n = static_cast<int>(elements.size());
    std::vector<std::array<double, 2>> parts(n);
    auto kernel = [&](int k) {
        const int e = elements[k];
        const ElementBasis eb = tabulate_element(basis, e, rule, 1);
        double l2 = 0.0, h1 = 0.0;
        for (int q = 0; q < rule.size(); ++q) {
            const Mat2 j = planar_jacobian(mesh, eb, q);
            const double det = j.determinant();
            check_jacobian(det, e, q);
            const FieldValue f = evaluate_field(coeffs, eb, q);
            const Vec2 x = geometry_point(mesh, eb, q).head<2>();
            const Vec2 gx = j.inverse().transpose() * f.grad;
            const double dw = rule.weights[q] * det;
            l2 += dw * std::pow(f.value - exact(x), 2);
            h1 += dw * (gx - exact_grad(x)).squaredNorm();
        }
        parts[k] = {l2, h1};
    };
    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for (int k = 0; k < n; ++k) kernel(k);
    } else {
        for (int k = 0; k < n; ++k) kernel(k);
    }
    ErrorNorms out;
    for (const auto& p : parts) {
        out.l2 += p[0];
        out.h1_semi += p[1];
    }
    out.l2 = std::sqrt(out.l2);
    out.h1_semi = std::sqrt(out.h1_semi);
    return out;
}

double evaluate_at_vertex(const ManifoldBasis& basis, const std::vector<double>& coeffs, int vertex)
{
    double s = 0.0;
    for (const auto& [v, n] : evaluate_at_vertex(basis, vertex)) s += n * coeffs.at(v);
    return s;
}

double max_element_diameter(const ControlMesh& mesh)
{
    double h = 0.0;
    for (int e : domain_elements(mesh)) {
        const Quad& q = mesh.quad(e);
        h = std::max({h, (mesh.position(q[0]) - mesh.position(q[2])).norm(), (mesh.position(q[1]) - mesh.position(q[3])).norm()});
    }
    return h;
}

} // namespace miga
