#include "miga/shell.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/LU>

namespace miga {

void ShellMaterial::validate() const
{
    if (!(youngs_modulus > 0.0)) throw std::invalid_argument("Young's modulus must be positive");
    if (!(thickness > 0.0)) throw std::invalid_argument("shell thickness must be positive");
    if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5)) throw std::invalid_argument("Poisson ratio must lie in (-1, 0.5)");
}

double ShellMaterial::membrane_rigidity() const
{
    return youngs_modulus * thickness / (1.0 - poisson_ratio * poisson_ratio);
}

double ShellMaterial::bending_rigidity() const
{
    return youngs_modulus * std::pow(thickness, 3) / (12.0 * (1.0 - poisson_ratio * poisson_ratio));
}

SurfaceState surface_state(const ControlMesh& mesh, const ElementBasis& eb, int q)
{
    if (eb.order < 2) throw std::invalid_argument("surface state needs second derivatives");
    SurfaceState s;
    s.x.setZero();
    s.tangents = {Vec3::Zero(), Vec3::Zero()};
    s.second = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    for (int i = 0; i < eb.num_vertices(); ++i) {
        const Vec3& p = mesh.position(eb.vertices[i]);
        s.x += eb.value(q, i) * p;
        s.tangents[0] += eb.grad[0](q, i) * p;
        s.tangents[1] += eb.grad[1](q, i) * p;
        for (int k = 0; k < 3; ++k) s.second[k] += eb.hess[k](q, i) * p;
    }
    const Vec3 c = s.tangents[0].cross(s.tangents[1]);
    s.area_element = c.norm();
    s.metric << s.tangents[0].squaredNorm(), s.tangents[0].dot(s.tangents[1]), s.tangents[0].dot(s.tangents[1]),
        s.tangents[1].squaredNorm();
    if (!(s.metric.determinant() > 1e-14)) {
        std::ostringstream os;
        os << "degenerate surface metric in element " << eb.element << " at point " << q;
        throw std::runtime_error(os.str());
    }
    s.normal = c / s.area_element;
    s.curvature << s.second[0].dot(s.normal), s.second[1].dot(s.normal), s.second[1].dot(s.normal),
        s.second[2].dot(s.normal);
    return s;
}

Eigen::Matrix3d contravariant_material(const Mat2& metric, double nu)
{
    const Mat2 a = metric.inverse();
    static const int idx[3][2] = {{0, 0}, {1, 1}, {0, 1}};
    Eigen::Matrix3d h;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const int al = idx[i][0], be = idx[i][1], ga = idx[j][0], de = idx[j][1];
            h(i, j) = nu * a(al, be) * a(ga, de) + 0.5 * (1.0 - nu) * (a(al, ga) * a(be, de) + a(al, de) * a(be, ga));
        }
    }
    return h;
}

Vec3 surface_point_at_vertex(const ManifoldBasis& basis, int vertex)
{
    Vec3 x = Vec3::Zero();
    for (const auto& [v, n] : evaluate_at_vertex(basis, vertex)) x += n * basis.mesh().position(v);
    return x;
}

SparseSystem assemble_kirchhoff_love(const ManifoldBasis& basis, const QuadRule& rule, const ShellMaterial& material,
                                     const ShellLoad& load, Execution exec)
{
    material.validate();
    if (basis.config().blending.degree < 3) {
        throw std::invalid_argument("Kirchhoff-Love shells need cubic blending for square-integrable curvature");
    }
    const ControlMesh& mesh = basis.mesh();
    SparseSystem sys;
    sys.dofs = make_dof_map(basis, 3);
    const std::vector<int> elements = domain_elements(mesh);
    std::vector<std::vector<int>> element_dofs;
    for (int e : elements) {
        std::vector<int> d;
        for (int v : basis.element_vertices(e)) {
            for (int c = 0; c < 3; ++c) d.push_back(sys.dofs.dof(v, c));
        }
        element_dofs.push_back(std::move(d));
    }
    SparseAssembler asmb(sys.dofs.num_dofs(), element_dofs);
    const double cm = material.membrane_rigidity();
    const double cb = material.bending_rigidity();
    const double nu = material.poisson_ratio;

    const ElementKernel kernel = [&](int e, LocalSystem& out) {
        const ElementBasis eb = tabulate_element(basis, e, rule, 2);
        const auto nv = static_cast<Eigen::Index>(eb.num_vertices());
        const Eigen::Index n = 3 * nv;
        out.dofs.clear();
        for (int v : eb.vertices) {
            for (int c = 0; c < 3; ++c) out.dofs.push_back(sys.dofs.dof(v, c));
        }
        out.matrix.setZero(n, n);
        out.rhs.setZero(n);
        Eigen::MatrixXd bm(3, n), bb(3, n);
        for (int q = 0; q < rule.size(); ++q) {
            const SurfaceState s = surface_state(mesh, eb, q);
            const Vec3& a1 = s.tangents[0];
            const Vec3& a2 = s.tangents[1];
            const Vec3& a3 = s.normal;
            // in-plane parts of x_ab divided by |a1 x a2|, crossed with the tangents
            std::array<Vec3, 3> r1, r2;
            for (int k = 0; k < 3; ++k) {
                const Vec3 v = (s.second[k] - s.second[k].dot(a3) * a3) / s.area_element;
                r1[k] = a2.cross(v);
                r2[k] = v.cross(a1);
            }
            for (Eigen::Index i = 0; i < nv; ++i) {
                const double n1 = eb.grad[0](q, i), n2 = eb.grad[1](q, i);
                const double h11 = eb.hess[0](q, i), h12 = eb.hess[1](q, i), h22 = eb.hess[2](q, i);
                for (int c = 0; c < 3; ++c) {
                    const Eigen::Index col = 3 * i + c;
                    bm(0, col) = n1 * a1[c];
                    bm(1, col) = n2 * a2[c];
                    bm(2, col) = n2 * a1[c] + n1 * a2[c];
                    bb(0, col) = h11 * a3[c] + n1 * r1[0][c] + n2 * r2[0][c];
                    bb(1, col) = h22 * a3[c] + n1 * r1[2][c] + n2 * r2[2][c];
                    bb(2, col) = 2.0 * (h12 * a3[c] + n1 * r1[1][c] + n2 * r2[1][c]);
                }
            }
            const Eigen::Matrix3d h = contravariant_material(s.metric, nu);
            const double da = rule.weights[q] * s.area_element;
            out.matrix.noalias() += bm.transpose() * ((da * cm) * h) * bm;
            out.matrix.noalias() += bb.transpose() * ((da * cb) * h) * bb;
            if (load.area) {
                const Vec3 f = load.area(s.x, s.normal) * da;
                for (Eigen::Index i = 0; i < nv; ++i) {
                    for (int c = 0; c < 3; ++c) out.rhs[3 * i + c] += eb.value(q, i) * f[c];
                }
            }
        }
    };
    assemble(asmb, elements, kernel, exec);
    sys.matrix = asmb.matrix();
    sys.rhs = asmb.rhs();
    for (const PointLoad& p : load.points) {
        for (const auto& [v, n] : evaluate_at_vertex(basis, p.vertex)) {
            for (int c = 0; c < 3; ++c) sys.rhs[sys.dofs.dof(v, c)] += n * p.force[c];
        }
    }
    return sys;
}

double navier_plate_deflection(const Vec2& x, double pressure, const ShellMaterial& material, int terms)
{
    const double pi = std::numbers::pi;
    std::vector<double> sy;
    for (int j = 1; j <= terms; j += 2) sy.push_back(std::sin(j * pi * x[1]));
    double sum = 0.0;
    for (int i = 1; i <= terms; i += 2) {
        const double si = std::sin(i * pi * x[0]);
        for (int j = 1, k = 0; j <= terms; j += 2, ++k) {
            const double r = double(i) * i + double(j) * j;
            sum += si * sy[k] / (double(i) * j * r * r);
        }
    }
    return 16.0 * pressure / (std::pow(pi, 6) * material.bending_rigidity()) * sum;
}

Vec2 navier_plate_gradient(const Vec2& x, double pressure, const ShellMaterial& material, int terms)
{
    const double pi = std::numbers::pi;
    std::vector<double> sy, cy;
    for (int j = 1; j <= terms; j += 2) {
        sy.push_back(std::sin(j * pi * x[1]));
        cy.push_back(j * pi * std::cos(j * pi * x[1]));
    }
    Vec2 sum = Vec2::Zero();
    for (int i = 1; i <= terms; i += 2) {
        const double si = std::sin(i * pi * x[0]);
        const double ci = i * pi * std::cos(i * pi * x[0]);
        for (int j = 1, k = 0; j <= terms; j += 2, ++k) {
            const double r = double(i) * i + double(j) * j;
            const double d = double(i) * j * r * r;
            sum[0] += ci * sy[k] / d;
            sum[1] += si * cy[k] / d;
        }
    }
    return 16.0 * pressure / (std::pow(pi, 6) * material.bending_rigidity()) * sum;
}

void check_self_equilibrated(const ManifoldBasis& basis, const std::vector<PointLoad>& loads, double tolerance)
{
    Vec3 force = Vec3::Zero(), moment = Vec3::Zero();
    double scale = 0.0;
    std::vector<Vec3> at;
    Vec3 centre = Vec3::Zero();
    for (const PointLoad& p : loads) {
        at.push_back(surface_point_at_vertex(basis, p.vertex));
        centre += at.back();
    }
    if (loads.empty()) return;
    centre /= static_cast<double>(loads.size());
    double extent = 0.0;
    for (std::size_t k = 0; k < loads.size(); ++k) {
        force += loads[k].force;
        moment += (at[k] - centre).cross(loads[k].force);
        scale += loads[k].force.norm();
        extent = std::max(extent, (at[k] - centre).norm());
    }
    if (force.norm() > tolerance * scale || moment.norm() > tolerance * scale * std::max(extent, 1e-300)) {
        std::ostringstream os;
        os << "point loads are not self-equilibrated (net force " << force.norm() << ", net moment " << moment.norm() << ")";
        throw std::invalid_argument(os.str());
    }
}

Eigen::MatrixXd rigid_modes(const ControlMesh& mesh, const DofMap& dofs)
{
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(dofs.num_dofs(), 6);
    for (int n = 0; n < dofs.num_nodes; ++n) {
        const Vec3& x = mesh.position(dofs.vertex_of_node[n]);
        for (int c = 0; c < 3; ++c) r(3 * n + c, c) = 1.0;
        for (int k = 0; k < 3; ++k) {
            const Vec3 u = Vec3::Unit(k).cross(x);
            for (int c = 0; c < 3; ++c) r(3 * n + c, 3 + k) = u[c];
        }
    }
    return r;
}

std::vector<int> rigid_mode_constraints(const ControlMesh& mesh, const DofMap& dofs, int first_vertex)
{
    std::vector<int> cand;
    for (int n = 0; n < dofs.num_nodes; ++n) {
        if (!mesh.is_ghost_vertex(dofs.vertex_of_node[n])) cand.push_back(dofs.vertex_of_node[n]);
    }
    if (cand.size() < 3) throw std::runtime_error("too few vertices to remove rigid modes");
    const int a = first_vertex >= 0 ? first_vertex : cand.front();
    const Vec3 xa = mesh.position(a);
    int b = a;
    for (int v : cand) {
        if ((mesh.position(v) - xa).norm() > (mesh.position(b) - xa).norm()) b = v;
    }
    const Vec3 ab = mesh.position(b) - xa;
    int c = a;
    double best = 0.0;
    for (int v : cand) {
        const double d = ab.cross(mesh.position(v) - xa).norm();
        if (d > best) best = d, c = v;
    }
    const Vec3 normal = ab.cross(mesh.position(c) - xa);

    std::vector<int> pinned = {dofs.dof(a, 0), dofs.dof(a, 1), dofs.dof(a, 2)};
    int skip = 0; // component most aligned with AB stays free at B
    ab.cwiseAbs().maxCoeff(&skip);
    for (int k = 0; k < 3; ++k) {
        if (k != skip) pinned.push_back(dofs.dof(b, k));
    }
    int along = 0;
    normal.cwiseAbs().maxCoeff(&along);
    pinned.push_back(dofs.dof(c, along));
    return pinned;
}

void remove_rigid_modes(SparseSystem& system, const ControlMesh& mesh, const std::vector<int>& pinned)
{
    const Eigen::MatrixXd r = rigid_modes(mesh, system.dofs);
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(pinned.size()), 6);
    for (std::size_t k = 0; k < pinned.size(); ++k) sub.row(static_cast<Eigen::Index>(k)) = r.row(pinned[k]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
    lu.setThreshold(1e-10);
    if (lu.rank() < 6) throw std::runtime_error("pinned dofs do not fix all rigid modes");

    std::vector<char> fixed(system.dofs.num_dofs(), 0);
    for (int d : pinned) fixed[d] = 1;
    Eigen::SparseMatrix<double>& k = system.matrix;
    for (int col = 0; col < k.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(k, col); it; ++it) {
            if (fixed[it.row()] || fixed[it.col()]) it.valueRef() = it.row() == it.col() ? 1.0 : 0.0;
        }
    }
    for (int d : pinned) system.rhs[d] = 0.0;
}

Vec3 displacement_at_vertex(const ManifoldBasis& basis, const DofMap& dofs, const Eigen::VectorXd& x, int vertex)
{
    Vec3 u = Vec3::Zero();
    for (const auto& [v, n] : evaluate_at_vertex(basis, vertex)) {
        for (int c = 0; c < 3; ++c) u[c] += n * x[dofs.dof(v, c)];
    }
    return u;
}

} // namespace miga
