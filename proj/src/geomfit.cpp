#include "miga/geomfit.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include <Eigen/Sparse>

#include "miga/basis_table.hpp"
#include "miga/fem.hpp"

namespace miga {

namespace {

Vec3 radial(const Vec3& x, double radius, const char* what)
{
    const double r = x.norm();
    if (r < 1e-300) throw std::domain_error(std::string("cannot project the origin onto a ") + what);
    return x * (radius / r);
}

void require_positive(double r, const char* what)
{
    if (!(r > 0.0)) throw std::invalid_argument(std::string(what) + " radius must be positive");
}

struct Sample {
    int element;
    Vec2 eta;
};

std::vector<Sample> fit_samples(const ControlMesh& mesh, FitDomain domain, int n)
{
    std::vector<Sample> out;
    if (domain == FitDomain::boundary) {
        const std::vector<BoundarySample> s = boundary_samples(mesh, n);
        for (std::size_t k = 0; k < s.size(); k += n) {
            for (int i = 0; i < n; ++i) out.push_back({s[k + i].element, s[k + i].eta});
            if (n % 2 == 0) out.push_back({s[k].element, 0.5 * (s[k].eta + s[k + n - 1].eta)});
        }
    } else {
        const QuadRule rule = gauss_rule(n);
        for (int e : domain_elements(mesh)) {
            for (const Vec2& p : rule.points) out.push_back({e, p});
        }
    }
    return out;
}

} // namespace

FitTarget circle_target(double radius)
{
    require_positive(radius, "circle");
    return {"circle", [radius](const Vec3& x) {
                return Vec3(radial(Vec3(x[0], x[1], 0.0), radius, "circle"));
            }};
}

FitTarget line_target(const Vec3& point, const Vec3& direction)
{
    if (direction.norm() == 0.0) throw std::invalid_argument("line direction must be nonzero");
    const Vec3 d = direction.normalized();
    return {"line", [point, d](const Vec3& x) { return Vec3(point + (x - point).dot(d) * d); }};
}

FitTarget cylinder_target(double radius)
{
    require_positive(radius, "cylinder");
    return {"cylinder", [radius](const Vec3& x) {
                const Vec3 p = radial(Vec3(x[0], x[1], 0.0), radius, "cylinder axis");
                return Vec3(p[0], p[1], x[2]);
            }};
}

FitTarget sphere_target(double radius)
{
    require_positive(radius, "sphere");
    return {"sphere", [radius](const Vec3& x) { return radial(x, radius, "sphere"); }};
}

FitTarget make_target(const std::string& name, const std::vector<double>& params)
{
    if (params.empty()) throw std::invalid_argument("target '" + name + "' needs a radius");
    if (name == "circle") return circle_target(params[0]);
    if (name == "cylinder") return cylinder_target(params[0]);
    if (name == "hemisphere" || name == "sphere") return sphere_target(params[0]);
    throw std::invalid_argument("unknown fit target '" + name + "'");
}

FitResult fit_to_target(const ManifoldBasis& basis, const FitProblem& problem)
{
    if (problem.free_vertices.empty()) throw std::invalid_argument("fit needs at least one free vertex");
    if (problem.samples < 1) throw std::invalid_argument("fit needs at least one sample per edge");
    if (!problem.target.project) throw std::invalid_argument("fit target has no projection");
    const ControlMesh& mesh = basis.mesh();
    const int nv = mesh.num_vertices();
    std::vector<int> column(nv, -1);
    std::vector<int> free_ids;
    for (int v : problem.free_vertices) {
        if (v < 0 || v >= nv) throw std::out_of_range("free vertex id out of range");
        if (column[v] < 0) {
            column[v] = static_cast<int>(free_ids.size());
            free_ids.push_back(v);
        }
    }

    // sample-to-vertex evaluation, split into free and fixed parts
    const std::vector<Sample> samples = fit_samples(mesh, problem.domain, problem.samples);
    if (samples.empty()) throw std::invalid_argument("fit domain has no samples");
    std::vector<Eigen::Triplet<double>> all, free;
    for (std::size_t k = 0; k < samples.size();) {
        const int e = samples[k].element;
        std::size_t end = k;
        std::vector<Vec2> pts;
        while (end < samples.size() && samples[end].element == e) pts.push_back(samples[end++].eta);
        const ElementBasis eb = evaluate_element(basis, e, pts, 0);
        for (int q = 0; q < eb.num_points(); ++q) {
            for (int i = 0; i < eb.num_vertices(); ++i) {
                const int v = eb.vertices[i];
                const double n = eb.value(q, i);
                all.emplace_back(static_cast<int>(k) + q, v, n);
                if (column[v] >= 0) free.emplace_back(static_cast<int>(k) + q, column[v], n);
            }
        }
        k = end;
    }
    const auto ns = static_cast<int>(samples.size());
    const auto nf = static_cast<int>(free_ids.size());
    Eigen::SparseMatrix<double> eval(ns, nv), b(ns, nf);
    eval.setFromTriplets(all.begin(), all.end());
    b.setFromTriplets(free.begin(), free.end());

    Eigen::SparseMatrix<double> normal = b.transpose() * b;
    double trace = 0.0;
    for (int i = 0; i < nf; ++i) trace += normal.coeff(i, i);
    if (!(trace > 0.0)) throw std::runtime_error("free vertices do not influence any fit sample");
    Eigen::SparseMatrix<double> reg(nf, nf);
    reg.setIdentity();
    normal += (1e-10 * trace) * reg;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(normal);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
        throw std::runtime_error("fit normal matrix is singular");
    }

    Eigen::MatrixXd x(nv, 3);
    for (int v = 0; v < nv; ++v) x.row(v) = mesh.position(v).transpose();
    auto residual = [&](const Eigen::MatrixXd& pos) {
        const Eigen::MatrixXd s = eval * pos;
        Eigen::MatrixXd r(ns, 3);
        for (int k = 0; k < ns; ++k) {
            const Vec3 p = s.row(k).transpose();
            r.row(k) = (problem.target.project(p) - p).transpose();
        }
        return r;
    };

    FitResult out;
    out.num_samples = ns;
    Eigen::MatrixXd r = residual(x);
    out.initial_rms = std::sqrt(r.squaredNorm() / ns);
    for (int it = 0; it < problem.iterations; ++it) {
        const Eigen::MatrixXd delta = ldlt.solve(Eigen::MatrixXd(b.transpose() * r));
        for (int i = 0; i < nf; ++i) x.row(free_ids[i]) += delta.row(i);
        r = residual(x);
    }
    out.final_rms = std::sqrt(r.squaredNorm() / ns);
    out.positions.resize(nv);
    for (int v = 0; v < nv; ++v) out.positions[v] = x.row(v).transpose();
    return out;
}

std::vector<int> near_boundary_vertices(const ControlMesh& mesh)
{
    std::set<int> out;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.vertex_kind(v) != VertexKind::interior) out.insert(v);
    }
    for (int f = 0; f < mesh.num_quads(); ++f) {
        if (mesh.is_ghost_element(f)) continue;
        const Quad& q = mesh.quad(f);
        bool touches = false;
        for (int v : q) touches = touches || mesh.vertex_kind(v) == VertexKind::boundary;
        if (touches) out.insert(q.begin(), q.end());
    }
    return {out.begin(), out.end()};
}

std::vector<int> all_vertices(const ControlMesh& mesh)
{
    std::vector<int> out(mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v) out[v] = v;
    return out;
}

} // namespace miga
