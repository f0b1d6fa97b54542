#include "miga/vtk.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "miga/basis_table.hpp"
#include "miga/fem.hpp"

namespace miga {

void export_vtk(const ManifoldBasis& basis, const std::vector<std::vector<double>>& field, const std::string& name,
                int subdivision, const std::filesystem::path& path)
{
    if (field.size() != 1 && field.size() != 3) throw std::invalid_argument("VTK field needs 1 or 3 components");
    if (subdivision < 0 || subdivision > 8) throw std::invalid_argument("VTK subdivision level must lie in [0, 8]");
    const ControlMesh& mesh = basis.mesh();
    const int m = 1 << subdivision;
    std::vector<Vec2> grid;
    for (int j = 0; j <= m; ++j) {
        for (int i = 0; i <= m; ++i) grid.emplace_back(double(i) / m, double(j) / m);
    }

    std::vector<Vec3> points;
    std::vector<std::array<double, 3>> values;
    for (int e : domain_elements(mesh)) {
        const ElementBasis eb = evaluate_element(basis, e, grid, 0);
        for (int q = 0; q < eb.num_points(); ++q) {
            Vec3 x = Vec3::Zero();
            std::array<double, 3> f{0.0, 0.0, 0.0};
            for (int i = 0; i < eb.num_vertices(); ++i) {
                const int v = eb.vertices[i];
                const double n = eb.value(q, i);
                x += n * mesh.position(v);
                for (std::size_t c = 0; c < field.size(); ++c) f[c] += n * field[c].at(v);
            }
            points.push_back(x);
            values.push_back(f);
        }
    }

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write VTK file " + path.string());
    const std::size_t per = grid.size();
    const std::size_t ne = points.size() / per;
    const std::size_t cells = ne * m * m;
    char buf[128];
    out << "# vtk DataFile Version 3.0\n" << name << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << points.size() << " double\n";
    for (const Vec3& p : points) {
        std::snprintf(buf, sizeof buf, "%.12g %.12g %.12g\n", p[0], p[1], p[2]);
        out << buf;
    }
    out << "CELLS " << cells << ' ' << 5 * cells << '\n';
    for (std::size_t e = 0; e < ne; ++e) {
        for (int j = 0; j < m; ++j) {
            for (int i = 0; i < m; ++i) {
                const std::size_t a = e * per + j * (m + 1) + i;
                out << "4 " << a << ' ' << a + 1 << ' ' << a + m + 2 << ' ' << a + m + 1 << '\n';
            }
        }
    }
    out << "CELL_TYPES " << cells << '\n';
    for (std::size_t c = 0; c < cells; ++c) out << "9\n";
    out << "POINT_DATA " << points.size() << '\n';
    if (field.size() == 1) {
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (const auto& f : values) {
            std::snprintf(buf, sizeof buf, "%.12g\n", f[0]);
            out << buf;
        }
    } else {
        out << "VECTORS " << name << " double\n";
        for (const auto& f : values) {
            std::snprintf(buf, sizeof buf, "%.12g %.12g %.12g\n", f[0], f[1], f[2]);
            out << buf;
        }
    }
    if (!out) throw std::runtime_error("failed writing VTK file " + path.string());
}

} // namespace miga
