// Command-line driver: tabulate, solve, converge, benchmark, refine, fit.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "miga/basis_table.hpp"
#include "miga/geomfit.hpp"
#include "miga/harness.hpp"

namespace {

using namespace miga;

/// Flag values that override the config file when given.
struct Overrides {
    std::string config, problem, mesh, poly_kind, problem_file, csv, json, vtk;
    std::optional<int> blending, poly_degree, ring_depth, gauss_n, refinements, vtk_subdivision;
    std::optional<double> penalty;
    bool serial = false;
};

void add_run_flags(CLI::App* app, Overrides& o)
{
    app->add_option("--config", o.config, "JSON run configuration");
    app->add_option("--problem", o.problem, "poisson-structured, poisson-unstructured, poisson-circle, ss-plate, "
                                            "pinched-cylinder or pinched-hemisphere");
    app->add_option("--mesh", o.mesh, "OBJ file or generator (e.g. structured-square:8, hemisphere:6)");
    app->add_option("--blending-degree", o.blending, "blending B-spline degree (1-3)");
    app->add_option("--poly-degree", o.poly_degree, "local polynomial degree");
    app->add_option("--poly-kind", o.poly_kind, "tensor or complete");
    app->add_option("--ring-depth", o.ring_depth, "patch ring depth (1 or 2)");
    app->add_option("--gauss-n", o.gauss_n, "Gauss points per direction");
    app->add_option("--penalty", o.penalty, "penalty factor c in beta = c E / h^k");
    app->add_option("--refinements", o.refinements, "number of levels");
    app->add_option("--problem-file", o.problem_file, "benchmark definition JSON");
    app->add_option("--csv", o.csv, "CSV report path");
    app->add_option("--json", o.json, "JSON report path");
    app->add_option("--vtk", o.vtk, "VTK output of the last level");
    app->add_option("--vtk-subdivision", o.vtk_subdivision, "VTK sampling level per element");
    app->add_flag("--serial", o.serial, "serial tabulation and assembly");
}

RunConfig make_config(const Overrides& o)
{
    RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
    if (!o.problem.empty()) c.problem = parse_problem(o.problem);
    if (!o.mesh.empty()) c.mesh = o.mesh;
    if (o.blending) c.blending_degree = *o.blending;
    if (o.poly_degree) c.poly.degree = *o.poly_degree;
    if (!o.poly_kind.empty()) {
        if (o.poly_kind == "tensor") c.poly.kind = PolyKind::tensor_lagrange;
        else if (o.poly_kind == "complete") c.poly.kind = PolyKind::complete_monomial;
        else throw ConfigError("--poly-kind must be tensor or complete");
    }
    if (o.ring_depth) c.ring_depth = *o.ring_depth;
    if (o.gauss_n) c.gauss_n = *o.gauss_n;
    if (o.penalty) c.penalty = *o.penalty;
    if (o.refinements) c.refinements = *o.refinements;
    if (!o.problem_file.empty()) c.problem_file = o.problem_file;
    if (!o.csv.empty()) c.csv = o.csv;
    if (!o.json.empty()) c.json = o.json;
    if (!o.vtk.empty()) c.vtk = o.vtk;
    if (o.vtk_subdivision) c.vtk_subdivision = *o.vtk_subdivision;
    if (o.serial) c.parallel = false;
    c.validate();
    return c;
}

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void write_reports(const RunConfig& c, const ConvergenceReport& r, bool csv_to_stdout)
{
    const std::string csv = report_csv(r);
    if (!c.csv.empty()) write_file(c.csv, csv);
    else if (csv_to_stdout) std::cout << csv;
    if (!c.json.empty()) write_file(c.json, report_json(r));
}

int run(int argc, char** argv)
{
    CLI::App app{"Manifold-based smooth basis functions on quad meshes"};
    app.require_subcommand(1);
    Overrides o;

    auto* converge = app.add_subcommand("converge", "convergence study over Catmull-Clark levels");
    add_run_flags(converge, o);
    auto* solve = app.add_subcommand("solve", "solve one problem on one mesh (refinements default to 1)");
    add_run_flags(solve, o);
    auto* bench = app.add_subcommand("benchmark", "plate and shell benchmarks, normalized value per level");
    add_run_flags(bench, o);

    auto* tab = app.add_subcommand("tabulate", "tabulate basis functions at Gauss points to JSON");
    std::string tab_mesh, tab_out;
    int tab_depth = 1, tab_blend = 3, tab_poly = 2, tab_gauss = 3, tab_order = 1;
    tab->add_option("--mesh", tab_mesh, "OBJ file or generator")->required();
    tab->add_option("--out", tab_out, "output JSON (stdout if omitted)");
    tab->add_option("--ring-depth", tab_depth, "patch ring depth (1 or 2)");
    tab->add_option("--blending-degree", tab_blend, "blending B-spline degree (1-3)");
    tab->add_option("--poly-degree", tab_poly, "local polynomial degree");
    tab->add_option("--gauss-n", tab_gauss, "Gauss points per direction");
    tab->add_option("--order", tab_order, "derivative order (0-2)");

    auto* refine = app.add_subcommand("refine", "Catmull-Clark refinement of an OBJ mesh");
    std::string ref_in, ref_out;
    int ref_levels = 1;
    refine->add_option("--mesh", ref_in, "input OBJ or generator")->required();
    refine->add_option("--out", ref_out, "output OBJ")->required();
    refine->add_option("--levels", ref_levels, "refinement steps");

    auto* fit = app.add_subcommand("fit", "least-squares fit of control vertices to a target");
    std::string fit_in, fit_out, fit_target, fit_domain = "boundary";
    double fit_radius = 0.5;
    int fit_depth = 1, fit_samples = 4, fit_iter = 4;
    fit->add_option("--mesh", fit_in, "input OBJ or generator")->required();
    fit->add_option("--out", fit_out, "output OBJ")->required();
    fit->add_option("--target", fit_target, "circle, cylinder or hemisphere")->required();
    fit->add_option("--radius", fit_radius, "target radius");
    fit->add_option("--domain", fit_domain, "boundary or surface");
    fit->add_option("--ring-depth", fit_depth, "patch ring depth (1 or 2)");
    fit->add_option("--samples", fit_samples, "samples per direction on each boundary edge or element");
    fit->add_option("--iterations", fit_iter, "fit and re-project iterations");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    }

    auto mesh_for = [](const std::string& spec, int depth) {
        ControlMesh m = make_mesh(spec, Problem::poisson_structured, ShellBenchmark{});
        return m.ghost_layers() >= depth ? m : reflect_ghosts(m.has_ghosts() ? strip_ghosts(m) : m, depth);
    };
    auto check_mesh_arg = [](const std::string& spec) {
        RunConfig probe;
        probe.mesh = spec;
        probe.validate();
    };

    if (*converge || *solve || *bench) {
        if (*solve && !o.refinements) o.refinements = 1;
        const RunConfig c = make_config(o);
        if (*bench && !is_shell(c.problem)) throw ConfigError("benchmark needs a plate or shell problem");
        const ConvergenceReport r = run_convergence(c);
        if (*bench) {
            std::cout << "level,n_dofs," << r.extra_names.back() << '\n';
            for (const LevelResult& l : r.levels) {
                std::printf("%d,%d,%.6f\n", l.level, l.n_dofs, l.extra.back());
            }
            write_reports(c, r, false);
        } else {
            write_reports(c, r, true);
        }
        return 0;
    }
    if (*tab) {
        check_mesh_arg(tab_mesh);
        if (tab_order < 0 || tab_order > 2) throw ConfigError("--order must lie in [0, 2]");
        BasisConfig bc;
        bc.ring_depth = tab_depth;
        bc.blending.degree = tab_blend;
        bc.poly.degree = tab_poly;
        const ManifoldBasis basis(mesh_for(tab_mesh, tab_depth), bc);
        const BasisTable table = tabulate_mesh(basis, gauss_rule(tab_gauss), tab_order, Execution::parallel);
        nlohmann::json j;
        j["points"] = table.rule.points.size();
        j["elements"] = nlohmann::json::array();
        for (const ElementBasis& eb : table.elements) {
            if (eb.element < 0) continue;
            nlohmann::json e = {{"element", eb.element}, {"vertices", eb.vertices}};
            auto rows = [](const Eigen::MatrixXd& m) {
                std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols()));
                for (Eigen::Index i = 0; i < m.rows(); ++i) {
                    for (Eigen::Index k = 0; k < m.cols(); ++k) out[i][k] = m(i, k);
                }
                return out;
            };
            e["value"] = rows(eb.value);
            if (tab_order >= 1) e["grad"] = {rows(eb.grad[0]), rows(eb.grad[1])};
            if (tab_order >= 2) e["hess"] = {rows(eb.hess[0]), rows(eb.hess[1]), rows(eb.hess[2])};
            j["elements"].push_back(e);
        }
        if (tab_out.empty()) std::cout << j.dump() << '\n';
        else write_file(tab_out, j.dump());
        return 0;
    }
    if (*refine) {
        check_mesh_arg(ref_in);
        if (ref_levels < 0) throw ConfigError("--levels must be non-negative");
        ControlMesh m = make_mesh(ref_in, Problem::poisson_structured, ShellBenchmark{});
        for (int i = 0; i < ref_levels; ++i) m = catmull_clark_refine(m);
        save_obj(m, ref_out);
        std::cout << m.num_vertices() << " vertices, " << m.num_quads() << " quads\n";
        return 0;
    }
    if (*fit) {
        check_mesh_arg(fit_in);
        FitProblem fp;
        try {
            fp.target = make_target(fit_target, {fit_radius});
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (fit_domain != "boundary" && fit_domain != "surface") throw ConfigError("--domain must be boundary or surface");
        fp.domain = fit_domain == "boundary" ? FitDomain::boundary : FitDomain::surface;
        fp.samples = fit_samples;
        fp.iterations = fit_iter;
        BasisConfig bc;
        bc.ring_depth = fit_depth;
        const ControlMesh m = mesh_for(fit_in, fit_depth);
        fp.free_vertices = fp.domain == FitDomain::boundary ? near_boundary_vertices(m) : all_vertices(m);
        const FitResult r = fit_to_target(ManifoldBasis(m, bc), fp);
        save_obj(m.with_positions(r.positions), fit_out);
        std::printf("rms %.6e -> %.6e over %d samples\n", r.initial_rms, r.final_rms, r.num_samples);
        return 0;
    }
    return 2;
}

} // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const miga::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
