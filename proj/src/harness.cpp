#include "miga/harness.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "miga/fem.hpp"
#include "miga/geomfit.hpp"
#include "miga/mesh_generators.hpp"
#include "miga/vtk.hpp"

namespace miga {

namespace {

using json = nlohmann::json;
constexpr double nan = std::numeric_limits<double>::quiet_NaN();

constexpr std::array<std::pair<Problem, const char*>, 6> problem_names = {{
    {Problem::poisson_structured, "poisson-structured"},
    {Problem::poisson_unstructured, "poisson-unstructured"},
    {Problem::poisson_circle, "poisson-circle"},
    {Problem::ss_plate, "ss-plate"},
    {Problem::pinched_cylinder, "pinched-cylinder"},
    {Problem::pinched_hemisphere, "pinched-hemisphere"},
}};

bool is_poisson(Problem p)
{
    return p == Problem::poisson_structured || p == Problem::poisson_unstructured || p == Problem::poisson_circle;
}

std::pair<std::string, std::string> split_spec(const std::string& spec)
{
    const auto colon = spec.find(':');
    if (colon == std::string::npos) return {spec, ""};
    return {spec.substr(0, colon), spec.substr(colon + 1)};
}

bool is_generator(const std::string& spec)
{
    static const std::array<const char*, 6> names = {"structured-square", "unstructured-square", "disk", "cylinder",
                                                     "cylinder-unstructured", "hemisphere"};
    const std::string head = split_spec(spec).first;
    for (const char* n : names) {
        if (head == n) return true;
    }
    return false;
}

int parse_int(const std::string& s, const std::string& what)
{
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw ConfigError("invalid " + what + " '" + s + "'");
    return v;
}

std::pair<int, int> parse_pair(const std::string& s, int a, int b)
{
    if (s.empty()) return {a, b};
    const auto x = s.find('x');
    if (x == std::string::npos) throw ConfigError("expected CIRCxAXIAL, got '" + s + "'");
    return {parse_int(s.substr(0, x), "element count"), parse_int(s.substr(x + 1), "element count")};
}

template <class T>
T get(const json& j, const char* key)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

std::string number(double v)
{
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10e", v);
    return buf;
}

double max_boundary_edge(const ControlMesh& mesh)
{
    double h = 0.0;
    for (int he : mesh.domain_boundary_halfedges()) h = std::max(h, (mesh.position(mesh.to(he)) - mesh.position(mesh.from(he))).norm());
    if (!(h > 0.0)) throw std::runtime_error("mesh has no domain boundary for the penalty");
    return h;
}

int nearest_vertex(const ControlMesh& mesh, const Vec3& x, double tolerance)
{
    int best = -1;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.is_ghost_vertex(v)) continue;
        if (best < 0 || (mesh.position(v) - x).norm() < (mesh.position(best) - x).norm()) best = v;
    }
    if (best < 0 || (mesh.position(best) - x).norm() > tolerance) {
        std::ostringstream os;
        os << "no control vertex at (" << x.transpose() << ")";
        throw std::runtime_error(os.str());
    }
    return best;
}

ControlMesh with_ghosts(const ControlMesh& mesh, int layers)
{
    if (mesh.ghost_layers() >= layers) return mesh;
    return reflect_ghosts(mesh.has_ghosts() ? strip_ghosts(mesh) : mesh, layers);
}

/// Everything a problem needs besides the mesh: exact field, loads and tagged vertices.
struct Setup {
    ScalarField exact;
    GradientField exact_grad;
    ScalarField source;
    std::vector<int> tags;     // pointwise error vertices (Poisson) or load/probe vertices
    std::vector<Vec3> forces;  // shells: force at each tag
    std::vector<Vec3> probe;   // shells: measurement direction at each tag
};

Setup make_setup(Problem p, const ControlMesh& base, const ShellBenchmark& bench)
{
    Setup s;
    const double k = 4.0 * std::numbers::pi;
    if (p == Problem::poisson_structured) {
        s.exact = [k](const Vec2& x) { return std::cos(k * x[0]) * std::cos(k * x[1]); };
        s.exact_grad = [k](const Vec2& x) {
            return Vec2(-k * std::sin(k * x[0]) * std::cos(k * x[1]), -k * std::cos(k * x[0]) * std::sin(k * x[1]));
        };
    } else if (is_poisson(p)) {
        s.exact = [k](const Vec2& x) { return std::sin(k * x[0]) * std::sin(k * x[1]); };
        s.exact_grad = [k](const Vec2& x) {
            return Vec2(k * std::cos(k * x[0]) * std::sin(k * x[1]), k * std::sin(k * x[0]) * std::cos(k * x[1]));
        };
    }
    if (is_poisson(p)) {
        const ScalarField u = s.exact;
        s.source = [u, k](const Vec2& x) { return 2.0 * k * k * u(x); };
    }
    if (p == Problem::poisson_unstructured) {
        // first interior vertex of valence 3, 4 and 5
        for (int val : {3, 4, 5}) {
            int tag = -1;
            for (int v = 0; v < base.num_vertices() && tag < 0; ++v) {
                if (base.vertex_kind(v) == VertexKind::interior && base.valence(v) == val) tag = v;
            }
            if (tag < 0) throw std::runtime_error("mesh has no interior vertex of valence " + std::to_string(val));
            s.tags.push_back(tag);
        }
    } else if (p == Problem::ss_plate) {
        s.tags.push_back(nearest_vertex(base, Vec3(0.5, 0.5, 0.0), 0.25));
    } else if (p == Problem::pinched_cylinder) {
        const double r = bench.radius;
        s.tags = {nearest_vertex(base, Vec3(r, 0, 0), 1e-6 * r), nearest_vertex(base, Vec3(-r, 0, 0), 1e-6 * r)};
        s.forces = {Vec3(-bench.load, 0, 0), Vec3(bench.load, 0, 0)};
        s.probe = {Vec3(1, 0, 0), Vec3(-1, 0, 0)};
    } else if (p == Problem::pinched_hemisphere) {
        const double r = bench.radius;
        const std::array<Vec3, 4> dirs = {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0)};
        for (int i = 0; i < 4; ++i) {
            s.tags.push_back(nearest_vertex(base, r * dirs[i], 1e-6 * r));
            s.forces.push_back((i < 2 ? bench.load : -bench.load) * dirs[i]);
            s.probe.push_back(dirs[i]);
        }
    }
    return s;
}

struct LevelOutput {
    LevelResult result;
    std::vector<std::vector<double>> field; // per-vertex coefficients for export
};

LevelOutput solve_poisson(const RunConfig& cfg, const ManifoldBasis& basis, const QuadRule& rule, const Setup& s)
{
    const Execution exec = cfg.execution();
    SparseSystem sys = assemble_poisson(basis, rule, s.source, exec);
    const double beta = cfg.penalty.value_or(1e4) / max_boundary_edge(basis.mesh());
    apply_penalty_dirichlet(sys, basis, beta, 9, {s.exact}, exec);
    const Eigen::VectorXd x = solve(sys);
    const std::vector<double> c = vertex_coefficients(sys.dofs, x);
    const ErrorNorms e = error_norms(basis, rule, c, s.exact, s.exact_grad, exec);
    LevelOutput out;
    out.result.n_dofs = sys.dofs.num_dofs();
    out.result.l2 = e.l2;
    out.result.h1_semi = e.h1_semi;
    for (int v : s.tags) {
        const Vec3 p = surface_point_at_vertex(basis, v);
        out.result.extra.push_back(std::abs(evaluate_at_vertex(basis, c, v) - s.exact(p.head<2>())));
    }
    out.field = {c};
    return out;
}

std::vector<std::vector<double>> displacement_field(const DofMap& dofs, const Eigen::VectorXd& x)
{
    return {vertex_coefficients(dofs, x, 0), vertex_coefficients(dofs, x, 1), vertex_coefficients(dofs, x, 2)};
}

LevelOutput solve_plate(const RunConfig& cfg, const ManifoldBasis& basis, const QuadRule& rule, const Setup& s,
                        const ShellBenchmark& bench)
{
    const Execution exec = cfg.execution();
    const ShellMaterial& mat = bench.material;
    const double q = bench.load;
    ShellLoad load;
    load.area = [q](const Vec3&, const Vec3&) { return Vec3(0.0, 0.0, q); };
    SparseSystem sys = assemble_kirchhoff_love(basis, rule, mat, load, exec);
    const double hb = max_boundary_edge(basis.mesh());
    apply_penalty_dirichlet(sys, basis, cfg.penalty.value_or(1e3) * mat.bending_rigidity() / std::pow(hb, 3), 9, {},
                            exec);
    const Eigen::VectorXd x = solve(sys);
    LevelOutput out;
    out.field = displacement_field(sys.dofs, x);
    const ScalarField w = [&](const Vec2& p) { return navier_plate_deflection(p, q, mat); };
    const GradientField gw = [&](const Vec2& p) { return navier_plate_gradient(p, q, mat); };
    const ErrorNorms e = error_norms(basis, rule, out.field[2], w, gw, exec);
    out.result.n_dofs = sys.dofs.num_dofs();
    out.result.l2 = e.l2;
    out.result.h1_semi = e.h1_semi;
    const int c = s.tags.front();
    const double wc = displacement_at_vertex(basis, sys.dofs, x, c)[2];
    const Vec3 pc = surface_point_at_vertex(basis, c);
    out.result.extra = {wc, wc / navier_plate_deflection(pc.head<2>(), q, mat)};
    return out;
}

LevelOutput solve_pinched(const RunConfig& cfg, Problem p, const ManifoldBasis& basis, const QuadRule& rule,
                          const Setup& s, const ShellBenchmark& bench)
{
    ShellLoad load;
    for (std::size_t i = 0; i < s.tags.size(); ++i) load.points.push_back({s.tags[i], s.forces[i]});
    check_self_equilibrated(basis, load.points);
    SparseSystem sys = assemble_kirchhoff_love(basis, rule, bench.material, load, cfg.execution());
    remove_rigid_modes(sys, basis.mesh(), rigid_mode_constraints(basis.mesh(), sys.dofs, s.tags.front()));
    const Eigen::VectorXd x = solve(sys);
    LevelOutput out;
    out.field = displacement_field(sys.dofs, x);
    out.result.n_dofs = sys.dofs.num_dofs();
    out.result.l2 = nan;
    out.result.h1_semi = nan;
    double value = 0.0;
    if (p == Problem::pinched_cylinder) {
        const Vec3 ua = displacement_at_vertex(basis, sys.dofs, x, s.tags[0]);
        const Vec3 ub = displacement_at_vertex(basis, sys.dofs, x, s.tags[1]);
        value = std::abs((ua - ub).dot(s.probe[0]));
    } else {
        for (std::size_t i = 0; i < s.tags.size(); ++i) {
            value = std::max(value, std::abs(displacement_at_vertex(basis, sys.dofs, x, s.tags[i]).dot(s.probe[i])));
        }
    }
    out.result.extra = {value, value / bench.reference};
    return out;
}

std::optional<FitProblem> fit_problem(Problem p, const ControlMesh& mesh, const RunConfig& cfg,
                                      const ShellBenchmark& bench)
{
    FitProblem fp;
    fp.samples = cfg.fit_samples;
    fp.iterations = cfg.fit_iterations;
    if (p == Problem::poisson_circle) {
        fp.target = circle_target(0.5);
        fp.domain = FitDomain::boundary;
        fp.free_vertices = near_boundary_vertices(mesh);
    } else if (p == Problem::pinched_cylinder || p == Problem::pinched_hemisphere) {
        fp.target = p == Problem::pinched_cylinder ? cylinder_target(bench.radius) : sphere_target(bench.radius);
        fp.domain = FitDomain::surface;
        fp.free_vertices = all_vertices(mesh);
    } else {
        return std::nullopt;
    }
    return fp;
}

json config_json(const RunConfig& c)
{
    json j;
    j["problem"] = to_string(c.problem);
    j["mesh"] = c.mesh;
    j["blending_degree"] = c.blending_degree;
    j["poly"] = {{"kind", c.poly.kind == PolyKind::tensor_lagrange ? "tensor" : "complete"}, {"degree", c.poly.degree}};
    j["ring_depth"] = c.ring_depth;
    j["gauss_n"] = c.gauss_n;
    if (c.penalty) j["penalty"] = *c.penalty;
    j["refinements"] = c.refinements;
    j["fit_samples"] = c.fit_samples;
    j["fit_iterations"] = c.fit_iterations;
    j["parallel"] = c.parallel;
    j["problem_file"] = c.problem_file;
    j["outputs"] = {{"csv", c.csv}, {"json", c.json}, {"vtk", c.vtk}, {"vtk_subdivision", c.vtk_subdivision}};
    return j;
}

} // namespace

std::string to_string(Problem p)
{
    for (const auto& [q, name] : problem_names) {
        if (q == p) return name;
    }
    return "unknown";
}

Problem parse_problem(const std::string& name)
{
    for (const auto& [q, n] : problem_names) {
        if (name == n) return q;
    }
    std::string known;
    for (const auto& [q, n] : problem_names) known += std::string(known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown problem '" + name + "' (known: " + known + ")");
}

bool is_shell(Problem p)
{
    return p == Problem::ss_plate || p == Problem::pinched_cylinder || p == Problem::pinched_hemisphere;
}

ShellBenchmark default_benchmark(Problem p)
{
    ShellBenchmark b;
    switch (p) {
    case Problem::ss_plate:
        b.length = 1.0;
        b.material = {70e9, 0.3, 0.01};
        b.load = 1e4;
        b.reference = navier_plate_deflection(Vec2(0.5, 0.5), b.load, b.material);
        break;
    case Problem::pinched_cylinder:
        // free-ended cylinder; the force gives a diameter change of 4.52e-4 (0.1139 per side at P = 100)
        b.radius = 4.953;
        b.length = 10.35;
        b.material = {10.5e6, 0.3125, 0.094};
        b.load = 100.0 * 4.52e-4 / (2.0 * 0.1139);
        b.reference = 4.52e-4;
        break;
    case Problem::pinched_hemisphere:
        b.radius = 10.0;
        b.material = {6.825e7, 0.3, 0.04};
        b.load = 1.0;
        b.reference = 0.0924;
        break;
    default:
        break;
    }
    return b;
}

ShellBenchmark load_benchmark(Problem p, const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open problem file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("problem file " + path.string() + ": " + e.what());
    }
    check_keys(j, {"problem", "description", "radius", "length", "material", "load", "reference"}, path.string());
    if (j.contains("problem") && get<std::string>(j, "problem") != to_string(p)) {
        throw ConfigError("problem file " + path.string() + " describes '" + get<std::string>(j, "problem") + "'");
    }
    ShellBenchmark b = default_benchmark(p);
    if (j.contains("radius")) b.radius = get<double>(j, "radius");
    if (j.contains("length")) b.length = get<double>(j, "length");
    if (j.contains("load")) b.load = get<double>(j, "load");
    if (j.contains("reference")) b.reference = get<double>(j, "reference");
    if (j.contains("material")) {
        const json& m = j.at("material");
        check_keys(m, {"E", "nu", "thickness"}, "material");
        if (m.contains("E")) b.material.youngs_modulus = get<double>(m, "E");
        if (m.contains("nu")) b.material.poisson_ratio = get<double>(m, "nu");
        if (m.contains("thickness")) b.material.thickness = get<double>(m, "thickness");
    }
    try {
        b.material.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!(b.reference != 0.0)) throw ConfigError(path.string() + ": reference value must be nonzero");
    return b;
}

void RunConfig::validate() const
{
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (blending_degree < 1 || blending_degree > 3) fail("blending_degree must be 1, 2 or 3");
    if (ring_depth != 1 && ring_depth != 2) fail("ring_depth must be 1 or 2");
    if (poly.degree < 1 || poly.degree > ring_depth + 1) {
        fail("poly degree must lie in [1, " + std::to_string(ring_depth + 1) + "] for ring depth " +
             std::to_string(ring_depth));
    }
    if (gauss_n < 1 || gauss_n > 20) fail("gauss_n must lie in [1, 20]");
    if (refinements < 1 || refinements > 8) fail("refinements must lie in [1, 8]");
    if (penalty && !(*penalty > 0.0)) fail("penalty must be positive");
    if (fit_samples < 1 || fit_iterations < 1) fail("fit_samples and fit_iterations must be positive");
    if (vtk_subdivision < 0 || vtk_subdivision > 6) fail("vtk_subdivision must lie in [0, 6]");
    if (is_shell(problem) && blending_degree != 3) fail("plate and shell problems require blending_degree = 3");
    if (!mesh.empty() && !is_generator(mesh) && !std::filesystem::exists(mesh)) fail("mesh file not found: " + mesh);
    if (!problem_file.empty()) {
        if (!is_shell(problem)) fail("problem_file only applies to plate and shell problems");
        if (!std::filesystem::exists(problem_file)) fail("problem file not found: " + problem_file);
    }
}

RunConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(j,
               {"problem", "mesh", "blending_degree", "poly", "ring_depth", "gauss_n", "penalty", "refinements",
                "fit_samples", "fit_iterations", "parallel", "problem_file", "outputs"},
               "config");
    RunConfig c;
    if (j.contains("problem")) c.problem = parse_problem(get<std::string>(j, "problem"));
    if (j.contains("mesh")) c.mesh = get<std::string>(j, "mesh");
    if (j.contains("blending_degree")) c.blending_degree = get<int>(j, "blending_degree");
    if (j.contains("poly")) {
        const json& p = j.at("poly");
        check_keys(p, {"kind", "degree"}, "poly");
        if (p.contains("degree")) c.poly.degree = get<int>(p, "degree");
        if (p.contains("kind")) {
            const auto kind = get<std::string>(p, "kind");
            if (kind == "tensor") c.poly.kind = PolyKind::tensor_lagrange;
            else if (kind == "complete") c.poly.kind = PolyKind::complete_monomial;
            else throw ConfigError("poly kind must be 'tensor' or 'complete'");
        }
    }
    if (j.contains("ring_depth")) c.ring_depth = get<int>(j, "ring_depth");
    if (j.contains("gauss_n")) c.gauss_n = get<int>(j, "gauss_n");
    if (j.contains("penalty") && !j.at("penalty").is_null()) c.penalty = get<double>(j, "penalty");
    if (j.contains("refinements")) c.refinements = get<int>(j, "refinements");
    if (j.contains("fit_samples")) c.fit_samples = get<int>(j, "fit_samples");
    if (j.contains("fit_iterations")) c.fit_iterations = get<int>(j, "fit_iterations");
    if (j.contains("parallel")) c.parallel = get<bool>(j, "parallel");
    if (j.contains("problem_file")) c.problem_file = get<std::string>(j, "problem_file");
    if (j.contains("outputs")) {
        const json& o = j.at("outputs");
        check_keys(o, {"csv", "json", "vtk", "vtk_subdivision"}, "outputs");
        if (o.contains("csv")) c.csv = get<std::string>(o, "csv");
        if (o.contains("json")) c.json = get<std::string>(o, "json");
        if (o.contains("vtk")) c.vtk = get<std::string>(o, "vtk");
        if (o.contains("vtk_subdivision")) c.vtk_subdivision = get<int>(o, "vtk_subdivision");
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig c = parse_config(ss.str());
    // relative paths inside a config file are relative to the file
    const std::filesystem::path dir = path.parent_path();
    auto rebase = [&](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative() && !is_generator(p)) p = (dir / p).string();
    };
    rebase(c.mesh);
    rebase(c.problem_file);
    return c;
}

std::string config_to_json(const RunConfig& config)
{
    return config_json(config).dump(2);
}

std::string default_mesh(Problem p)
{
    switch (p) {
    case Problem::poisson_structured: return "structured-square:8";
    case Problem::poisson_unstructured: return "unstructured-square";
    case Problem::poisson_circle: return "disk";
    case Problem::ss_plate: return "unstructured-square";
    case Problem::pinched_cylinder: return "cylinder:8x4";
    case Problem::pinched_hemisphere: return "hemisphere:6";
    }
    return "";
}

ControlMesh make_mesh(const std::string& spec, Problem problem, const ShellBenchmark& bench)
{
    if (!is_generator(spec)) {
        if (!std::filesystem::exists(spec)) throw ConfigError("mesh file not found: " + spec);
        return load_obj(spec);
    }
    const auto [name, args] = split_spec(spec);
    const bool shell_geometry = problem == Problem::pinched_cylinder || problem == Problem::pinched_hemisphere;
    if (name == "structured-square") return structured_square(args.empty() ? 8 : parse_int(args, "grid size"));
    if (name == "unstructured-square") return unstructured_square();
    if (name == "disk") return disk_ogrid(0.5);
    if (name == "cylinder" || name == "cylinder-unstructured") {
        const bool rotated = name == "cylinder-unstructured";
        const auto [nc, na] = parse_pair(args, 8, rotated ? 8 : 4);
        const double r = shell_geometry ? bench.radius : 1.0;
        const double l = shell_geometry ? bench.length : 2.0;
        return cylinder_mesh(r, l, nc, na, rotated);
    }
    if (name == "hemisphere") {
        return hemisphere_mesh(shell_geometry ? bench.radius : 1.0, args.empty() ? 4 : parse_int(args, "cube edge count"));
    }
    throw ConfigError("unknown mesh generator '" + spec + "'");
}

double loglog_slope(const std::vector<double>& h, const std::vector<double>& e)
{
    if (h.size() != e.size() || h.size() < 2) return nan;
    double mx = 0.0, my = 0.0;
    const auto n = static_cast<double>(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(h[i] > 0.0) || !(e[i] > 0.0)) return nan;
        mx += std::log(h[i]) / n;
        my += std::log(e[i]) / n;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double dx = std::log(h[i]) - mx;
        sxy += dx * (std::log(e[i]) - my);
        sxx += dx * dx;
    }
    return sxx > 0.0 ? sxy / sxx : nan;
}

ConvergenceReport run_convergence(const RunConfig& config)
{
    config.validate();
    const Problem p = config.problem;
    const ShellBenchmark bench =
        config.problem_file.empty() ? default_benchmark(p) : load_benchmark(p, config.problem_file);
    ControlMesh mesh = with_ghosts(make_mesh(config.mesh.empty() ? default_mesh(p) : config.mesh, p, bench),
                                   config.ring_depth);
    const Setup setup = make_setup(p, mesh, bench);

    ConvergenceReport report;
    report.problem = p;
    switch (p) {
    case Problem::poisson_structured: break;
    case Problem::poisson_unstructured:
        report.extra_names = {"err_v3", "err_v4", "err_v5"};
        report.extra_is_error = {true, true, true};
        break;
    case Problem::poisson_circle:
        report.extra_names = {"fit_rms"};
        report.extra_is_error = {true};
        break;
    case Problem::ss_plate:
        report.extra_names = {"center_deflection", "normalized"};
        report.extra_is_error = {false, false};
        break;
    case Problem::pinched_cylinder:
        report.extra_names = {"diameter_change", "normalized"};
        report.extra_is_error = {false, false};
        break;
    case Problem::pinched_hemisphere:
        report.extra_names = {"radial_displacement", "normalized"};
        report.extra_is_error = {false, false};
        break;
    }

    BasisConfig bc;
    bc.blending.degree = config.blending_degree;
    bc.poly = config.poly;
    bc.ring_depth = config.ring_depth;
    const QuadRule rule = gauss_rule(config.gauss_n);

    for (int level = 0; level < config.refinements; ++level) {
        try {
            if (level > 0) mesh = catmull_clark_refine(mesh);
            double fit_rms = nan;
            if (const auto fp = fit_problem(p, mesh, config, bench)) {
                const FitResult fr = fit_to_target(ManifoldBasis(mesh, bc), *fp);
                mesh = mesh.with_positions(fr.positions);
                fit_rms = fr.final_rms;
            }
            const ManifoldBasis basis(mesh, bc);
            LevelOutput out = is_poisson(p)        ? solve_poisson(config, basis, rule, setup)
                              : p == Problem::ss_plate ? solve_plate(config, basis, rule, setup, bench)
                                                       : solve_pinched(config, p, basis, rule, setup, bench);
            if (p == Problem::poisson_circle) out.result.extra = {fit_rms};
            out.result.level = level;
            out.result.n_elems = static_cast<int>(domain_elements(mesh).size());
            out.result.h = max_element_diameter(mesh);
            report.levels.push_back(out.result);
            if (level + 1 == config.refinements && !config.vtk.empty()) {
                export_vtk(basis, out.field, is_poisson(p) ? "u" : "displacement", config.vtk_subdivision, config.vtk);
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw std::runtime_error("level " + std::to_string(level) + ": " + e.what());
        }
    }

    const int n = static_cast<int>(report.levels.size());
    report.fit_first = std::max(0, n - 3);
    report.fit_last = n - 1;
    std::vector<double> h, l2, h1;
    for (int i = report.fit_first; i < n; ++i) {
        h.push_back(report.levels[i].h);
        l2.push_back(report.levels[i].l2);
        h1.push_back(report.levels[i].h1_semi);
    }
    report.l2_slope = loglog_slope(h, l2);
    report.h1_slope = loglog_slope(h, h1);
    for (std::size_t k = 0; k < report.extra_names.size(); ++k) {
        if (!report.extra_is_error[k]) {
            report.extra_slopes.push_back(nan);
            continue;
        }
        std::vector<double> e;
        for (int i = report.fit_first; i < n; ++i) e.push_back(report.levels[i].extra[k]);
        report.extra_slopes.push_back(loglog_slope(h, e));
    }
    return report;
}

std::string report_csv(const ConvergenceReport& r)
{
    std::ostringstream os;
    os << "level,n_elems,n_dofs,h,L2,H1semi";
    for (const std::string& name : r.extra_names) os << ',' << name;
    os << '\n';
    for (const LevelResult& l : r.levels) {
        os << l.level << ',' << l.n_elems << ',' << l.n_dofs << ',' << number(l.h) << ',' << number(l.l2) << ','
           << number(l.h1_semi);
        for (double x : l.extra) os << ',' << number(x);
        os << '\n';
    }
    os << "# problem " << to_string(r.problem) << '\n';
    os << "# fit levels " << r.fit_first << '-' << r.fit_last << '\n';
    os << "# slope L2 " << number(r.l2_slope) << '\n';
    os << "# slope H1semi " << number(r.h1_slope) << '\n';
    for (std::size_t k = 0; k < r.extra_names.size(); ++k) {
        if (r.extra_is_error[k]) os << "# slope " << r.extra_names[k] << ' ' << number(r.extra_slopes[k]) << '\n';
    }
    return os.str();
}

std::string report_json(const ConvergenceReport& r)
{
    auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
    json j;
    j["problem"] = to_string(r.problem);
    j["fit_window"] = {r.fit_first, r.fit_last};
    j["slopes"] = {{"L2", num(r.l2_slope)}, {"H1semi", num(r.h1_slope)}};
    for (std::size_t k = 0; k < r.extra_names.size(); ++k) {
        if (r.extra_is_error[k]) j["slopes"][r.extra_names[k]] = num(r.extra_slopes[k]);
    }
    j["levels"] = json::array();
    for (const LevelResult& l : r.levels) {
        json row = {{"level", l.level}, {"n_elems", l.n_elems}, {"n_dofs", l.n_dofs},
                    {"h", l.h},         {"L2", num(l.l2)},      {"H1semi", num(l.h1_semi)}};
        for (std::size_t k = 0; k < r.extra_names.size(); ++k) row[r.extra_names[k]] = num(l.extra[k]);
        j["levels"].push_back(row);
    }
    return j.dump(2);
}

} // namespace miga
