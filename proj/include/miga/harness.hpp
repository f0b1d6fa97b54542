#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "miga/basis_table.hpp"
#include "miga/polynomial.hpp"
#include "miga/shell.hpp"

namespace miga {

/// Invalid or inconsistent run configuration (CLI exit status 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Problem {
    poisson_structured,   // cos(4 pi x) cos(4 pi y) on the unit square
    poisson_unstructured, // sin(4 pi x) sin(4 pi y) on the unstructured square
    poisson_circle,       // sin(4 pi x) sin(4 pi y) on the disk of radius 0.5
    ss_plate,             // simply supported plate under uniform pressure
    pinched_cylinder,
    pinched_hemisphere,
};
std::string to_string(Problem p);
Problem parse_problem(const std::string& name);
bool is_shell(Problem p);

/// Geometry, material, load and normalisation of a plate or shell benchmark.
struct ShellBenchmark {
    double radius = 0.0;
    double length = 0.0;
    ShellMaterial material;
    double load = 0.0;      // point force magnitude, or pressure for the plate
    double reference = 0.0; // normalisation constant
};
ShellBenchmark default_benchmark(Problem p);
/// Reads {"radius", "length", "material": {"E", "nu", "thickness"}, "load", "reference"} on top
/// of the defaults of `p`.
ShellBenchmark load_benchmark(Problem p, const std::filesystem::path& path);

struct RunConfig {
    Problem problem = Problem::poisson_structured;
    std::string mesh;        // OBJ path or generator spec; empty selects the problem default
    int blending_degree = 3; // 1, 2 or 3
    PolySpec poly;
    int ring_depth = 1;
    int gauss_n = 9;
    std::optional<double> penalty; // factor c in beta = c E / h^k; default 1e4 (Poisson), 1e3 (plate)
    int refinements = 4;           // number of levels, including the base mesh
    int fit_samples = 4;
    int fit_iterations = 4;
    bool parallel = true;
    std::string problem_file; // optional benchmark definition
    std::string csv;
    std::string json;
    std::string vtk;
    int vtk_subdivision = 2;

    /// Throws ConfigError on invalid values, missing files or inconsistent combinations.
    void validate() const;
    [[nodiscard]] Execution execution() const { return parallel ? Execution::parallel : Execution::serial; }
};

/// Reads a JSON configuration on top of the defaults; unknown keys are errors.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& json_text);
std::string config_to_json(const RunConfig& config);

/// Control mesh named by `spec`: an OBJ path or one of structured-square[:n],
/// unstructured-square, disk, cylinder[:circ x axial], cylinder-unstructured[:circ x axial],
/// hemisphere[:n]. Shell generators use the benchmark geometry.
ControlMesh make_mesh(const std::string& spec, Problem problem, const ShellBenchmark& bench);
std::string default_mesh(Problem p);

struct LevelResult {
    int level = 0;
    int n_elems = 0;
    int n_dofs = 0;
    double h = 0.0;
    double l2 = 0.0; // NaN where no exact field exists
    double h1_semi = 0.0;
    std::vector<double> extra;
};

struct ConvergenceReport {
    Problem problem = Problem::poisson_structured;
    std::vector<std::string> extra_names;
    std::vector<bool> extra_is_error; // extras that get a fitted slope
    std::vector<LevelResult> levels;
    int fit_first = 0; // fitted level window [fit_first, fit_last]
    int fit_last = -1;
    double l2_slope = 0.0;
    double h1_slope = 0.0;
    std::vector<double> extra_slopes; // NaN for extras without slope
};

/// Least-squares slope of log(e) against log(h).
double loglog_slope(const std::vector<double>& h, const std::vector<double>& e);

/// Runs every level: ghosting, boundary or surface fitting where the geometry is curved,
/// assembly, solve and measurement. Stage errors are rethrown with the level prepended.
ConvergenceReport run_convergence(const RunConfig& config);

/// Fixed columns level, n_elems, n_dofs, h, L2, H1semi, then the extras; slope footer lines
/// start with '#'.
std::string report_csv(const ConvergenceReport& report);
std::string report_json(const ConvergenceReport& report);

} // namespace miga
