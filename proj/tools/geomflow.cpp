#include "geomflow/experiments.hpp"
#include "geomflow/io.hpp"
#include "geomflow/run.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

using namespace geomflow;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_solver = 2;
constexpr int exit_quality = 3;
constexpr int exit_check_failed = 4;

std::string frame_path(const std::string& dir, int step, const char* ext)
{
    char name[64];
    std::snprintf(name, sizeof name, "frame_%06d.%s", step, ext);
    return (std::filesystem::path(dir) / "frames" / name).string();
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides)
{
    RunConfig cfg;
    Mesh initial;
    try {
        cfg = read_config(config_path, overrides);
        initial = initial_mesh(cfg);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
    std::filesystem::create_directories(cfg.output_dir);

    const StepHook hook = [&](const DiagnosticsRecord& rec, const Mesh& mesh, const StepSolution* step) {
        if (rec.step % cfg.frame_every != 0) return;
        MeshFields fields;
        if (step) {
            fields.lambda = step->lambda;
            fields.v = step->v;
            fields.T = step->tangential.T;
        }
        if (cfg.formats.count(OutputFormat::obj)) write_mesh(mesh, frame_path(cfg.output_dir, rec.step, "obj"), MeshFormat::obj);
        if (cfg.formats.count(OutputFormat::vtk)) write_mesh(mesh, frame_path(cfg.output_dir, rec.step, "vtk"), MeshFormat::vtk, fields);
    };

    RunResult result;
    try {
        result = run_flow(initial, cfg.scheme, {cfg.t_end, cfg.max_steps, cfg.quality_floor}, hook);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
    if (cfg.formats.count(OutputFormat::csv)) {
        write_series(result.records, (std::filesystem::path(cfg.output_dir) / "series.csv").string());
    }

    const DiagnosticsRecord& last = result.records.back();
    std::cout << "status " << to_string(result.status) << '\n'
              << "steps " << last.step << '\n'
              << "t " << format_double(last.t) << '\n'
              << "area " << format_double(last.area) << '\n'
              << "energy " << format_double(last.energy) << '\n'
              << "T_norm " << format_double(last.T_norm) << '\n'
              << "edge_ratio " << format_double(last.quality.edge_ratio) << '\n';
    if (result.status == RunStatus::completed) return exit_ok;
    std::cerr << to_string(result.status) << " at step " << result.failed_step << ": " << result.message << '\n';
    return result.status == RunStatus::solver_failure ? exit_solver : exit_quality;
}

int cmd_convergence(const std::string& config_path, const std::vector<std::string>& overrides, const std::string& axis_name, int levels, int jobs)
{
    RunConfig cfg;
    try {
        cfg = read_config(config_path, overrides);
        if (!cfg.reference) throw ConfigError("convergence needs a [reference] section");
        if (levels < 3) throw ConfigError("convergence needs at least 3 levels");
        if (axis_name == "space" && !cfg.shape) throw ConfigError("space refinement needs a [shape] section");
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
    const Axis axis = axis_name == "space" ? Axis::space : Axis::time;
    const SweepResult sweep = convergence_sweep(cfg, axis, levels, jobs);
    std::filesystem::create_directories(cfg.output_dir);
    write_convergence(sweep.table, (std::filesystem::path(cfg.output_dir) / ("convergence_" + axis_name + ".csv")).string());
    std::cout << (axis == Axis::space ? "h" : "tau") << ",error,status\n";
    bool failed = false;
    for (const auto& run : sweep.runs) {
        std::cout << format_double(run.parameter) << ',' << format_double(run.error) << ',' << to_string(run.status) << '\n';
        failed = failed || run.status == RunStatus::solver_failure;
    }
    std::cout << "fitted order " << format_double(sweep.table.fitted_order) << '\n';
    return failed ? exit_solver : exit_ok;
}

int cmd_meshgen(const std::string& kind_name, const std::vector<double>& dims, int level, int nodes, int triangles,
                double radius, double h, bool open, const std::string& profile, double noise, std::uint64_t seed,
                const std::string& out)
{
    try {
        std::string kind = kind_name;
        std::replace(kind.begin(), kind.end(), '-', '_');
        ShapeSpec s;
        s.kind = shape_kind_from_string(kind);
        s.radius = radius;
        s.level = level;
        s.nodes = nodes;
        s.h = h;
        s.open = open;
        s.noise = noise;
        s.seed = seed;
        s.profile = profile_from_string(profile);
        if (s.kind == ShapeKind::torus_perturbed) {
            s.triangles = triangles > 0 ? triangles : 2 * static_cast<int>(std::lround(750.0 * std::pow(4.0, level - 2)));
        }
        if (!dims.empty()) {
            if (s.kind != ShapeKind::box || dims.size() != 3) throw InvalidShape("dimensions take three values and apply to boxes only");
            s.dims = Vec3(dims[0], dims[1], dims[2]);
        }
        const Mesh mesh = generate(s);
        write_mesh(mesh, out, mesh_format_from_path(out));
        std::cout << mesh.num_vertices() << " vertices, " << mesh.num_elements() << " elements -> " << out << '\n';
    } catch (const std::exception& e) {
        std::cerr << "meshgen: " << e.what() << '\n';
        return exit_config;
    }
    return exit_ok;
}

int cmd_experiments(const std::string& which, const std::string& scale, int jobs, const std::string& out)
{
    std::vector<ExperimentId> ids;
    ExperimentContext ctx;
    try {
        ctx.scale = scale_from_string(scale);
        ids = which == "all" ? all_experiments() : std::vector<ExperimentId>{experiment_from_string(which)};
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return exit_config;
    }
    ctx.jobs = jobs;
    ctx.output_dir = out;
    bool ok = true;
    for (ExperimentId id : ids) {
        const ExperimentReport report = reproduce(id, ctx);
        std::cout << format_report(report) << std::flush;
        ok = ok && report.passed();
    }
    return ok ? exit_ok : exit_check_failed;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Parametric finite element solver for mean curvature flow and surface diffusion"};
    app.require_subcommand(1);
    int jobs = default_jobs();

    std::string config_path;
    std::vector<std::string> overrides;
    auto* run = app.add_subcommand("run", "Run a flow from a config file");
    run->add_option("--config,-c", config_path, "Config file")->required();
    run->add_option("--set", overrides, "Override a key, section.key=value");

    std::string axis = "space";
    int levels = 4;
    auto* conv = app.add_subcommand("convergence", "Refinement sweep against the configured exact reference");
    conv->add_option("--config,-c", config_path, "Config file")->required();
    conv->add_option("--set", overrides, "Override a key, section.key=value");
    conv->add_option("--axis", axis, "space or time")->check(CLI::IsMember({"space", "time"}));
    conv->add_option("--levels", levels, "Number of refinement levels");
    conv->add_option("--jobs,-j", jobs, "Parallel runs (default GEOMFLOW_JOBS or 1)")->check(CLI::PositiveNumber);

    std::string kind;
    std::vector<double> dims;
    int level = 2, nodes = 64, triangles = 0;
    double radius = 1.0, h = 0.2, noise = 0.0;
    bool open = false;
    std::string profile = "uniform";
    std::uint64_t seed = 0;
    std::string out;
    auto* gen = app.add_subcommand("meshgen", "Write a generated initial mesh");
    gen->add_option("shape", kind, "circle, half-circle, polygon, grim-reaper, sphere, half-sphere, torus-perturbed, dumbbell, box")->required();
    gen->add_option("dims", dims, "Box edge lengths x y z");
    gen->add_option("--level", level, "Subdivision level (spheres, dumbbell); torus size 1500 * 4^(level-2) triangles");
    gen->add_option("--nodes", nodes, "Curve element count");
    gen->add_option("--triangles", triangles, "Torus triangle count");
    gen->add_option("--radius", radius, "Radius");
    gen->add_option("--mesh-size", h, "Box mesh size");
    gen->add_flag("--open", open, "Box without bottom face, standing on z = 0");
    gen->add_option("--profile", profile, "uniform, graded_left, graded_ends");
    gen->add_option("--noise", noise, "Relative radial noise (polygon, sphere)");
    gen->add_option("--seed", seed, "Noise seed");
    gen->add_option("-o,--output", out, "Output path (.obj, .off, .vtk)")->required();

    auto* exps = app.add_subcommand("experiments", "Reproduction experiments");
    exps->require_subcommand(1);
    std::string which;
    std::string scale = "desk";
    std::string exp_out = "experiments_out";
    auto* exp_run = exps->add_subcommand("run", "Run one experiment id or 'all'");
    exp_run->add_option("id", which, "Experiment id or all")->required();
    exp_run->add_option("--scale", scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
    exp_run->add_option("--jobs,-j", jobs, "Parallel runs (default GEOMFLOW_JOBS or 1)")->check(CLI::PositiveNumber);
    exp_run->add_option("-o,--output", exp_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_config;
    }

    if (*run) return cmd_run(config_path, overrides);
    if (*conv) return cmd_convergence(config_path, overrides, axis, levels, jobs);
    if (*gen) return cmd_meshgen(kind, dims, level, nodes, triangles, radius, h, open, profile, noise, seed, out);
    if (*exp_run) return cmd_experiments(which, scale, jobs, exp_out);
    return exit_config;
}
