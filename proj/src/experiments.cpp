#include "geomflow/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace geomflow {

void parallel_for(int count, int jobs, const std::function<void(int)>& fn)
{
    if (count <= 0) return;
    const int workers = std::clamp(jobs, 1, count);
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

int default_jobs()
{
    if (const char* env = std::getenv("GEOMFLOW_JOBS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
        }
    }
    return 1;
}

const char* to_string(Axis a) { return a == Axis::space ? "space" : "time"; }

const char* to_string(Scale s) { return s == Scale::desk ? "desk" : "paper"; }

Scale scale_from_string(const std::string& s)
{
    if (s == "desk") return Scale::desk;
    if (s == "paper") return Scale::paper;
    throw std::invalid_argument("scale must be desk or paper");
}

// ---- sweeps ------------------------------------------------------------------

SweepRun run_against_reference(const RunConfig& config, const ExactReference& ref)
{
    const Mesh initial = initial_mesh(config);
    SweepRun out;
    const RunOptions options{config.t_end, config.max_steps, config.quality_floor};
    const RunResult result = run_flow(initial, config.scheme, options, [&](const DiagnosticsRecord& rec, const Mesh& mesh, const StepSolution*) {
        out.error = std::max(out.error, exact_distance(mesh, ref, rec.t));
        out.max_nodal = std::max(out.max_nodal, max_nodal_distance(mesh, ref, rec.t));
        if (std::isfinite(rec.c)) out.max_abs_c = std::max(out.max_abs_c, std::abs(rec.c));
    });
    out.status = result.status;
    out.message = result.message;
    out.parameter = quality_metrics(initial).max_edge;
    return out;
}

namespace {

RunConfig refine(const RunConfig& base, Axis axis, int level)
{
    RunConfig cfg = base;
    if (axis == Axis::time) {
        const double factor = std::ldexp(1.0, -level);
        for (auto& seg : cfg.scheme.tau_schedule) seg.tau *= factor;
        return cfg;
    }
    if (!cfg.shape) throw std::invalid_argument("space refinement needs a generated shape");
    ShapeSpec& s = *cfg.shape;
    switch (s.kind) {
    case ShapeKind::circle:
    case ShapeKind::half_circle:
    case ShapeKind::polygon:
    case ShapeKind::grim_reaper: s.nodes <<= level; break;
    case ShapeKind::sphere:
    case ShapeKind::half_sphere:
    case ShapeKind::dumbbell: s.level += level; break;
    case ShapeKind::box: s.h = std::ldexp(s.h, -level); break;
    case ShapeKind::torus_perturbed: s.triangles = (s.triangles == 0 ? 1500 : s.triangles) << (2 * level); break;
    }
    return cfg;
}

} // namespace

SweepResult convergence_sweep(const RunConfig& base, Axis axis, int levels, int jobs)
{
    if (!base.reference) throw std::invalid_argument("convergence sweep needs an exact reference");
    if (levels < 1) throw std::invalid_argument("need at least one level");
    SweepResult result;
    result.runs.resize(static_cast<std::size_t>(levels));
    parallel_for(levels, jobs, [&](int i) {
        const RunConfig cfg = refine(base, axis, i);
        SweepRun run = run_against_reference(cfg, *base.reference);
        if (axis == Axis::time) run.parameter = cfg.scheme.tau_schedule.front().tau;
        result.runs[static_cast<std::size_t>(i)] = run;
    });
    std::vector<ConvergenceRow> rows;
    for (const auto& r : result.runs) rows.push_back({r.parameter, r.error});
    if (rows.size() >= 3) {
        result.table = fit_order(rows);
    } else {
        result.table.rows = rows;
        result.table.fitted_order = std::numeric_limits<double>::quiet_NaN();
    }
    return result;
}

// ---- criteria -----------------------------------------------------------------

double worst_energy_increase(const std::vector<DiagnosticsRecord>& records)
{
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < records.size(); ++i) {
        const double prev = records[i - 1].energy;
        worst = std::max(worst, (records[i].energy - prev) / std::abs(prev));
    }
    return worst;
}

namespace {

constexpr double energy_tol = 1e-10;

std::string fmt(double x)
{
    std::ostringstream s;
    s.precision(4);
    s << x;
    return s.str();
}

RunConfig shape_config(const ShapeSpec& shape, const SchemeConfig& scheme, double t_end, std::optional<int> max_steps = {})
{
    RunConfig cfg;
    cfg.shape = shape;
    cfg.scheme = scheme;
    cfg.t_end = t_end;
    cfg.max_steps = max_steps;
    return cfg;
}

SchemeConfig scheme(Flow flow, Geometry geometry, double tau, Method method = Method::bgn_mdr)
{
    SchemeConfig s;
    s.flow = flow;
    s.geometry = geometry;
    s.method = method;
    s.tau_schedule = {{0.0, tau}};
    return s;
}

RunResult run_config(const RunConfig& cfg, const ExperimentContext& ctx, const std::string& name, const StepHook& hook = {})
{
    const Mesh initial = initial_mesh(cfg);
    RunResult r = run_flow(initial, cfg.scheme, {cfg.t_end, cfg.max_steps, cfg.quality_floor}, hook);
    if (!ctx.output_dir.empty()) write_series(r.records, (std::filesystem::path(ctx.output_dir) / (name + ".csv")).string());
    return r;
}

std::string run_summary(const RunResult& r)
{
    return std::string(to_string(r.status)) + " after " + std::to_string(r.records.size() - 1) + " steps";
}

ShapeSpec torus_shape(Scale scale)
{
    ShapeSpec s;
    s.kind = ShapeKind::torus_perturbed;
    s.triangles = scale == Scale::desk ? 1500 : 5592;
    return s;
}

ShapeSpec box_shape(Vec3 dims, bool open, double h)
{
    ShapeSpec s;
    s.kind = ShapeKind::box;
    s.dims = dims;
    s.open = open;
    s.h = h;
    return s;
}

// Runs whose energy must not increase; a clean halt on the quality floor
// still counts when every accepted step was monotone.
struct EnergyRun {
    std::string name;
    RunConfig config;
    RunResult result;
    double worst = 0.0;
};

bool energy_ok(const EnergyRun& r)
{
    return r.result.status != RunStatus::solver_failure && r.result.records.size() > 1 && r.worst <= energy_tol;
}

void run_energy(std::vector<EnergyRun>& runs, const ExperimentContext& ctx)
{
    parallel_for(static_cast<int>(runs.size()), ctx.jobs, [&](int i) {
        auto& r = runs[static_cast<std::size_t>(i)];
        r.result = run_config(r.config, ctx, r.name);
        r.worst = worst_energy_increase(r.result.records);
    });
}

CriterionResult energy_result(int criterion, const std::string& name, const std::vector<EnergyRun>& runs)
{
    CriterionResult c{criterion, name, true, {}};
    for (const auto& r : runs) {
        c.pass = c.pass && energy_ok(r);
        if (!c.detail.empty()) c.detail += "; ";
        c.detail += r.name + ": worst rel increase " + fmt(r.worst) + ", " + run_summary(r.result);
    }
    return c;
}

} // namespace

CriterionResult check_closed_energy(const ExperimentContext& ctx)
{
    std::vector<EnergyRun> runs;
    for (double tau : {1e-2, 1e-3, 1e-4}) {
        runs.push_back({"torus_mcf_tau" + fmt(tau), shape_config(torus_shape(ctx.scale), scheme(Flow::mcf, Geometry::closed, tau), 1e9, 100), {}, 0.0});
    }
    run_energy(runs, ctx);
    return energy_result(2, "closed_energy_torus_mcf", runs);
}

CriterionResult check_box_sd_energy(const ExperimentContext& ctx)
{
    std::vector<EnergyRun> runs;
    const ShapeSpec box = box_shape(Vec3(1, 6, 1), false, 0.2);
    for (Method m : {Method::bgn_mdr, Method::bgn}) {
        runs.push_back({std::string("box161_sd_") + to_string(m), shape_config(box, scheme(Flow::sd, Geometry::closed, 1e-2, m), 1e9, ctx.scale == Scale::desk ? 100 : 300), {}, 0.0});
    }
    run_energy(runs, ctx);
    return energy_result(2, "closed_energy_box161_sd", runs);
}

CriterionResult check_open_curve_energy(const ExperimentContext& ctx)
{
    std::vector<EnergyRun> runs;
    ShapeSpec hc;
    hc.kind = ShapeKind::half_circle;
    hc.nodes = ctx.scale == Scale::desk ? 64 : 128;
    for (double sigma : {0.0, 0.5, -0.5}) {
        SchemeConfig s = scheme(Flow::sd, Geometry::open2d, 1e-3);
        s.sigma = sigma;
        runs.push_back({"half_circle_sd_sigma" + fmt(sigma), shape_config(hc, s, 0.2), {}, 0.0});
    }
    run_energy(runs, ctx);
    return energy_result(3, "open_energy_half_circle_sd", runs);
}

namespace {

// Max over steps of |contact-line work - (|S_1^m| - |S_1^{m-1}|)| / area.
struct IdentityTracker {
    double worst = 0.0;
    std::optional<double> prev;

    void operator()(const DiagnosticsRecord& rec, const Mesh&, const StepSolution* step)
    {
        if (step && step->contact_line_work && prev && rec.substrate_area) {
            const double diff = *rec.substrate_area - *prev;
            worst = std::max(worst, std::abs(*step->contact_line_work - diff) / rec.area);
        }
        prev = rec.substrate_area;
    }
};

} // namespace

CriterionResult check_open_box(const ExperimentContext& ctx, std::vector<CriterionResult>* extra)
{
    struct BoxRun {
        double theta_deg;
        RunResult result;
        double worst = 0.0;
        IdentityTracker identity;
    };
    std::vector<BoxRun> runs{{60.0, {}, 0.0, {}}, {120.0, {}, 0.0, {}}};
    const ShapeSpec box = box_shape(Vec3(1, 6, 1), true, 0.2);
    parallel_for(2, ctx.jobs, [&](int i) {
        auto& r = runs[static_cast<std::size_t>(i)];
        SchemeConfig s = scheme(Flow::sd, Geometry::open3d, 1e-2);
        s.alpha = 0.01;
        s.sigma = std::cos(r.theta_deg * std::numbers::pi / 180.0);
        const RunConfig cfg = shape_config(box, s, ctx.scale == Scale::desk ? 0.5 : 2.0);
        IdentityTracker& tracker = r.identity;
        r.result = run_config(cfg, ctx, "open_box_sd_theta" + fmt(r.theta_deg), [&tracker](const DiagnosticsRecord& rec, const Mesh& m, const StepSolution* st) { tracker(rec, m, st); });
        r.worst = worst_energy_increase(r.result.records);
    });
    CriterionResult energy{3, "open_energy_box_sd", true, {}};
    CriterionResult identity{4, "substrate_identity_box_sd", true, {}};
    for (const auto& r : runs) {
        const bool ok = r.result.status != RunStatus::solver_failure && r.result.records.size() > 1 && r.worst <= energy_tol;
        energy.pass = energy.pass && ok;
        identity.pass = identity.pass && r.result.records.size() > 1 && r.identity.worst <= 1e-12;
        const std::string tag = "theta " + fmt(r.theta_deg);
        energy.detail += (energy.detail.empty() ? "" : "; ") + tag + ": worst rel increase " + fmt(r.worst) + ", " + run_summary(r.result);
        identity.detail += (identity.detail.empty() ? "" : "; ") + tag + ": max scaled mismatch " + fmt(r.identity.worst);
    }
    if (extra) extra->push_back(identity);
    return energy;
}

CriterionResult check_half_circle_convergence(const ExperimentContext& ctx)
{
    ShapeSpec hc;
    hc.kind = ShapeKind::half_circle;
    RunConfig base = shape_config(hc, scheme(Flow::mcf, Geometry::open2d, 1e-5), 0.2);
    base.reference = ExactReference{ReferenceKind::shrinking_half_circle, 1.0};
    const int levels = ctx.scale == Scale::desk ? 4 : 5;

    RunConfig space = base;
    space.shape->nodes = 16;
    RunConfig time = base;
    time.shape->nodes = 512;
    time.scheme.tau_schedule = {{0.0, 4e-3}};

    const SweepResult s = convergence_sweep(space, Axis::space, levels, ctx.jobs);
    const SweepResult t = convergence_sweep(time, Axis::time, levels, ctx.jobs);
    if (!ctx.output_dir.empty()) {
        write_convergence(s.table, (std::filesystem::path(ctx.output_dir) / "half_circle_space.csv").string());
        write_convergence(t.table, (std::filesystem::path(ctx.output_dir) / "half_circle_time.csv").string());
    }
    return {5, "half_circle_convergence", s.table.fitted_order >= 1.7 && t.table.fitted_order >= 0.8,
            "space order " + fmt(s.table.fitted_order) + ", time order " + fmt(t.table.fitted_order)};
}

CriterionResult check_half_sphere_convergence(const ExperimentContext& ctx)
{
    ShapeSpec hs;
    hs.kind = ShapeKind::half_sphere;
    RunConfig base = shape_config(hs, scheme(Flow::mcf, Geometry::open3d, 1e-4), 0.1);
    base.reference = ExactReference{ReferenceKind::shrinking_half_sphere, 1.0};
    const int levels = 4;

    RunConfig space = base;
    space.shape->level = 1;
    RunConfig time = base;
    time.shape->level = ctx.scale == Scale::desk ? 4 : 5;
    time.scheme.tau_schedule = {{0.0, 1e-2}};

    const SweepResult s = convergence_sweep(space, Axis::space, levels, ctx.jobs);
    const SweepResult t = convergence_sweep(time, Axis::time, levels, ctx.jobs);
    if (!ctx.output_dir.empty()) {
        write_convergence(s.table, (std::filesystem::path(ctx.output_dir) / "half_sphere_space.csv").string());
        write_convergence(t.table, (std::filesystem::path(ctx.output_dir) / "half_sphere_time.csv").string());
    }
    return {6, "half_sphere_convergence", s.table.fitted_order >= 1.7 && t.table.fitted_order >= 0.8,
            "space order " + fmt(s.table.fitted_order) + ", time order " + fmt(t.table.fitted_order)};
}

CriterionResult check_grim_reaper(const ExperimentContext& ctx)
{
    ShapeSpec gr;
    gr.kind = ShapeKind::grim_reaper;
    gr.nodes = 30;
    SchemeConfig s = scheme(Flow::mcf, Geometry::open2d, 1e-3);
    s.sigma = std::sqrt(0.5);
    RunConfig single = shape_config(gr, s, 0.2);
    const ExactReference ref{ReferenceKind::grim_reaper_translate, 1.0};
    const SweepRun one = run_against_reference(single, ref);

    RunConfig space = single;
    space.reference = ref;
    space.shape->nodes = 8;
    space.scheme.tau_schedule = {{0.0, 1e-5}};
    const SweepResult sweep = convergence_sweep(space, Axis::space, ctx.scale == Scale::desk ? 4 : 5, ctx.jobs);
    if (!ctx.output_dir.empty()) {
        write_convergence(sweep.table, (std::filesystem::path(ctx.output_dir) / "grim_reaper_space.csv").string());
    }
    const bool pass = one.status == RunStatus::completed && one.max_nodal <= 5e-3 && sweep.table.fitted_order >= 1.7;
    return {7, "grim_reaper", pass,
            "max nodal deviation " + fmt(one.max_nodal) + " (31 nodes, tau 1e-3), space order " + fmt(sweep.table.fitted_order)};
}

CriterionResult check_formulation_equivalence(const ExperimentContext& ctx)
{
    const Mesh torus = generate(torus_shape(ctx.scale));
    double worst_reduced = 0.0;
    double limit_default = 0.0;
    std::string limits;
    for (double tau : {1e-2, 1e-3, 1e-4}) {
        SchemeConfig mono = scheme(Flow::mcf, Geometry::closed, tau);
        SchemeConfig red = mono;
        red.formulation = Formulation::reduced;
        const StepSolution a = advance(torus, mono, tau);
        const StepSolution b = advance(torus, red, tau);
        worst_reduced = std::max(worst_reduced, (a.v - b.v).norm() / a.v.norm());

        SchemeConfig stiff = mono;
        stiff.alpha = 1e8;
        const StepSolution c = advance(torus, stiff, tau);
        const StepSolution d = step_bgn(torus, mono, tau);
        const double gap = (c.v - d.v).norm() / d.v.norm();
        if (tau == SchemeConfig{}.tau_schedule.front().tau) limit_default = gap;
        limits += (limits.empty() ? "" : ", ") + std::string("tau ") + fmt(tau) + ": " + fmt(gap);
    }
    // The gap to the baseline scales like 1 / (alpha tau); the bound is checked at the default step size.
    return {8, "formulation_equivalence", worst_reduced <= 1e-9 && limit_default <= 1e-6,
            "monolithic vs reduced " + fmt(worst_reduced) + "; alpha 1e8 vs bgn at default tau " + fmt(limit_default) +
                " (" + limits + ")"};
}

CriterionResult check_c_vanishing(const ExperimentContext& ctx)
{
    ShapeSpec hc;
    hc.kind = ShapeKind::half_circle;
    hc.nodes = 16;
    RunConfig base = shape_config(hc, scheme(Flow::mcf, Geometry::open2d, 1e-3), 0.2);
    base.reference = ExactReference{ReferenceKind::shrinking_half_circle, 1.0};
    const SweepResult sweep = convergence_sweep(base, Axis::space, ctx.scale == Scale::desk ? 3 : 4, ctx.jobs);
    bool pass = true;
    std::string detail = "max |c|:";
    for (std::size_t i = 0; i < sweep.runs.size(); ++i) {
        detail += " " + fmt(sweep.runs[i].max_abs_c);
        if (i > 0 && !(sweep.runs[i].max_abs_c < sweep.runs[i - 1].max_abs_c)) pass = false;
        if (sweep.runs[i].status != RunStatus::completed) pass = false;
    }
    return {9, "c_vanishing", pass, detail};
}

CriterionResult check_mesh_quality(const ExperimentContext& ctx)
{
    std::vector<RunResult> results(2);
    const Method methods[2] = {Method::bgn_mdr, Method::bgn};
    parallel_for(2, ctx.jobs, [&](int i) {
        const RunConfig cfg = shape_config(torus_shape(ctx.scale), scheme(Flow::mcf, Geometry::closed, 1e-4, methods[i]), 1e9, 500);
        results[static_cast<std::size_t>(i)] = run_config(cfg, ctx, std::string("torus_quality_") + to_string(methods[i]));
    });
    const double initial = results[0].records.front().quality.edge_ratio;
    const double mdr = results[0].records.back().quality.edge_ratio;
    const double bgn = results[1].records.back().quality.edge_ratio;
    const bool pass = results[0].status == RunStatus::completed && mdr <= 3.0 * initial && mdr < bgn;
    return {10, "mesh_quality_torus", pass,
            "edge ratio initial " + fmt(initial) + ", bgn_mdr final " + fmt(mdr) + " (" + run_summary(results[0]) +
                "), bgn final " + fmt(bgn) + " (" + run_summary(results[1]) + ")"};
}

// ---- experiments ----------------------------------------------------------------

const char* to_string(ExperimentId id)
{
    switch (id) {
    case ExperimentId::ex2_1_torus: return "ex2_1_torus";
    case ExperimentId::ex2_2_dumbbell: return "ex2_2_dumbbell";
    case ExperimentId::ex2_3_box161: return "ex2_3_box161";
    case ExperimentId::ex2_5_box181_pinch: return "ex2_5_box181_pinch";
    case ExperimentId::ex3_1_grim_reaper: return "ex3_1_grim_reaper";
    case ExperimentId::ex3_2_half_circle: return "ex3_2_half_circle";
    case ExperimentId::ex3_3_half_sphere: return "ex3_3_half_sphere";
    case ExperimentId::ex3_4_box_contact: return "ex3_4_box_contact";
    }
    return "?";
}

std::vector<ExperimentId> all_experiments()
{
    return {ExperimentId::ex2_1_torus,       ExperimentId::ex2_2_dumbbell,    ExperimentId::ex2_3_box161,
            ExperimentId::ex2_5_box181_pinch, ExperimentId::ex3_1_grim_reaper, ExperimentId::ex3_2_half_circle,
            ExperimentId::ex3_3_half_sphere,  ExperimentId::ex3_4_box_contact};
}

ExperimentId experiment_from_string(const std::string& s)
{
    for (ExperimentId id : all_experiments()) {
        if (s == to_string(id)) return id;
    }
    throw std::invalid_argument("unknown experiment '" + s + "'");
}

bool ExperimentReport::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const CriterionResult& c) { return c.pass; });
}

namespace {

void dumbbell(const ExperimentContext& ctx, ExperimentReport& report)
{
    ShapeSpec shape;
    shape.kind = ShapeKind::dumbbell;
    shape.level = ctx.scale == Scale::desk ? 4 : 5;
    const double t_switch = 0.0908;
    const double tau2 = 2e-7;
    std::vector<EnergyRun> runs;
    for (Method m : {Method::bgn_mdr, Method::bgn}) {
        SchemeConfig s = scheme(Flow::mcf, Geometry::closed, 1e-4, m);
        s.tau_schedule.push_back({t_switch, tau2});
        s.compensation = Compensation{t_switch};
        s.formulation = Formulation::reduced;
        const double t_end = t_switch + (ctx.scale == Scale::desk ? 500 : 5000) * tau2;
        runs.push_back({std::string("dumbbell_mcf_") + to_string(m), shape_config(shape, s, t_end), {}, 0.0});
    }
    run_energy(runs, ctx);
    report.checks.push_back(energy_result(2, "closed_energy_dumbbell_mcf", runs));
    for (const auto& r : runs) {
        const double t_last = r.result.records.back().t;
        report.findings.push_back(
            r.name + ": reached t = " + fmt(t_last) + (t_last > t_switch ? " (past the step-size switch)" : " (stopped before the switch)") +
            ", final T_norm " + fmt(r.result.records.back().T_norm) + ", final edge ratio " + fmt(r.result.records.back().quality.edge_ratio));
    }
}

// Largest distance from the long axis among vertices near the middle of the bar.
double neck_radius(const Mesh& mesh)
{
    double r = std::numeric_limits<double>::infinity();
    for (const Vec3& x : mesh.vertices()) {
        if (std::abs(x.y()) < 1.0) r = std::min(r, std::hypot(x.x(), x.z()));
    }
    return r;
}

void pinch(const ExperimentContext& ctx, ExperimentReport& report)
{
    const ShapeSpec box = box_shape(Vec3(1, 8, 1), false, ctx.scale == Scale::desk ? 0.25 : 0.2);
    std::vector<EnergyRun> runs;
    for (Method m : {Method::bgn_mdr, Method::bgn}) {
        runs.push_back({std::string("box181_sd_") + to_string(m), shape_config(box, scheme(Flow::sd, Geometry::closed, 1e-3, m), 0.6), {}, 0.0});
    }
    run_energy(runs, ctx);

    // Breakdown is expected once the neck closes; the energy must still decrease on every accepted step.
    CriterionResult check{2, "closed_energy_box181_sd", true, {}};
    const double neck0 = neck_radius(generate(box));
    for (const auto& r : runs) {
        const double neck = neck_radius(r.result.final_mesh);
        const bool pinched = neck < 0.1 * neck0;
        const bool ok = r.result.records.size() > 1 && r.worst <= energy_tol &&
                        (r.result.status == RunStatus::completed || pinched);
        check.pass = check.pass && ok;
        if (!check.detail.empty()) check.detail += "; ";
        check.detail += r.name + ": worst rel increase " + fmt(r.worst) + ", " + run_summary(r.result) + ", neck radius " +
                        fmt(neck0) + " -> " + fmt(neck);
        report.findings.push_back(
            r.name + ": " + run_summary(r.result) + " at t = " + fmt(r.result.records.back().t) +
            (pinched ? " with the neck closed" : "") + ", final T_norm " + fmt(r.result.records.back().T_norm) +
            ", final edge ratio " + fmt(r.result.records.back().quality.edge_ratio) +
            (r.result.message.empty() ? "" : " (" + r.result.message + ")"));
    }
    report.checks.push_back(check);
}

void box_contact_small_tau(const ExperimentContext& ctx, ExperimentReport& report)
{
    const ShapeSpec box = box_shape(Vec3(1, 6, 1), true, 0.2);
    std::vector<RunResult> results(4);
    const double thetas[2] = {60.0, 120.0};
    const Method methods[2] = {Method::bgn_mdr, Method::bgn};
    parallel_for(4, ctx.jobs, [&](int i) {
        SchemeConfig s = scheme(Flow::sd, Geometry::open3d, 1e-3, methods[i % 2]);
        s.alpha = 0.01;
        s.sigma = std::cos(thetas[i / 2] * std::numbers::pi / 180.0);
        const RunConfig cfg = shape_config(box, s, ctx.scale == Scale::desk ? 0.3 : 2.0);
        results[static_cast<std::size_t>(i)] =
            run_config(cfg, ctx, "open_box_small_tau_theta" + fmt(thetas[i / 2]) + "_" + to_string(methods[i % 2]));
    });
    for (int i = 0; i < 4; ++i) {
        const auto& r = results[static_cast<std::size_t>(i)];
        report.findings.push_back(
            std::string("theta ") + fmt(thetas[i / 2]) + " " + to_string(methods[i % 2]) + " tau 1e-3: " + run_summary(r) +
            " at t = " + fmt(r.records.back().t) + ", edge ratio " + fmt(r.records.front().quality.edge_ratio) + " -> " +
            fmt(r.records.back().quality.edge_ratio) + ", min angle " + fmt(r.records.back().quality.min_angle * 180.0 / std::numbers::pi) + " deg");
    }
}

} // namespace

ExperimentReport reproduce(ExperimentId id, const ExperimentContext& base)
{
    ExperimentReport report;
    report.id = id;
    report.scale = base.scale;
    ExperimentContext ctx = base;
    if (!ctx.output_dir.empty()) {
        ctx.output_dir = (std::filesystem::path(ctx.output_dir) / to_string(id)).string();
        std::filesystem::create_directories(ctx.output_dir);
    }
    switch (id) {
    case ExperimentId::ex2_1_torus:
        report.checks.push_back(check_closed_energy(ctx));
        report.checks.push_back(check_formulation_equivalence(ctx));
        report.checks.push_back(check_mesh_quality(ctx));
        break;
    case ExperimentId::ex2_2_dumbbell: dumbbell(ctx, report); break;
    case ExperimentId::ex2_3_box161: report.checks.push_back(check_box_sd_energy(ctx)); break;
    case ExperimentId::ex2_5_box181_pinch: pinch(ctx, report); break;
    case ExperimentId::ex3_1_grim_reaper: report.checks.push_back(check_grim_reaper(ctx)); break;
    case ExperimentId::ex3_2_half_circle:
        report.checks.push_back(check_half_circle_convergence(ctx));
        report.checks.push_back(check_c_vanishing(ctx));
        report.checks.push_back(check_open_curve_energy(ctx));
        break;
    case ExperimentId::ex3_3_half_sphere: report.checks.push_back(check_half_sphere_convergence(ctx)); break;
    case ExperimentId::ex3_4_box_contact: {
        std::vector<CriterionResult> extra;
        report.checks.push_back(check_open_box(ctx, &extra));
        report.checks.insert(report.checks.end(), extra.begin(), extra.end());
        box_contact_small_tau(ctx, report);
        break;
    }
    }
    if (!ctx.output_dir.empty()) {
        std::ofstream out(std::filesystem::path(ctx.output_dir) / "report.txt");
        out << format_report(report);
    }
    return report;
}

std::string format_report(const ExperimentReport& report)
{
    std::string out = "experiment=" + std::string(to_string(report.id)) + " scale=" + to_string(report.scale) + '\n';
    for (const auto& c : report.checks) {
        out += "criterion=" + std::to_string(c.criterion) + " check=" + c.name + " result=" + (c.pass ? "PASS" : "FAIL") +
               " detail=" + c.detail + '\n';
    }
    for (const auto& f : report.findings) out += "finding=" + f + '\n';
    return out;
}

} // namespace geomflow
