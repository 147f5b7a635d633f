#pragma once

#include "geomflow/diagnostics.hpp"
#include "geomflow/geometry.hpp"
#include "geomflow/io.hpp"
#include "geomflow/run.hpp"

#include <functional>
#include <string>
#include <vector>

namespace geomflow {

/// Run fn(0..count-1) on at most `jobs` threads. Exceptions are rethrown after
/// all workers finish (first failing index wins).
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

/// Worker count from GEOMFLOW_JOBS, else 1.
int default_jobs();

// ---- convergence sweeps ----------------------------------------------------

enum class Axis { space, time };

const char* to_string(Axis a);

struct SweepRun {
    double parameter = 0.0; // initial max edge length, or tau
    double error = 0.0;     // max over time levels of the lumped-L2 nodal distance
    double max_nodal = 0.0; // max over time levels and nodes
    double max_abs_c = 0.0;
    RunStatus status = RunStatus::completed;
    std::string message;
};

struct SweepResult {
    std::vector<SweepRun> runs;
    ConvergenceTable table;
};

/// Refine `base` `levels - 1` times along `axis` and run each level against
/// base.reference. Space refinement doubles curve node counts, adds one
/// octahedron subdivision, halves box h, or quadruples torus triangles; time
/// refinement halves every tau of the schedule. Throws std::invalid_argument
/// without a reference.
SweepResult convergence_sweep(const RunConfig& base, Axis axis, int levels, int jobs);

/// Run one configuration and track the distance to `ref` at every time level.
SweepRun run_against_reference(const RunConfig& config, const ExactReference& ref);

// ---- criteria and experiments ----------------------------------------------

enum class Scale { desk, paper };

const char* to_string(Scale s);
Scale scale_from_string(const std::string& s);

struct CriterionResult {
    int criterion = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ExperimentContext {
    Scale scale = Scale::desk;
    int jobs = 1;
    /// Output directory for CSV files; empty disables file output.
    std::string output_dir;
};

/// Largest per-step relative energy increase (E_m - E_{m-1}) / |E_{m-1}|.
double worst_energy_increase(const std::vector<DiagnosticsRecord>& records);

CriterionResult check_closed_energy(const ExperimentContext& ctx);
CriterionResult check_box_sd_energy(const ExperimentContext& ctx);
CriterionResult check_open_curve_energy(const ExperimentContext& ctx);
CriterionResult check_open_box(const ExperimentContext& ctx, std::vector<CriterionResult>* extra = nullptr);
CriterionResult check_half_circle_convergence(const ExperimentContext& ctx);
CriterionResult check_half_sphere_convergence(const ExperimentContext& ctx);
CriterionResult check_grim_reaper(const ExperimentContext& ctx);
CriterionResult check_formulation_equivalence(const ExperimentContext& ctx);
CriterionResult check_c_vanishing(const ExperimentContext& ctx);
CriterionResult check_mesh_quality(const ExperimentContext& ctx);

enum class ExperimentId {
    ex2_1_torus,
    ex2_2_dumbbell,
    ex2_3_box161,
    ex2_5_box181_pinch,
    ex3_1_grim_reaper,
    ex3_2_half_circle,
    ex3_3_half_sphere,
    ex3_4_box_contact,
};

const char* to_string(ExperimentId id);
ExperimentId experiment_from_string(const std::string& s);
std::vector<ExperimentId> all_experiments();

struct ExperimentReport {
    ExperimentId id = ExperimentId::ex2_1_torus;
    Scale scale = Scale::desk;
    std::vector<CriterionResult> checks;
    /// Observations that are reported rather than asserted.
    std::vector<std::string> findings;

    bool passed() const;
};

ExperimentReport reproduce(ExperimentId id, const ExperimentContext& ctx);

/// One line per check: `criterion=<n> check=<name> result=PASS|FAIL detail=<...>`,
/// then `finding=<...>` lines.
std::string format_report(const ExperimentReport& report);

} // namespace geomflow
