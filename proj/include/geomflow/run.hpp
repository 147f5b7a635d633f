#pragma once

#include "geomflow/diagnostics.hpp"
#include "geomflow/schemes.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace geomflow {

enum class RunStatus { completed, solver_failure, quality_floor };

const char* to_string(RunStatus s);

struct RunOptions {
    double t_end = 0.1;
    /// Stop after this many steps even if t_end is not reached.
    std::optional<int> max_steps;
    /// Abort once the smallest element measure drops below this.
    double quality_floor = 1e-14;
};

/// Called once for the initial state (step == nullptr) and after every
/// accepted step with the new mesh.
using StepHook = std::function<void(const DiagnosticsRecord&, const Mesh&, const StepSolution*)>;

struct RunResult {
    std::vector<DiagnosticsRecord> records;
    Mesh final_mesh;
    RunStatus status = RunStatus::completed;
    /// Index of the step that failed (status != completed).
    int failed_step = -1;
    std::string message;
};

RunResult run_flow(const Mesh& initial, const SchemeConfig& config, const RunOptions& options, const StepHook& hook = {});

} // namespace geomflow
