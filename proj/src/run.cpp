#include "geomflow/run.hpp"

#include <cmath>

namespace geomflow {

const char* to_string(RunStatus s)
{
    switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::solver_failure: return "solver_failure";
    case RunStatus::quality_floor: return "quality_floor";
    }
    return "?";
}

RunResult run_flow(const Mesh& initial, const SchemeConfig& config, const RunOptions& options, const StepHook& hook)
{
    config.validate();
    if (!(options.t_end > 0.0)) throw std::invalid_argument("t_end must be positive");

    RunResult result{{}, initial, RunStatus::completed, -1, {}};
    Mesh mesh = initial;
    result.records.push_back(measure(mesh, config, nullptr, 0, 0.0));
    if (hook) hook(result.records.back(), mesh, nullptr);

    // Time is tracked per schedule segment as start + k tau so that long runs
    // land on t_end without accumulated rounding.
    double segment_start = 0.0;
    double segment_tau = config.tau_at(0.0);
    long segment_steps = 0;
    double t = 0.0;
    std::optional<double> reference_area;

    for (int m = 1;; ++m) {
        if (options.max_steps && m > *options.max_steps) break;
        const double tau_nominal = config.tau_at(t);
        if (tau_nominal != segment_tau) {
            segment_start = t;
            segment_tau = tau_nominal;
            segment_steps = 0;
        }
        const double remaining = options.t_end - t;
        if (remaining <= 1e-9 * segment_tau) break;
        const bool last = remaining < segment_tau * (1.0 + 1e-9);
        const double tau = last ? remaining : segment_tau;

        double alpha_factor = 1.0;
        if (config.compensation && t >= config.compensation->t_activate - 1e-12 * std::max(1.0, std::abs(t))) {
            if (!reference_area) reference_area = mesh.total_measure();
            alpha_factor = std::sqrt(mesh.total_measure() / *reference_area);
        }

        StepSolution step;
        Mesh next = mesh;
        try {
            step = advance(mesh, config, tau, alpha_factor);
            next = advanced_mesh(mesh, step);
        } catch (const SchemeError& e) {
            result.status = RunStatus::solver_failure;
            result.failed_step = m;
            result.message = e.what();
            break;
        } catch (const MeshError& e) {
            result.status = RunStatus::quality_floor;
            result.failed_step = m;
            result.message = e.what();
            break;
        }

        ++segment_steps;
        t = last ? options.t_end : segment_start + static_cast<double>(segment_steps) * segment_tau;
        mesh = std::move(next);
        result.records.push_back(measure(mesh, config, &step, m, t));
        if (hook) hook(result.records.back(), mesh, &step);

        if (result.records.back().quality.min_element_measure < options.quality_floor) {
            result.status = RunStatus::quality_floor;
            result.failed_step = m;
            result.message = "smallest element measure fell below the quality floor";
            break;
        }
        if (last) break;
    }
    result.final_mesh = mesh;
    return result;
}

} // namespace geomflow
