#pragma once

#include "geomflow/mesh.hpp"
#include "geomflow/schemes.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace geomflow {

struct DiagnosticsRecord {
    int step = 0;
    double t = 0.0;
    double area = 0.0;
    std::optional<double> substrate_area; // open3d only
    double energy = 0.0;
    /// NaN before the first step (nothing solved yet).
    double T_norm = 0.0;
    double c = 0.0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    QualityReport quality;
};

/// Wetting energy: area for closed meshes, area - sigma (x_r - x_l) on a
/// substrate line, area - sigma (y_l + y_r) between vertical walls,
/// area - sigma |S_1| for open surfaces.
double energy(const Mesh& mesh, double sigma);

/// Diagnostics of `mesh`, the state reached by `step` (nullptr for the
/// initial state, whose T_norm comes from the mesh itself and whose c and
/// lambda fields are NaN).
DiagnosticsRecord measure(const Mesh& mesh, const SchemeConfig& config, const StepSolution* step, int index, double t);

struct ConvergenceRow {
    double parameter = 0.0; // h or tau
    double error = 0.0;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double fitted_order = 0.0;
    /// log(e_i / e_{i+1}) / log(p_i / p_{i+1}); one entry fewer than rows.
    std::vector<double> pairwise_eoc;
};

class InsufficientRows : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Least-squares slope of log(error) against log(parameter). Needs at least
/// three rows with strictly decreasing positive parameters and positive errors.
ConvergenceTable fit_order(std::vector<ConvergenceRow> rows);

} // namespace geomflow
