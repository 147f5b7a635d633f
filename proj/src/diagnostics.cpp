#include "geomflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace geomflow {

double energy(const Mesh& mesh, double sigma)
{
    const double area = mesh.total_measure();
    switch (mesh.boundary_kind()) {
    case BoundaryKind::closed: return area;
    case BoundaryKind::open_vertical_lines: {
        const auto& ends = mesh.boundary().front();
        return area - sigma * (mesh.vertex(ends[0]).y() + mesh.vertex(ends[1]).y());
    }
    case BoundaryKind::open_substrate:
        if (mesh.dim() == 2) {
            const auto& ends = mesh.boundary().front();
            return area - sigma * std::abs(mesh.vertex(ends[1]).x() - mesh.vertex(ends[0]).x());
        }
        return area - sigma * substrate_area(mesh);
    }
    return area;
}

DiagnosticsRecord measure(const Mesh& mesh, const SchemeConfig& config, const StepSolution* step, int index, double t)
{
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    DiagnosticsRecord r;
    r.step = index;
    r.t = t;
    r.area = mesh.total_measure();
    if (geometry_class(mesh) == Geometry::open3d) r.substrate_area = substrate_area(mesh);
    r.energy = energy(mesh, config.sigma);
    r.quality = quality_metrics(mesh);
    if (step != nullptr) {
        r.T_norm = step->tangential.T_norm;
        r.c = step->c;
        r.lambda_min = step->lambda.size() > 0 ? step->lambda.minCoeff() : nan;
        r.lambda_max = step->lambda.size() > 0 ? step->lambda.maxCoeff() : nan;
    } else {
        try {
            r.T_norm = tangential_data(mesh, config.sigma).T_norm;
        } catch (const MeshError&) {
            r.T_norm = nan;
        }
        r.c = nan;
        r.lambda_min = nan;
        r.lambda_max = nan;
    }
    return r;
}

ConvergenceTable fit_order(std::vector<ConvergenceRow> rows)
{
    if (rows.size() < 3) throw InsufficientRows("order fit needs at least 3 rows, got " + std::to_string(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!(rows[i].parameter > 0.0) || !(rows[i].error > 0.0)) {
            throw std::invalid_argument("order fit needs positive parameters and errors");
        }
        if (i > 0 && !(rows[i].parameter < rows[i - 1].parameter)) {
            throw std::invalid_argument("order fit needs strictly decreasing parameters");
        }
    }
    ConvergenceTable table;
    const auto n = static_cast<double>(rows.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& r : rows) {
        sx += std::log(r.parameter);
        sy += std::log(r.error);
    }
    const double mx = sx / n, my = sy / n;
    double sxy = 0.0, sxx = 0.0;
    for (const auto& r : rows) {
        const double dx = std::log(r.parameter) - mx;
        sxy += dx * (std::log(r.error) - my);
        sxx += dx * dx;
    }
    table.fitted_order = sxy / sxx;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        table.pairwise_eoc.push_back(
            std::log(rows[i].error / rows[i + 1].error) / std::log(rows[i].parameter / rows[i + 1].parameter));
    }
    table.rows = std::move(rows);
    return table;
}

} // namespace geomflow
