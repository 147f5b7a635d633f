#pragma once

#include "geomflow/diagnostics.hpp"
#include "geomflow/geometry.hpp"
#include "geomflow/mesh.hpp"
#include "geomflow/schemes.hpp"

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace geomflow {

enum class OutputFormat { obj, vtk, csv };

const char* to_string(OutputFormat f);

struct RunConfig {
    SchemeConfig scheme;
    /// Exactly one of shape / mesh_path is set.
    std::optional<ShapeSpec> shape;
    std::string mesh_path;
    /// Boundary handling for meshes read from file.
    BoundaryKind mesh_boundary = BoundaryKind::closed;
    VerticalWalls walls;
    std::optional<ExactReference> reference;

    double t_end = 0.1;
    std::optional<int> max_steps;
    std::string output_dir = "out";
    int frame_every = 10;
    std::set<OutputFormat> formats = {OutputFormat::csv};
    double quality_floor = 1e-14;

    /// Throws ConfigError.
    void validate() const;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line = 0, std::string key = {});
    int line() const { return m_line; }
    const std::string& key() const { return m_key; }

private:
    int m_line;
    std::string m_key;
};

/// Parse a sectioned key/value config:
///
///   [scheme]
///   flow = "mcf"
///   tau_schedule = [[0.0, 1e-4], [0.0908, 2e-7]]
///
/// Sections: run, scheme, solver, shape, reference. `overrides` are
/// "section.key=value" strings applied after the file. Unknown keys are rejected.
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
RunConfig read_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Build the initial mesh described by a config.
Mesh initial_mesh(const RunConfig& config);

enum class MeshFormat { obj, off, vtk };

MeshFormat mesh_format_from_path(const std::string& path);

/// Optional nodal data for VTK output.
struct MeshFields {
    std::optional<Eigen::VectorXd> lambda;
    std::optional<VertexField> v;
    std::optional<std::vector<Vec3>> T;
};

/// OBJ: `v x y z` then `l i j` or `f i j k` (1-based). OFF: standard header.
/// VTK: legacy ASCII POLYDATA with optional point data. Coordinates are written
/// with 17 significant digits. Throws std::runtime_error on I/O failure.
void write_mesh(const Mesh& mesh, const std::string& path, MeshFormat format, const MeshFields& fields = {});

/// Read OBJ or OFF. Line records make a curve (d = 2), faces a surface (d = 3).
Mesh read_mesh(const std::string& path, BoundaryKind kind = BoundaryKind::closed, VerticalWalls walls = {});

inline constexpr const char* series_header =
    "step,t,area,substrate_area,energy,T_norm,c,lambda_min,lambda_max,max_edge,min_edge,edge_ratio";

std::string format_series(const std::vector<DiagnosticsRecord>& records);
void write_series(const std::vector<DiagnosticsRecord>& records, const std::string& path);

/// CSV with columns parameter,error,eoc and a trailing fitted-order comment line.
void write_convergence(const ConvergenceTable& table, const std::string& path);

/// 17 significant digits, enough to read back the same double.
std::string format_double(double x);

} // namespace geomflow
