#pragma once

#include "geomflow/linalg.hpp"
#include "geomflow/mesh.hpp"
#include "geomflow/tangential.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace geomflow {

enum class Flow { mcf, sd };
enum class Geometry { closed, open2d, open3d };
enum class Method { bgn_mdr, bgn };
/// How the contact-line conormal enters the 3D open schemes.
/// semi_implicit: average of old and new boundary tangents (energy stable).
/// lagged: old tangent only, entirely on the right-hand side ("explicit" in configs).
enum class ConormalMode { semi_implicit, lagged };
/// MCF only: keep (v, lambda, c) coupled, or eliminate lambda and c and solve
/// the rank-one-updated velocity system.
enum class Formulation { monolithic, reduced };

const char* to_string(Flow f);
const char* to_string(Geometry g);
const char* to_string(Method m);
const char* to_string(ConormalMode m);
const char* to_string(Formulation f);

Geometry geometry_class(const Mesh& mesh);

struct TauSegment {
    double t_switch = 0.0;
    double tau = 1e-3;
};

struct Compensation {
    double t_activate = 0.0;
};

struct SchemeConfig {
    Flow flow = Flow::mcf;
    Geometry geometry = Geometry::closed;
    Method method = Method::bgn_mdr;
    double alpha = 1.0;
    std::vector<TauSegment> tau_schedule = {{0.0, 1e-3}};
    /// cos(theta) of the contact angle (open geometries).
    double sigma = 0.0;
    std::optional<Compensation> compensation;
    ConormalMode conormal_mode = ConormalMode::semi_implicit;
    Formulation formulation = Formulation::monolithic;
    /// The c-coupling is dropped when ||T|| <= t_degenerate_eps * sqrt(|Gamma|).
    double t_degenerate_eps = 1e-12;
    SolveOptions solver;

    /// Step size in effect at time t.
    double tau_at(double t) const;
    /// Throws std::invalid_argument on tau <= 0, alpha <= 0, |sigma| > 1 or an
    /// unsorted schedule.
    void validate() const;
};

enum class SchemeErrorKind { SingularMatrix, GeometryMismatch, InvalidConfig, Degenerate };

class SchemeError : public std::runtime_error {
public:
    SchemeError(SchemeErrorKind kind, const std::string& what);
    SchemeErrorKind kind() const { return m_kind; }

private:
    SchemeErrorKind m_kind;
};

struct StepSolution {
    double tau = 0.0;
    VertexField v;          // num_vertices x dim
    Eigen::VectorXd lambda; // curvature proxy at the new level
    double c = 0.0;
    bool c_active = false;
    std::vector<Vec3> new_positions;
    SolveReport solve_report;
    TangentialData tangential;
    /// open3d: int over the old contact line of n_d^{m-1/2} . (X^m - id).
    std::optional<double> contact_line_work;
};

/// One time step of the configured scheme. `alpha_factor` multiplies alpha in
/// the tangential constraint (area compensation).
StepSolution advance(const Mesh& mesh, const SchemeConfig& config, double tau, double alpha_factor = 1.0);

StepSolution step_mcf_closed(const Mesh& mesh, const SchemeConfig& config, double tau);
StepSolution step_sd_closed(const Mesh& mesh, const SchemeConfig& config, double tau);
StepSolution step_mcf_open2d(const Mesh& mesh, const SchemeConfig& config, double tau);
StepSolution step_sd_open2d(const Mesh& mesh, const SchemeConfig& config, double tau);
StepSolution step_mcf_open3d(const Mesh& mesh, const SchemeConfig& config, double tau);
StepSolution step_sd_open3d(const Mesh& mesh, const SchemeConfig& config, double tau);
/// Baseline: the configured flow and geometry with the tangential constraint removed.
StepSolution step_bgn(const Mesh& mesh, const SchemeConfig& config, double tau);

/// Mesh at the new time level X^m = id + tau v.
Mesh advanced_mesh(const Mesh& mesh, const StepSolution& step);

} // namespace geomflow
