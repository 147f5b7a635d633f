#include "geomflow/schemes.hpp"

#include <Eigen/Geometry>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

namespace geomflow {

const char* to_string(Flow f) { return f == Flow::mcf ? "mcf" : "sd"; }

const char* to_string(Geometry g)
{
    switch (g) {
    case Geometry::closed: return "closed";
    case Geometry::open2d: return "open2d";
    case Geometry::open3d: return "open3d";
    }
    return "?";
}

const char* to_string(Method m) { return m == Method::bgn_mdr ? "bgn_mdr" : "bgn"; }
const char* to_string(ConormalMode m) { return m == ConormalMode::semi_implicit ? "semi_implicit" : "explicit"; }
const char* to_string(Formulation f) { return f == Formulation::monolithic ? "monolithic" : "reduced"; }

Geometry geometry_class(const Mesh& mesh)
{
    if (mesh.is_closed()) return Geometry::closed;
    return mesh.dim() == 2 ? Geometry::open2d : Geometry::open3d;
}

SchemeError::SchemeError(SchemeErrorKind kind, const std::string& what)
    : std::runtime_error(what)
    , m_kind(kind)
{}

double SchemeConfig::tau_at(double t) const
{
    double tau = tau_schedule.front().tau;
    for (const auto& seg : tau_schedule) {
        if (seg.t_switch <= t + 1e-12 * std::max(1.0, std::abs(t))) tau = seg.tau;
    }
    return tau;
}

void SchemeConfig::validate() const
{
    if (tau_schedule.empty()) throw std::invalid_argument("tau schedule is empty");
    for (std::size_t i = 0; i < tau_schedule.size(); ++i) {
        if (!(tau_schedule[i].tau > 0.0)) throw std::invalid_argument("tau must be positive");
        if (i > 0 && !(tau_schedule[i].t_switch > tau_schedule[i - 1].t_switch)) {
            throw std::invalid_argument("tau schedule switch times must increase");
        }
    }
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (!(std::abs(sigma) <= 1.0)) throw std::invalid_argument("|sigma| must not exceed 1");
    if (!(t_degenerate_eps >= 0.0)) throw std::invalid_argument("t_degenerate_eps must be nonnegative");
    if (formulation == Formulation::reduced && flow != Flow::mcf) {
        throw std::invalid_argument("reduced formulation exists for mcf only");
    }
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct DofMap {
    int dim = 0;
    std::vector<int> index; // (j * dim + k) -> free index or -1
    int free = 0;

    int operator()(std::size_t j, int k) const { return index[j * static_cast<std::size_t>(dim) + static_cast<std::size_t>(k)]; }
};

DofMap velocity_dofs(const Mesh& mesh)
{
    DofMap map;
    map.dim = mesh.dim();
    map.index.assign(mesh.num_vertices() * static_cast<std::size_t>(map.dim), -1);
    const int fixed = mesh.constrained_coordinate();
    for (std::size_t j = 0; j < mesh.num_vertices(); ++j) {
        for (int k = 0; k < map.dim; ++k) {
            if (k == fixed && mesh.is_boundary_vertex(static_cast<int>(j))) continue;
            map.index[j * static_cast<std::size_t>(map.dim) + static_cast<std::size_t>(k)] = map.free++;
        }
    }
    return map;
}

// Contributions shared by both formulations: the velocity block, the
// right-hand side, and the contact-line coupling in 3D.
struct VelocitySystem {
    Triplets A;
    Eigen::VectorXd rhs;
};

VelocitySystem velocity_system(
    const Mesh& mesh, const SchemeConfig& config, double tau, const Eigen::SparseMatrix<double>& K, const DofMap& dofs)
{
    const int d = mesh.dim();
    VelocitySystem sys;
    sys.rhs = Eigen::VectorXd::Zero(dofs.free);
    const VertexField X = mesh.positions();
    const VertexField KX = K * X;
    for (std::size_t j = 0; j < mesh.num_vertices(); ++j) {
        for (int k = 0; k < d; ++k) {
            const int r = dofs(j, k);
            if (r >= 0) sys.rhs(r) -= KX(static_cast<Eigen::Index>(j), k);
        }
    }
    if (!mesh.is_closed()) {
        const BoundaryFunctional bf = boundary_functional(mesh, config.sigma);
        for (std::size_t j = 0; j < mesh.num_vertices(); ++j) {
            for (int k = 0; k < d; ++k) {
                const int r = dofs(j, k);
                if (r >= 0) sys.rhs(r) -= bf.contributions[j][k];
            }
        }
    }

    for (Eigen::Index col = 0; col < K.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
            for (int k = 0; k < d; ++k) {
                const int r = dofs(static_cast<std::size_t>(it.row()), k);
                const int c = dofs(static_cast<std::size_t>(it.col()), k);
                if (r >= 0 && c >= 0) sys.A.emplace_back(r, c, tau * it.value());
            }
        }
    }

    if (d == 3 && !mesh.is_closed() && config.conormal_mode == ConormalMode::semi_implicit && config.sigma != 0.0) {
        // -sigma (tau/4) ((v_b - v_a) x e3) . (eta_a + eta_b), with w x e3 = (w_y, -w_x, 0).
        const double w = config.sigma * tau / 4.0;
        for (const auto& loop : mesh.boundary()) {
            const std::size_t n = loop.size();
            for (std::size_t i = 0; i < n; ++i) {
                const auto a = static_cast<std::size_t>(loop[i]);
                const auto b = static_cast<std::size_t>(loop[(i + 1) % n]);
                for (const std::size_t row : {a, b}) {
                    sys.A.emplace_back(dofs(row, 0), dofs(b, 1), -w);
                    sys.A.emplace_back(dofs(row, 0), dofs(a, 1), w);
                    sys.A.emplace_back(dofs(row, 1), dofs(b, 0), w);
                    sys.A.emplace_back(dofs(row, 1), dofs(a, 0), -w);
                }
            }
        }
    }
    return sys;
}

void check_geometry(const Mesh& mesh, const SchemeConfig& config)
{
    if (geometry_class(mesh) != config.geometry) {
        throw SchemeError(
            SchemeErrorKind::GeometryMismatch, std::string("config geometry ") + to_string(config.geometry) +
                                                   " does not match mesh geometry " + to_string(geometry_class(mesh)));
    }
}

double contact_line_work(const Mesh& mesh, const std::vector<Vec3>& next)
{
    std::vector<double> terms;
    const Vec3 e3 = Vec3::UnitZ();
    for (const auto& loop : mesh.boundary()) {
        const std::size_t n = loop.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto a = static_cast<std::size_t>(loop[i]);
            const auto b = static_cast<std::size_t>(loop[(i + 1) % n]);
            const Vec3 old_edge = mesh.vertices()[b] - mesh.vertices()[a];
            const Vec3 new_edge = next[b] - next[a];
            const Vec3 conormal = 0.5 * (old_edge + new_edge).cross(e3);
            const Vec3 shift = 0.5 * ((next[a] - mesh.vertices()[a]) + (next[b] - mesh.vertices()[b]));
            terms.push_back(conormal.dot(shift));
        }
    }
    return pairwise_sum(terms);
}

void finish(const Mesh& mesh, StepSolution& out)
{
    const int d = mesh.dim();
    out.new_positions = mesh.vertices();
    for (std::size_t j = 0; j < mesh.num_vertices(); ++j) {
        for (int k = 0; k < d; ++k) out.new_positions[j][k] += out.tau * out.v(static_cast<Eigen::Index>(j), k);
    }
    if (geometry_class(mesh) == Geometry::open3d) out.contact_line_work = contact_line_work(mesh, out.new_positions);
}

void scatter_velocity(const Mesh& mesh, const DofMap& dofs, const Eigen::VectorXd& x, StepSolution& out)
{
    out.v = VertexField::Zero(static_cast<Eigen::Index>(mesh.num_vertices()), mesh.dim());
    for (std::size_t j = 0; j < mesh.num_vertices(); ++j) {
        for (int k = 0; k < mesh.dim(); ++k) {
            const int r = dofs(j, k);
            if (r >= 0) out.v(static_cast<Eigen::Index>(j), k) = x(r);
        }
    }
}

StepSolution solve_monolithic(
    const Mesh& mesh, const SchemeConfig& config, double tau, double alpha_eff, const TangentialData& td, bool c_active)
{
    const int d = mesh.dim();
    const auto J = static_cast<int>(mesh.num_vertices());
    const Eigen::SparseMatrix<double> K = stiffness_matrix(mesh);
    const DofMap dofs = velocity_dofs(mesh);
    VelocitySystem sys = velocity_system(mesh, config, tau, K, dofs);

    const int lam0 = dofs.free;
    const int cidx = lam0 + J;
    const int n = cidx + (c_active ? 1 : 0);
    Triplets& A = sys.A;

    for (int j = 0; j < J; ++j) {
        for (int k = 0; k < d; ++k) {
            const int r = dofs(static_cast<std::size_t>(j), k);
            const double nu = td.nu[static_cast<std::size_t>(j)][k];
            if (r < 0 || nu == 0.0) continue;
            A.emplace_back(r, lam0 + j, -nu);
            A.emplace_back(lam0 + j, r, -nu);
        }
    }
    if (config.flow == Flow::mcf) {
        for (int j = 0; j < J; ++j) A.emplace_back(lam0 + j, lam0 + j, -td.omega(j));
    } else {
        for (Eigen::Index col = 0; col < K.outerSize(); ++col) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
                A.emplace_back(lam0 + static_cast<int>(it.row()), lam0 + static_cast<int>(it.col()), -it.value());
            }
        }
    }
    const double root = std::sqrt(td.T_norm);
    if (c_active) {
        // Scaled unknown c_hat = c sqrt(||T||) keeps the coupling symmetric.
        for (int j = 0; j < J; ++j) {
            for (int k = 0; k < d; ++k) {
                const int r = dofs(static_cast<std::size_t>(j), k);
                const double u = td.omega(j) * td.T[static_cast<std::size_t>(j)][k] / root;
                if (r < 0 || u == 0.0) continue;
                A.emplace_back(r, cidx, -u);
                A.emplace_back(cidx, r, -u);
            }
        }
        A.emplace_back(cidx, cidx, -alpha_eff);
    }

    Eigen::SparseMatrix<double> M(n, n);
    M.setFromTriplets(A.begin(), A.end());
    M.makeCompressed();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b.head(dofs.free) = sys.rhs;

    SolveResult sol;
    try {
        sol = solve(M, b, config.solver);
    } catch (const SingularMatrix& e) {
        throw SchemeError(SchemeErrorKind::SingularMatrix, e.what());
    } catch (const NonConvergence& e) {
        throw SchemeError(SchemeErrorKind::SingularMatrix, e.what());
    }

    StepSolution out;
    out.tau = tau;
    out.tangential = td;
    out.c_active = c_active;
    out.solve_report = sol.report;
    scatter_velocity(mesh, dofs, sol.x, out);
    out.lambda = sol.x.segment(lam0, J);
    out.c = c_active ? sol.x(cidx) / root : 0.0;
    finish(mesh, out);
    return out;
}

StepSolution solve_reduced(
    const Mesh& mesh, const SchemeConfig& config, double tau, double alpha_eff, const TangentialData& td, bool c_active)
{
    const int d = mesh.dim();
    const auto J = static_cast<int>(mesh.num_vertices());
    const Eigen::SparseMatrix<double> K = stiffness_matrix(mesh);
    const DofMap dofs = velocity_dofs(mesh);
    VelocitySystem sys = velocity_system(mesh, config, tau, K, dofs);

    // Eliminate lambda_j = -nu_j . v_j / omega_j.
    for (int j = 0; j < J; ++j) {
        const Vec3& nu = td.nu[static_cast<std::size_t>(j)];
        for (int k = 0; k < d; ++k) {
            for (int l = 0; l < d; ++l) {
                const int r = dofs(static_cast<std::size_t>(j), k);
                const int c = dofs(static_cast<std::size_t>(j), l);
                if (r >= 0 && c >= 0) sys.A.emplace_back(r, c, nu[k] * nu[l] / td.omega(j));
            }
        }
    }
    Eigen::SparseMatrix<double> A0(dofs.free, dofs.free);
    A0.setFromTriplets(sys.A.begin(), sys.A.end());
    A0.makeCompressed();

    // Eliminating c adds u u^T with u_j = omega_j T_j / sqrt(alpha ||T||).
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dofs.free);
    if (c_active) {
        const double scale = 1.0 / std::sqrt(alpha_eff * td.T_norm);
        for (int j = 0; j < J; ++j) {
            for (int k = 0; k < d; ++k) {
                const int r = dofs(static_cast<std::size_t>(j), k);
                if (r >= 0) u(r) = td.omega(j) * td.T[static_cast<std::size_t>(j)][k] * scale;
            }
        }
    }

    const bool symmetric = d != 3 || mesh.is_closed() || config.conormal_mode != ConormalMode::semi_implicit ||
                           config.sigma == 0.0;
    Eigen::VectorXd y;
    Eigen::VectorXd z;
    if (symmetric) {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A0);
        const double floor = config.solver.pivot_threshold * A0.coeffs().cwiseAbs().maxCoeff();
        if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().cwiseAbs().minCoeff() > floor)) {
            throw SchemeError(SchemeErrorKind::SingularMatrix, "reduced velocity matrix is singular");
        }
        y = ldlt.solve(sys.rhs);
        if (c_active) z = ldlt.solve(u);
    } else {
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(A0);
        if (lu.info() != Eigen::Success) throw SchemeError(SchemeErrorKind::SingularMatrix, lu.lastErrorMessage());
        y = lu.solve(sys.rhs);
        if (c_active) z = lu.solve(u);
    }
    Eigen::VectorXd x = y;
    if (c_active) x -= z * (u.dot(y) / (1.0 + u.dot(z)));
    if (!x.allFinite()) throw SchemeError(SchemeErrorKind::SingularMatrix, "reduced solve produced non-finite values");

    StepSolution out;
    out.tau = tau;
    out.tangential = td;
    out.c_active = c_active;
    const Eigen::VectorXd residual = A0 * x + u * u.dot(x) - sys.rhs;
    out.solve_report.residual_norm = residual.norm();
    out.solve_report.method = SolveMethod::direct_lu;
    if (out.solve_report.residual_norm > config.solver.tol * (A0.norm() * x.norm() + sys.rhs.norm())) {
        throw SchemeError(SchemeErrorKind::SingularMatrix, "reduced solve residual exceeds tolerance");
    }
    scatter_velocity(mesh, dofs, x, out);
    out.lambda.resize(J);
    std::vector<double> tv;
    tv.reserve(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
        Vec3 vj = Vec3::Zero();
        for (int k = 0; k < d; ++k) vj[k] = out.v(j, k);
        out.lambda(j) = -td.nu[static_cast<std::size_t>(j)].dot(vj) / td.omega(j);
        tv.push_back(td.omega(j) * td.T[static_cast<std::size_t>(j)].dot(vj));
    }
    out.c = c_active ? -pairwise_sum(tv) / (alpha_eff * td.T_norm) : 0.0;
    finish(mesh, out);
    return out;
}

} // namespace

StepSolution advance(const Mesh& mesh, const SchemeConfig& config, double tau, double alpha_factor)
{
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemeError(SchemeErrorKind::InvalidConfig, e.what());
    }
    if (!(tau > 0.0)) throw SchemeError(SchemeErrorKind::InvalidConfig, "tau must be positive");
    if (!(alpha_factor > 0.0)) throw SchemeError(SchemeErrorKind::InvalidConfig, "alpha factor must be positive");
    check_geometry(mesh, config);

    TangentialData td;
    try {
        td = tangential_data(mesh, config.sigma);
    } catch (const MeshError& e) {
        throw SchemeError(SchemeErrorKind::Degenerate, e.what());
    }
    const bool c_active = config.method == Method::bgn_mdr &&
                          td.T_norm > config.t_degenerate_eps * std::sqrt(mesh.total_measure());
    const double alpha_eff = config.alpha * alpha_factor;
    try {
        if (config.formulation == Formulation::reduced) return solve_reduced(mesh, config, tau, alpha_eff, td, c_active);
        return solve_monolithic(mesh, config, tau, alpha_eff, td, c_active);
    } catch (const SchemeError& e) {
        if (e.kind() == SchemeErrorKind::SingularMatrix && geometry_class(mesh) == Geometry::open3d &&
            config.conormal_mode == ConormalMode::semi_implicit) {
            throw SchemeError(e.kind(), std::string(e.what()) + "; retry with conormal_mode = explicit");
        }
        throw;
    }
}

namespace {

StepSolution step_as(const Mesh& mesh, SchemeConfig config, double tau, Flow flow, Geometry geometry)
{
    if (geometry_class(mesh) != geometry) {
        throw SchemeError(
            SchemeErrorKind::GeometryMismatch,
            std::string("mesh geometry ") + to_string(geometry_class(mesh)) + " where " + to_string(geometry) +
                " was expected");
    }
    config.flow = flow;
    config.geometry = geometry;
    return advance(mesh, config, tau);
}

} // namespace

StepSolution step_mcf_closed(const Mesh& mesh, const SchemeConfig& config, double tau)
{
    return step_as(mesh, config, tau, Flow::mcf, Geometry::closed);
}

StepSolution step_sd_closed(const Mesh& mesh, const SchemeConfig& config, double tau)
{
    return step_as(mesh, config, tau, Flow::sd, Geometry::closed);
}

StepSolution step_mcf_open2d(const Mesh& mesh, const SchemeConfig& config, double tau)
{
    return step_as(mesh, config, tau, Flow::mcf, Geometry::open2d);
}

StepSolution step_sd_open2d(const Mesh& mesh, const SchemeConfig& config, double tau)
{
    return step_as(mesh, config, tau, Flow::sd, Geometry::open2d);
}

StepSolution step_mcf_open3d(const Mesh& mesh, const SchemeConfig& config, double tau)
{
    return step_as(mesh, config, tau, Flow::mcf, Geometry::open3d);
}

StepSolution step_sd_open3d(const Mesh& mesh, const SchemeConfig& config, double tau)
{
    return step_as(mesh, config, tau, Flow::sd, Geometry::open3d);
}

StepSolution step_bgn(const Mesh& mesh, const SchemeConfig& config, double tau)
{
    SchemeConfig plain = config;
    plain.method = Method::bgn;
    return advance(mesh, plain, tau);
}

Mesh advanced_mesh(const Mesh& mesh, const StepSolution& step) { return mesh.with_vertices(step.new_positions); }

} // namespace geomflow
