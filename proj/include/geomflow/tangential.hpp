#pragma once

#include "geomflow/mesh.hpp"

#include <vector>

namespace geomflow {

enum class GeometryKind { closed, open2d_substrate, open2d_vertical_lines, open3d };

GeometryKind geometry_kind(const Mesh& mesh);

/// Per-node decomposition of the discrete vector Laplacian of position,
/// L_j = omega_j T_j + mu_j nu_j with T_j . nu_j = 0.
struct TangentialData {
    std::vector<Vec3> T;
    Eigen::VectorXd mu;
    std::vector<Vec3> nu;  // area-weighted vertex normals
    Eigen::VectorXd omega; // lumped weights
    double T_norm = 0.0;   // sqrt(sum_j omega_j |T_j|^2)
};

/// Boundary correction to the position Laplacian for open geometries. The
/// correction removes the contact-line term -int mu_d . eta that integration
/// by parts produces, with the conormal mu_d replaced by its Young's-law value
/// for the contact angle with cos(theta) = sigma.
struct BoundaryFunctional {
    GeometryKind kind = GeometryKind::closed;
    double sigma = 0.0;
    /// Per-vertex vectors added to L; zero at interior vertices.
    std::vector<Vec3> contributions;
};

/// L_j = int grad id . grad phi_j, one vector per vertex.
std::vector<Vec3> laplacian_functional(const Mesh& mesh);

/// Boundary contributions for an open mesh.
///
/// 2D substrate: at each contact point the conormal is sigma n_s - sqrt(1-sigma^2) e_2,
/// with n_s the outward substrate normal (+e_1 at the right contact point).
/// 2D vertical lines: sqrt(1-sigma^2) n_w + sigma e_2 with n_w the outward wall normal.
/// 3D: lumped line integrals of -cos(theta) n_d + sin(theta) e_3 over the
/// contact line, n_d = t x e_3 per boundary edge.
///
/// Throws NotOpenMesh for closed meshes, std::invalid_argument for |sigma| > 1.
BoundaryFunctional boundary_functional(const Mesh& mesh, double sigma);

/// nu_j = L_j / omega_j, so that (nu, eta)^(h) = sum_j L_j . eta_j.
std::vector<Vec3> riesz_representative(const Mesh& mesh, const std::vector<Vec3>& L);

/// Solve the lumped tangent system for (T, mu) given the assembled functional.
/// Mass lumping makes the system block-diagonal per node:
///   mu_j = L_j . nu_j / |nu_j|^2,   T_j = (L_j - mu_j nu_j) / omega_j.
/// Throws VanishingVertexNormal.
TangentialData compute_T_mu(const Mesh& mesh, const std::vector<Vec3>& L_total);

/// Convenience: laplacian_functional plus the boundary functional (open meshes).
TangentialData tangential_data(const Mesh& mesh, double sigma = 0.0);

} // namespace geomflow
