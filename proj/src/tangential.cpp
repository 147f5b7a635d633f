#include "geomflow/tangential.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>

namespace geomflow {

GeometryKind geometry_kind(const Mesh& mesh)
{
    switch (mesh.boundary_kind()) {
    case BoundaryKind::closed: return GeometryKind::closed;
    case BoundaryKind::open_vertical_lines: return GeometryKind::open2d_vertical_lines;
    case BoundaryKind::open_substrate:
        return mesh.dim() == 2 ? GeometryKind::open2d_substrate : GeometryKind::open3d;
    }
    return GeometryKind::closed;
}

std::vector<Vec3> laplacian_functional(const Mesh& mesh)
{
    const VertexField L = stiffness_action(mesh, mesh.positions());
    std::vector<Vec3> out(mesh.num_vertices(), Vec3::Zero());
    for (std::size_t j = 0; j < out.size(); ++j) {
        for (int k = 0; k < mesh.dim(); ++k) out[j][k] = L(static_cast<Eigen::Index>(j), k);
    }
    return out;
}

BoundaryFunctional boundary_functional(const Mesh& mesh, double sigma)
{
    if (mesh.is_closed()) throw MeshError(MeshErrorKind::NotOpenMesh, -1, "boundary functional needs an open mesh");
    if (!(std::abs(sigma) <= 1.0)) throw std::invalid_argument("|sigma| must not exceed 1");

    BoundaryFunctional bf;
    bf.kind = geometry_kind(mesh);
    bf.sigma = sigma;
    bf.contributions.assign(mesh.num_vertices(), Vec3::Zero());
    const double sine = std::sqrt(std::max(0.0, 1.0 - sigma * sigma));

    if (mesh.dim() == 2) {
        const int start = mesh.boundary().front()[0];
        const int end = mesh.boundary().front()[1];
        // Outward normal of the constraint line at the end point.
        const double side = mesh.vertex(end).x() >= mesh.vertex(start).x() ? 1.0 : -1.0;
        const Vec3 e1 = Vec3::UnitX();
        const Vec3 e2 = Vec3::UnitY();
        for (const auto& [node, outward] : {std::pair{end, side}, std::pair{start, -side}}) {
            Vec3 conormal;
            if (bf.kind == GeometryKind::open2d_substrate) {
                conormal = sigma * outward * e1 - sine * e2;
            } else {
                conormal = sine * outward * e1 + sigma * e2;
            }
            bf.contributions[static_cast<std::size_t>(node)] -= conormal;
        }
    } else {
        const Vec3 e3 = Vec3::UnitZ();
        for (const auto& loop : mesh.boundary()) {
            const std::size_t n = loop.size();
            for (std::size_t i = 0; i < n; ++i) {
                const int a = loop[i];
                const int b = loop[(i + 1) % n];
                const Vec3 edge = mesh.vertex(b) - mesh.vertex(a);
                // Half of int_edge (-cos n_d + sin e_3) for each endpoint; |edge| n_d = edge x e_3.
                const Vec3 half = 0.5 * (-sigma * edge.cross(e3) + sine * edge.norm() * e3);
                bf.contributions[static_cast<std::size_t>(a)] += half;
                bf.contributions[static_cast<std::size_t>(b)] += half;
            }
        }
    }
    return bf;
}

std::vector<Vec3> riesz_representative(const Mesh& mesh, const std::vector<Vec3>& L)
{
    const Eigen::VectorXd omega = lumped_weights(mesh);
    std::vector<Vec3> out(L.size());
    for (std::size_t j = 0; j < L.size(); ++j) out[j] = L[j] / omega(static_cast<Eigen::Index>(j));
    return out;
}

TangentialData compute_T_mu(const Mesh& mesh, const std::vector<Vec3>& L_total)
{
    if (L_total.size() != mesh.num_vertices()) {
        throw MeshError(MeshErrorKind::ArityMismatch, -1, "functional length differs from vertex count");
    }
    const VertexNormals normals = averaged_vertex_normals(mesh);
    TangentialData data;
    data.omega = lumped_weights(mesh);
    data.nu = normals.weighted;
    data.T.resize(mesh.num_vertices());
    data.mu.resize(static_cast<Eigen::Index>(mesh.num_vertices()));
    std::vector<double> sq(mesh.num_vertices());
    for (std::size_t j = 0; j < mesh.num_vertices(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const Vec3& nu = data.nu[j];
        const double mu = L_total[j].dot(nu) / nu.squaredNorm();
        data.mu(jj) = mu;
        data.T[j] = (L_total[j] - mu * nu) / data.omega(jj);
        sq[j] = data.omega(jj) * data.T[j].squaredNorm();
    }
    data.T_norm = std::sqrt(pairwise_sum(sq));
    return data;
}

TangentialData tangential_data(const Mesh& mesh, double sigma)
{
    std::vector<Vec3> L = laplacian_functional(mesh);
    if (!mesh.is_closed()) {
        const BoundaryFunctional bf = boundary_functional(mesh, sigma);
        for (std::size_t j = 0; j < L.size(); ++j) L[j] += bf.contributions[j];
    }
    return compute_T_mu(mesh, L);
}

} // namespace geomflow
