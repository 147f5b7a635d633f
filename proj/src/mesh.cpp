#include "geomflow/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <utility>

namespace geomflow {

const char* to_string(MeshErrorKind kind)
{
    switch (kind) {
    case MeshErrorKind::InvalidDimension: return "InvalidDimension";
    case MeshErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case MeshErrorKind::RepeatedIndex: return "RepeatedIndex";
    case MeshErrorKind::DegenerateElement: return "DegenerateElement";
    case MeshErrorKind::InconsistentOrientation: return "InconsistentOrientation";
    case MeshErrorKind::NonManifold: return "NonManifold";
    case MeshErrorKind::BoundaryMismatch: return "BoundaryMismatch";
    case MeshErrorKind::NotOpenMesh: return "NotOpenMesh";
    case MeshErrorKind::NonSimpleBoundary: return "NonSimpleBoundary";
    case MeshErrorKind::BoundaryNotOnSubstrate: return "BoundaryNotOnSubstrate";
    case MeshErrorKind::VanishingVertexNormal: return "VanishingVertexNormal";
    case MeshErrorKind::ArityMismatch: return "ArityMismatch";
    }
    return "Unknown";
}

MeshError::MeshError(MeshErrorKind kind, int index, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what)
    , m_kind(kind)
    , m_index(index)
{}

namespace {

double simplex_measure(int dim, const Vec3& a, const Vec3& b, const Vec3& c)
{
    if (dim == 2) return (b - a).norm();
    return 0.5 * (b - a).cross(c - a).norm();
}

// Boundary positions must sit on their constraint set up to this tolerance.
constexpr double kConstraintTol = 1e-10;

} // namespace

double pairwise_sum(const double* values, std::size_t n)
{
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += values[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

int Mesh::constrained_coordinate() const
{
    switch (m_kind) {
    case BoundaryKind::closed: return -1;
    case BoundaryKind::open_substrate: return m_dim - 1;
    case BoundaryKind::open_vertical_lines: return 0;
    }
    return -1;
}

double Mesh::element_measure(int e) const
{
    const Element& el = m_elements[static_cast<std::size_t>(e)];
    const Vec3& a = vertex(el[0]);
    const Vec3& b = vertex(el[1]);
    return simplex_measure(m_dim, a, b, m_dim == 3 ? vertex(el[2]) : a);
}

double Mesh::total_measure() const
{
    std::vector<double> m(m_elements.size());
    for (std::size_t e = 0; e < m_elements.size(); ++e) m[e] = element_measure(static_cast<int>(e));
    return pairwise_sum(m);
}

Mesh Mesh::with_vertices(std::vector<Vec3> positions) const
{
    if (positions.size() != m_vertices.size()) {
        throw MeshError(MeshErrorKind::IndexOutOfRange, -1, "vertex count changed");
    }
    Mesh out = *this;
    out.m_vertices = std::move(positions);
    for (std::size_t e = 0; e < out.m_elements.size(); ++e) {
        const double m = out.element_measure(static_cast<int>(e));
        if (!(m > 0.0)) {
            throw MeshError(
                MeshErrorKind::DegenerateElement,
                static_cast<int>(e),
                "element " + std::to_string(e) + " has measure " + std::to_string(m));
        }
    }
    return out;
}

VertexField Mesh::positions() const
{
    VertexField p(static_cast<Eigen::Index>(m_vertices.size()), m_dim);
    for (std::size_t j = 0; j < m_vertices.size(); ++j) {
        for (int k = 0; k < m_dim; ++k) p(static_cast<Eigen::Index>(j), k) = m_vertices[j][k];
    }
    return p;
}

Mesh build_mesh(
    int dim,
    std::vector<Vec3> vertices,
    std::vector<Element> elements,
    BoundaryKind kind,
    VerticalWalls walls)
{
    if (dim != 2 && dim != 3) {
        throw MeshError(MeshErrorKind::InvalidDimension, -1, "ambient dimension must be 2 or 3");
    }
    if (kind == BoundaryKind::open_vertical_lines && dim != 2) {
        throw MeshError(MeshErrorKind::InvalidDimension, -1, "vertical-line constraints are 2D only");
    }
    const int nv = static_cast<int>(vertices.size());
    const int npe = dim;

    for (std::size_t e = 0; e < elements.size(); ++e) {
        auto& el = elements[e];
        if (dim == 2) el[2] = -1;
        for (int k = 0; k < npe; ++k) {
            if (el[k] < 0 || el[k] >= nv) {
                throw MeshError(
                    MeshErrorKind::IndexOutOfRange,
                    static_cast<int>(e),
                    "element " + std::to_string(e) + " references vertex " + std::to_string(el[k]));
            }
            for (int l = 0; l < k; ++l) {
                if (el[k] == el[l]) {
                    throw MeshError(
                        MeshErrorKind::RepeatedIndex,
                        static_cast<int>(e),
                        "element " + std::to_string(e) + " repeats vertex " + std::to_string(el[k]));
                }
            }
        }
    }

    Mesh mesh;
    mesh.m_dim = dim;
    mesh.m_vertices = std::move(vertices);
    if (dim == 2) {
        for (auto& v : mesh.m_vertices) v.z() = 0.0;
    }
    mesh.m_elements = std::move(elements);
    mesh.m_kind = kind;
    mesh.m_walls = walls;
    mesh.m_on_boundary.assign(static_cast<std::size_t>(nv), 0);

    for (std::size_t e = 0; e < mesh.m_elements.size(); ++e) {
        const double m = mesh.element_measure(static_cast<int>(e));
        if (!(m > 0.0)) {
            throw MeshError(
                MeshErrorKind::DegenerateElement,
                static_cast<int>(e),
                "element " + std::to_string(e) + " has measure " + std::to_string(m));
        }
    }

    if (dim == 2) {
        std::vector<int> out_deg(static_cast<std::size_t>(nv), 0);
        std::vector<int> in_deg(static_cast<std::size_t>(nv), 0);
        std::vector<int> next(static_cast<std::size_t>(nv), -1);
        for (const auto& el : mesh.m_elements) {
            ++out_deg[static_cast<std::size_t>(el[0])];
            ++in_deg[static_cast<std::size_t>(el[1])];
            next[static_cast<std::size_t>(el[0])] = el[1];
        }
        int start = -1;
        int end = -1;
        for (int j = 0; j < nv; ++j) {
            const int o = out_deg[static_cast<std::size_t>(j)];
            const int i = in_deg[static_cast<std::size_t>(j)];
            if (o + i > 2) {
                throw MeshError(MeshErrorKind::NonManifold, j, "vertex " + std::to_string(j) + " has more than two segments");
            }
            if (o > 1 || i > 1) {
                throw MeshError(
                    MeshErrorKind::InconsistentOrientation, j, "segments at vertex " + std::to_string(j) + " are not chained");
            }
            if (o == 1 && i == 0) {
                if (start >= 0) throw MeshError(MeshErrorKind::NonManifold, j, "polyline has several components");
                start = j;
            }
            if (o == 0 && i == 1) {
                if (end >= 0) throw MeshError(MeshErrorKind::NonManifold, j, "polyline has several components");
                end = j;
            }
        }
        if (kind == BoundaryKind::closed) {
            if (start >= 0 || end >= 0) {
                throw MeshError(MeshErrorKind::BoundaryMismatch, start, "closed curve has endpoints");
            }
        } else {
            if (start < 0 || end < 0) {
                throw MeshError(MeshErrorKind::BoundaryMismatch, -1, "open curve needs two endpoints");
            }
            std::size_t visited = 0;
            for (int j = start; j != end; j = next[static_cast<std::size_t>(j)]) ++visited;
            if (visited != mesh.m_elements.size()) {
                throw MeshError(MeshErrorKind::NonManifold, -1, "polyline has several components");
            }
            mesh.m_boundary.push_back({start, end});
        }
    } else {
        // Directed edge -> number of occurrences; undirected edge -> triangles.
        std::map<std::pair<int, int>, int> directed;
        std::map<std::pair<int, int>, int> undirected;
        for (std::size_t e = 0; e < mesh.m_elements.size(); ++e) {
            const auto& el = mesh.m_elements[e];
            for (int k = 0; k < 3; ++k) {
                const int a = el[k];
                const int b = el[(k + 1) % 3];
                if (++directed[{a, b}] > 1) {
                    throw MeshError(
                        MeshErrorKind::InconsistentOrientation,
                        static_cast<int>(e),
                        "edge (" + std::to_string(a) + "," + std::to_string(b) + ") traversed twice in the same direction");
                }
                if (++undirected[{std::min(a, b), std::max(a, b)}] > 2) {
                    throw MeshError(MeshErrorKind::NonManifold, static_cast<int>(e), "edge shared by more than two triangles");
                }
            }
        }
        std::map<int, int> next;
        for (const auto& [edge, count] : directed) {
            if (directed.count({edge.second, edge.first}) == 0) {
                if (next.count(edge.first) != 0) {
                    throw MeshError(MeshErrorKind::NonSimpleBoundary, edge.first, "boundary vertex with two outgoing edges");
                }
                next[edge.first] = edge.second;
            }
        }
        if (kind == BoundaryKind::closed && !next.empty()) {
            throw MeshError(MeshErrorKind::BoundaryMismatch, next.begin()->first, "closed surface has boundary edges");
        }
        if (kind != BoundaryKind::closed && next.empty()) {
            throw MeshError(MeshErrorKind::BoundaryMismatch, -1, "open surface has no boundary");
        }
        std::map<int, char> used;
        for (const auto& [v0, v1] : next) {
            if (used.count(v0) != 0) continue;
            std::vector<int> loop;
            int v = v0;
            while (used.count(v) == 0) {
                used[v] = 1;
                loop.push_back(v);
                auto it = next.find(v);
                if (it == next.end()) {
                    throw MeshError(MeshErrorKind::NonSimpleBoundary, v, "boundary does not close");
                }
                v = it->second;
            }
            if (v != v0) throw MeshError(MeshErrorKind::NonSimpleBoundary, v, "boundary loops touch");
            mesh.m_boundary.push_back(std::move(loop));
        }
    }

    for (const auto& loop : mesh.m_boundary) {
        for (int j : loop) mesh.m_on_boundary[static_cast<std::size_t>(j)] = 1;
    }

    // Boundary vertices must lie on their constraint set.
    if (kind == BoundaryKind::open_substrate) {
        for (const auto& loop : mesh.m_boundary) {
            for (int j : loop) {
                if (std::abs(mesh.vertex(j)[dim - 1]) > kConstraintTol) {
                    throw MeshError(MeshErrorKind::BoundaryNotOnSubstrate, j, "boundary vertex off the substrate plane");
                }
            }
        }
    } else if (kind == BoundaryKind::open_vertical_lines) {
        for (int j : mesh.m_boundary.front()) {
            const double x = mesh.vertex(j).x();
            if (std::abs(x - walls.left) > kConstraintTol && std::abs(x - walls.right) > kConstraintTol) {
                throw MeshError(MeshErrorKind::BoundaryNotOnSubstrate, j, "endpoint not on a wall");
            }
        }
    }
    return mesh;
}

CornerField::CornerField(std::size_t num_elements, int corners, int arity)
    : m_num_elements(num_elements)
    , m_corners(corners)
    , m_arity(arity)
    , m_data(num_elements * static_cast<std::size_t>(corners * arity), 0.0)
{}

CornerField corner_values(const Mesh& mesh, const VertexField& f)
{
    if (f.rows() != static_cast<Eigen::Index>(mesh.num_vertices())) {
        throw MeshError(MeshErrorKind::ArityMismatch, -1, "field length differs from vertex count");
    }
    const int arity = static_cast<int>(f.cols());
    CornerField out(mesh.num_elements(), mesh.nodes_per_element(), arity);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        for (int k = 0; k < mesh.nodes_per_element(); ++k) {
            double* v = out.value(e, k);
            const int j = mesh.elements()[e][k];
            for (int a = 0; a < arity; ++a) v[a] = f(j, a);
        }
    }
    return out;
}

CornerField corner_scalar_times_normal(const Mesh& mesh, const VertexField& chi)
{
    if (chi.cols() != 1 || chi.rows() != static_cast<Eigen::Index>(mesh.num_vertices())) {
        throw MeshError(MeshErrorKind::ArityMismatch, -1, "expected a scalar nodal field");
    }
    const auto normals = element_normals(mesh);
    const int d = mesh.dim();
    CornerField out(mesh.num_elements(), d, d);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        for (int k = 0; k < d; ++k) {
            double* v = out.value(e, k);
            const double s = chi(mesh.elements()[e][k], 0);
            for (int a = 0; a < d; ++a) v[a] = s * normals[e][a];
        }
    }
    return out;
}

CornerField corner_dot_normal(const Mesh& mesh, const VertexField& f)
{
    const int d = mesh.dim();
    if (f.cols() != d || f.rows() != static_cast<Eigen::Index>(mesh.num_vertices())) {
        throw MeshError(MeshErrorKind::ArityMismatch, -1, "expected a vector nodal field");
    }
    const auto normals = element_normals(mesh);
    CornerField out(mesh.num_elements(), d, 1);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        for (int k = 0; k < d; ++k) {
            const int j = mesh.elements()[e][k];
            double s = 0.0;
            for (int a = 0; a < d; ++a) s += f(j, a) * normals[e][a];
            *out.value(e, k) = s;
        }
    }
    return out;
}

double lumped_inner_product(const Mesh& mesh, const CornerField& f, const CornerField& g)
{
    if (f.arity() != g.arity() || f.num_elements() != mesh.num_elements() || g.num_elements() != mesh.num_elements()) {
        throw MeshError(MeshErrorKind::ArityMismatch, -1, "incompatible corner fields");
    }
    const int d = mesh.dim();
    std::vector<double> contrib(mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) {
            const double* a = f.value(e, k);
            const double* b = g.value(e, k);
            for (int c = 0; c < f.arity(); ++c) s += a[c] * b[c];
        }
        contrib[e] = mesh.element_measure(static_cast<int>(e)) * s / d;
    }
    return pairwise_sum(contrib);
}

double lumped_inner_product(const Mesh& mesh, const VertexField& f, const VertexField& g)
{
    if (f.cols() != g.cols()) throw MeshError(MeshErrorKind::ArityMismatch, -1, "arity mismatch");
    return lumped_inner_product(mesh, corner_values(mesh, f), corner_values(mesh, g));
}

Eigen::VectorXd lumped_weights(const Mesh& mesh)
{
    const int d = mesh.dim();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const double m = mesh.element_measure(static_cast<int>(e)) / d;
        for (int k = 0; k < d; ++k) w(mesh.elements()[e][k]) += m;
    }
    return w;
}

std::vector<Vec3> element_normals(const Mesh& mesh)
{
    std::vector<Vec3> normals(mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.elements()[e];
        Vec3 n;
        if (mesh.dim() == 2) {
            const Vec3 t = mesh.vertex(el[1]) - mesh.vertex(el[0]);
            n = Vec3(-t.y(), t.x(), 0.0);
        } else {
            n = (mesh.vertex(el[1]) - mesh.vertex(el[0])).cross(mesh.vertex(el[2]) - mesh.vertex(el[0]));
        }
        const double len = n.norm();
        if (!(len > 0.0)) {
            throw MeshError(MeshErrorKind::DegenerateElement, static_cast<int>(e), "zero-measure element has no normal");
        }
        normals[e] = n / len;
    }
    return normals;
}

VertexNormals averaged_vertex_normals(const Mesh& mesh, double eps)
{
    const int d = mesh.dim();
    const auto normals = element_normals(mesh);
    const Eigen::VectorXd omega = lumped_weights(mesh);
    VertexNormals out;
    out.weighted.assign(mesh.num_vertices(), Vec3::Zero());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const Vec3 contrib = mesh.element_measure(static_cast<int>(e)) / d * normals[e];
        for (int k = 0; k < d; ++k) out.weighted[static_cast<std::size_t>(mesh.elements()[e][k])] += contrib;
    }
    out.unit.resize(mesh.num_vertices());
    for (std::size_t j = 0; j < mesh.num_vertices(); ++j) {
        const double len = out.weighted[j].norm();
        if (!(len > eps * omega(static_cast<Eigen::Index>(j)))) {
            throw MeshError(
                MeshErrorKind::VanishingVertexNormal,
                static_cast<int>(j),
                "averaged normal vanishes at vertex " + std::to_string(j));
        }
        out.unit[j] = out.weighted[j] / len;
    }
    return out;
}

Eigen::SparseMatrix<double> stiffness_matrix(const Mesh& mesh)
{
    const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(mesh.num_elements() * 9);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.elements()[e];
        const double m = mesh.element_measure(static_cast<int>(e));
        if (!(m > 0.0)) {
            throw MeshError(MeshErrorKind::DegenerateElement, static_cast<int>(e), "zero-measure element");
        }
        if (mesh.dim() == 2) {
            const double k = 1.0 / m;
            triplets.emplace_back(el[0], el[0], k);
            triplets.emplace_back(el[1], el[1], k);
            triplets.emplace_back(el[0], el[1], -k);
            triplets.emplace_back(el[1], el[0], -k);
        } else {
            // Edge opposite corner i, oriented along the triangle.
            const std::array<Vec3, 3> opp = {
                mesh.vertex(el[2]) - mesh.vertex(el[1]),
                mesh.vertex(el[0]) - mesh.vertex(el[2]),
                mesh.vertex(el[1]) - mesh.vertex(el[0]),
            };
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    triplets.emplace_back(el[i], el[j], opp[i].dot(opp[j]) / (4.0 * m));
                }
            }
        }
    }
    Eigen::SparseMatrix<double> K(n, n);
    K.setFromTriplets(triplets.begin(), triplets.end());
    return K;
}

VertexField stiffness_action(const Mesh& mesh, const VertexField& f)
{
    if (f.rows() != static_cast<Eigen::Index>(mesh.num_vertices())) {
        throw MeshError(MeshErrorKind::ArityMismatch, -1, "field length differs from vertex count");
    }
    return stiffness_matrix(mesh) * f;
}

std::vector<BoundaryLoop> boundary_loop(const Mesh& mesh)
{
    if (mesh.is_closed()) throw MeshError(MeshErrorKind::NotOpenMesh, -1, "mesh has no boundary");
    std::vector<BoundaryLoop> loops;
    for (const auto& nodes : mesh.boundary()) {
        BoundaryLoop loop;
        loop.nodes = nodes;
        if (mesh.dim() == 2) {
            loop.weights.assign(nodes.size(), 1.0);
        } else {
            const std::size_t n = nodes.size();
            loop.weights.assign(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double len = (mesh.vertex(nodes[(i + 1) % n]) - mesh.vertex(nodes[i])).norm();
                loop.weights[i] += 0.5 * len;
                loop.weights[(i + 1) % n] += 0.5 * len;
            }
        }
        loops.push_back(std::move(loop));
    }
    return loops;
}

double substrate_area(const Mesh& mesh, double tol)
{
    if (mesh.dim() != 3) throw MeshError(MeshErrorKind::InvalidDimension, -1, "substrate area needs a surface in R^3");
    if (mesh.is_closed()) throw MeshError(MeshErrorKind::NotOpenMesh, -1, "mesh has no boundary");
    std::vector<double> terms;
    for (const auto& loop : mesh.boundary()) {
        const std::size_t n = loop.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3& a = mesh.vertex(loop[i]);
            const Vec3& b = mesh.vertex(loop[(i + 1) % n]);
            if (std::abs(a.z()) > tol) {
                throw MeshError(MeshErrorKind::BoundaryNotOnSubstrate, loop[i], "boundary vertex off z = 0");
            }
            terms.push_back(0.5 * (a.x() * b.y() - b.x() * a.y()));
        }
    }
    return pairwise_sum(terms);
}

QualityReport quality_metrics(const Mesh& mesh)
{
    QualityReport q;
    q.max_edge = 0.0;
    q.min_edge = std::numeric_limits<double>::infinity();
    q.min_element_measure = std::numeric_limits<double>::infinity();
    q.min_angle = mesh.dim() == 3 ? std::numbers::pi : std::numeric_limits<double>::quiet_NaN();
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.elements()[e];
        q.min_element_measure = std::min(q.min_element_measure, mesh.element_measure(static_cast<int>(e)));
        const int nedges = mesh.dim() == 2 ? 1 : 3;
        for (int k = 0; k < nedges; ++k) {
            const double len = (mesh.vertex(el[(k + 1) % mesh.dim()]) - mesh.vertex(el[k])).norm();
            q.max_edge = std::max(q.max_edge, len);
            q.min_edge = std::min(q.min_edge, len);
        }
        if (mesh.dim() == 3) {
            for (int k = 0; k < 3; ++k) {
                const Vec3 u = mesh.vertex(el[(k + 1) % 3]) - mesh.vertex(el[k]);
                const Vec3 w = mesh.vertex(el[(k + 2) % 3]) - mesh.vertex(el[k]);
                const double angle = std::atan2(u.cross(w).norm(), u.dot(w));
                q.min_angle = std::min(q.min_angle, angle);
            }
        }
    }
    q.edge_ratio = q.max_edge / q.min_edge;
    return q;
}

} // namespace geomflow
