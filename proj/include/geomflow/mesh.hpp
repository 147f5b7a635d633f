#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace geomflow {

using Vec3 = Eigen::Vector3d;

/// Vertex indices of one simplex. Segments (ambient dimension 2) use the
/// first two slots; the third is -1.
using Element = std::array<int, 3>;

/// Nodal coefficients of a piecewise-linear field, one row per vertex.
/// Scalar fields have one column, vector fields have `dim` columns.
using VertexField = Eigen::MatrixXd;

enum class BoundaryKind {
    closed,
    open_substrate,      // contact points/line constrained to the plane x_d = 0
    open_vertical_lines, // 2D only: endpoints constrained to x = left / x = right
};

struct VerticalWalls {
    double left = 0.0;
    double right = 0.0;
};

enum class MeshErrorKind {
    InvalidDimension,
    IndexOutOfRange,
    RepeatedIndex,
    DegenerateElement,
    InconsistentOrientation,
    NonManifold,
    BoundaryMismatch,
    NotOpenMesh,
    NonSimpleBoundary,
    BoundaryNotOnSubstrate,
    VanishingVertexNormal,
    ArityMismatch,
};

const char* to_string(MeshErrorKind kind);

class MeshError : public std::runtime_error {
public:
    MeshError(MeshErrorKind kind, int index, const std::string& what);

    MeshErrorKind kind() const { return m_kind; }
    /// Offending element or vertex index, -1 when not applicable.
    int index() const { return m_index; }

private:
    MeshErrorKind m_kind;
    int m_index;
};

/// A (d-1)-dimensional simplicial complex in R^d: a polyline for d = 2, a
/// triangle surface for d = 3. Immutable after construction; positions of a
/// new time level are installed through `with_vertices`, which keeps the
/// topology and re-checks element nondegeneracy.
///
/// Vertices are stored as 3-vectors; for d = 2 the third coordinate is zero.
class Mesh {
public:
    int dim() const { return m_dim; }
    int nodes_per_element() const { return m_dim; }
    std::size_t num_vertices() const { return m_vertices.size(); }
    std::size_t num_elements() const { return m_elements.size(); }

    const std::vector<Vec3>& vertices() const { return m_vertices; }
    const Vec3& vertex(int j) const { return m_vertices[static_cast<std::size_t>(j)]; }
    const std::vector<Element>& elements() const { return m_elements; }

    BoundaryKind boundary_kind() const { return m_kind; }
    bool is_closed() const { return m_kind == BoundaryKind::closed; }
    VerticalWalls walls() const { return m_walls; }

    /// Boundary vertex lists. For d = 2 open meshes: one list holding the
    /// start and end vertex of the polyline. For d = 3: one list per boundary
    /// loop, ordered along the orientation induced by the triangles.
    const std::vector<std::vector<int>>& boundary() const { return m_boundary; }
    bool is_boundary_vertex(int j) const { return m_on_boundary[static_cast<std::size_t>(j)] != 0; }

    /// Coordinate that is held fixed at boundary vertices (-1 for closed meshes).
    int constrained_coordinate() const;

    /// Measure (length or area) of one element.
    double element_measure(int e) const;
    double total_measure() const;

    /// Same topology and boundary bookkeeping at new positions.
    Mesh with_vertices(std::vector<Vec3> positions) const;

    /// Vertex positions as a (num_vertices x dim) field.
    VertexField positions() const;

private:
    friend Mesh build_mesh(int, std::vector<Vec3>, std::vector<Element>, BoundaryKind, VerticalWalls);

    int m_dim = 3;
    std::vector<Vec3> m_vertices;
    std::vector<Element> m_elements;
    BoundaryKind m_kind = BoundaryKind::closed;
    VerticalWalls m_walls;
    std::vector<std::vector<int>> m_boundary;
    std::vector<char> m_on_boundary;
};

/// Validate and assemble a mesh. Throws MeshError on out-of-range or repeated
/// indices, nonpositive element measure, non-manifold connectivity,
/// inconsistent orientation, or a boundary that does not match `kind`.
Mesh build_mesh(
    int dim,
    std::vector<Vec3> vertices,
    std::vector<Element> elements,
    BoundaryKind kind,
    VerticalWalls walls = {});

/// Values of a (possibly discontinuous) field at element corners:
/// value(e, k) is the one-sided limit at corner k taken from inside element e.
class CornerField {
public:
    CornerField(std::size_t num_elements, int corners, int arity);

    int arity() const { return m_arity; }
    int corners() const { return m_corners; }
    std::size_t num_elements() const { return m_num_elements; }

    double* value(std::size_t e, int k) { return &m_data[(e * m_corners + k) * m_arity]; }
    const double* value(std::size_t e, int k) const { return &m_data[(e * m_corners + k) * m_arity]; }

private:
    std::size_t m_num_elements;
    int m_corners;
    int m_arity;
    std::vector<double> m_data;
};

/// Restriction of a continuous nodal field to element corners.
CornerField corner_values(const Mesh& mesh, const VertexField& f);
/// chi * n_h with the elementwise normal, for a scalar nodal chi.
CornerField corner_scalar_times_normal(const Mesh& mesh, const VertexField& chi);
/// v . n_h with the elementwise normal, for a vector nodal v.
CornerField corner_dot_normal(const Mesh& mesh, const VertexField& v);

/// Mass-lumped inner product (1/d) sum_l |sigma_l| sum_k (f.g)(q_lk^-).
double lumped_inner_product(const Mesh& mesh, const CornerField& f, const CornerField& g);
double lumped_inner_product(const Mesh& mesh, const VertexField& f, const VertexField& g);

/// omega_j = (1/d) sum over elements containing j of |sigma|.
Eigen::VectorXd lumped_weights(const Mesh& mesh);

/// Unit normal per element. d = 2: n = (-t_y, t_x) for the segment tangent t.
/// d = 3: normalized (p1 - p0) x (p2 - p0).
std::vector<Vec3> element_normals(const Mesh& mesh);

struct VertexNormals {
    std::vector<Vec3> weighted; // nu_j = (1/d) sum |sigma| n_sigma
    std::vector<Vec3> unit;     // nu_j / |nu_j|
};

/// Area-weighted vertex normals. Throws VanishingVertexNormal when
/// |nu_j| <= eps * omega_j.
VertexNormals averaged_vertex_normals(const Mesh& mesh, double eps = 1e-12);

/// Scalar P1 stiffness matrix K_ij = int grad phi_i . grad phi_j.
Eigen::SparseMatrix<double> stiffness_matrix(const Mesh& mesh);

/// L = K f, applied componentwise for vector fields.
VertexField stiffness_action(const Mesh& mesh, const VertexField& f);

struct BoundaryLoop {
    std::vector<int> nodes;
    /// Arc-length weight per node: half the summed length of the adjacent
    /// boundary edges (d = 3), or 1 for contact points (d = 2).
    std::vector<double> weights;
};

/// Ordered boundary loop(s) with arc-length weights. Throws NotOpenMesh.
std::vector<BoundaryLoop> boundary_loop(const Mesh& mesh);

/// Shoelace area enclosed by the boundary loop(s) of an open 3D mesh on z = 0.
/// Positive for loops running counterclockwise seen from +z.
double substrate_area(const Mesh& mesh, double tol = 1e-12);

struct QualityReport {
    double max_edge = 0.0;
    double min_edge = 0.0;
    double edge_ratio = 1.0;
    double min_element_measure = 0.0;
    /// Smallest interior angle (radians); d = 3 only, NaN otherwise.
    double min_angle = 0.0;
};

QualityReport quality_metrics(const Mesh& mesh);

/// Deterministic pairwise summation.
double pairwise_sum(const double* values, std::size_t n);
inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

} // namespace geomflow
