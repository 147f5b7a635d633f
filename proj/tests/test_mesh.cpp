#include "oracle.hpp"
#include "test_meshes.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace geomflow;
using doctest::Approx;

namespace {

template <class F>
void require_mesh_error(MeshErrorKind kind, F&& f)
{
    try {
        f();
        FAIL("expected MeshError");
    } catch (const MeshError& e) {
        CHECK(e.kind() == kind);
    }
}

} // namespace

TEST_CASE("build_mesh rejects malformed input")
{
    const std::vector<Vec3> tri = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    require_mesh_error(MeshErrorKind::InvalidDimension, [&] { build_mesh(4, tri, {{0, 1, 2}}, BoundaryKind::closed); });
    require_mesh_error(MeshErrorKind::IndexOutOfRange, [&] { build_mesh(2, tri, {{0, 3, -1}}, BoundaryKind::closed); });
    require_mesh_error(MeshErrorKind::RepeatedIndex, [&] { build_mesh(2, tri, {{1, 1, -1}}, BoundaryKind::closed); });
    require_mesh_error(MeshErrorKind::DegenerateElement, [&] {
        build_mesh(3, {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)}, {{0, 1, 2}}, BoundaryKind::open_substrate);
    });
    // Two segments both leaving vertex 0 break the orientation of a curve.
    require_mesh_error(MeshErrorKind::InconsistentOrientation, [&] {
        build_mesh(2, tri, {{0, 1, -1}, {0, 2, -1}, {1, 2, -1}}, BoundaryKind::closed);
    });
    // An open curve declared closed.
    CHECK_THROWS_AS(build_mesh(2, tri, {{0, 1, -1}, {1, 2, -1}}, BoundaryKind::closed), MeshError);
    // A closed curve declared open.
    CHECK_THROWS_AS(fixtures::open_curve(tri).with_vertices(tri), MeshError);
}

TEST_CASE("substrate boundary must lie on the constraint plane")
{
    require_mesh_error(MeshErrorKind::BoundaryNotOnSubstrate, [] {
        fixtures::open_curve({Vec3(-1, 0.1, 0), Vec3(0, 1, 0), Vec3(1, 0, 0)});
    });
    require_mesh_error(MeshErrorKind::BoundaryNotOnSubstrate, [] {
        fixtures::open_curve({Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(0.9, 0, 0)}, BoundaryKind::open_vertical_lines, {-1, 1});
    });
}

TEST_CASE("lumped weights partition the total measure")
{
    for (const Mesh& m : {fixtures::ngon(37, 0.2), fixtures::sphere(2, 0.1), fixtures::torus(), fixtures::half_sphere(2)}) {
        const Eigen::VectorXd w = lumped_weights(m);
        CHECK(w.sum() == Approx(m.total_measure()).epsilon(1e-12));
        CHECK(w.minCoeff() > 0.0);
    }
}

TEST_CASE("element normals of generated closed meshes point outward")
{
    for (const Mesh& m : {fixtures::sphere(2), fixtures::ngon(12), fixtures::box(Vec3(1, 6, 1), 0.5, false)}) {
        const auto n = element_normals(m);
        Vec3 center = Vec3::Zero();
        for (const auto& x : m.vertices()) center += x;
        center /= static_cast<double>(m.num_vertices());
        for (std::size_t e = 0; e < m.num_elements(); ++e) {
            Vec3 c = Vec3::Zero();
            for (int k = 0; k < m.dim(); ++k) c += m.vertex(m.elements()[e][static_cast<std::size_t>(k)]);
            c /= m.dim();
            CHECK(n[e].dot(c - center) > 0.0);
        }
    }
}

TEST_CASE("vertex normals")
{
    SUBCASE("diamond vertex normal has unit length and is radial")
    {
        const auto vn = averaged_vertex_normals(fixtures::diamond());
        CHECK(vn.weighted[0].norm() == Approx(1.0).epsilon(1e-14));
        CHECK(vn.unit[0].x() == Approx(1.0));
        CHECK(vn.unit[0].y() == Approx(0.0));
    }
    SUBCASE("regular polygon normals are radial")
    {
        const Mesh m = fixtures::ngon(20);
        const auto vn = averaged_vertex_normals(m);
        for (std::size_t j = 0; j < m.num_vertices(); ++j) {
            CHECK(vn.unit[j].dot(m.vertices()[j].normalized()) == Approx(1.0).epsilon(1e-13));
        }
    }
    SUBCASE("right-angle corner of a square")
    {
        const Mesh sq = fixtures::closed_curve({Vec3(0, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0), Vec3(1, 0, 0)});
        const auto vn = averaged_vertex_normals(sq);
        CHECK(vn.unit[2].x() == Approx(std::sqrt(0.5)));
        CHECK(vn.unit[2].y() == Approx(std::sqrt(0.5)));
    }
    SUBCASE("a curve that doubles back has no normal at the turning vertex")
    {
        const Mesh m = fixtures::closed_curve({Vec3(0, 1, 0), Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 0, 0)});
        require_mesh_error(MeshErrorKind::VanishingVertexNormal, [&] { averaged_vertex_normals(m); });
    }
}

TEST_CASE("stiffness action on small meshes")
{
    SUBCASE("single segment")
    {
        const Mesh m = fixtures::open_curve({Vec3(0, 0, 0), Vec3(2.5, 0, 0)});
        VertexField f(2, 1);
        f << 0.0, 1.0;
        const VertexField L = stiffness_action(m, f);
        CHECK(L(0, 0) == Approx(-1.0 / 2.5));
        CHECK(L(1, 0) == Approx(1.0 / 2.5));
    }
    SUBCASE("uniform straight polyline has zero interior Laplacian")
    {
        std::vector<Vec3> p;
        for (int i = 0; i <= 10; ++i) p.emplace_back(0.1 * i, 0, 0);
        const Mesh m = fixtures::open_curve(p);
        const VertexField L = stiffness_action(m, m.positions());
        for (int j = 1; j < 10; ++j) CHECK(L.row(j).norm() < 1e-13);
    }
    SUBCASE("diamond")
    {
        const Mesh m = fixtures::diamond();
        const VertexField L = stiffness_action(m, m.positions());
        CHECK(L(0, 0) == Approx(std::sqrt(2.0)));
        CHECK(std::abs(L(0, 1)) < 1e-15);
    }
}

TEST_CASE("stiffness matches the dense oracle and is adjoint")
{
    std::mt19937_64 rng(11);
    for (const Mesh& m : {fixtures::ngon(15, 0.3), fixtures::sphere(1, 0.2), fixtures::half_sphere(1)}) {
        const Eigen::MatrixXd dense = oracle::stiffness(m);
        const Eigen::MatrixXd lib = Eigen::MatrixXd(stiffness_matrix(m));
        CHECK((dense - lib).norm() <= 1e-12 * dense.norm());

        const auto n = static_cast<Eigen::Index>(m.num_vertices());
        const Eigen::MatrixXd f = oracle::random_field(n, m.dim(), rng);
        const Eigen::MatrixXd g = oracle::random_field(n, m.dim(), rng);
        const double lhs = (stiffness_action(m, f).array() * g.array()).sum();
        double scale = 0.0;
        const double rhs = oracle::grad_form(m, f, g, &scale);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * scale);

        // Constants are in the kernel.
        const VertexField one = VertexField::Constant(n, m.dim(), 3.7);
        CHECK(stiffness_action(m, one).cwiseAbs().maxCoeff() < 1e-12 * 3.7 * dense.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("lumped inner product is symmetric and bilinear")
{
    std::mt19937_64 rng(5);
    const Mesh m = fixtures::sphere(2, 0.1);
    const auto n = static_cast<Eigen::Index>(m.num_vertices());
    for (int trial = 0; trial < 5; ++trial) {
        const VertexField f = oracle::random_field(n, 3, rng);
        const VertexField g = oracle::random_field(n, 3, rng);
        const VertexField h = oracle::random_field(n, 3, rng);
        const double fg = lumped_inner_product(m, f, g);
        CHECK(fg == Approx(lumped_inner_product(m, g, f)).epsilon(1e-13));
        CHECK(lumped_inner_product(m, VertexField(2.0 * f + h), g) ==
              Approx(2.0 * fg + lumped_inner_product(m, h, g)).epsilon(1e-12));
        const double quad = oracle::lumped(m, [&](const oracle::ElementGeometry&, int j) {
            return oracle::row3(f, j).dot(oracle::row3(g, j));
        });
        CHECK(fg == Approx(quad).epsilon(1e-12));
    }
}

TEST_CASE("corner fields use one-sided element normals")
{
    const Mesh m = fixtures::diamond();
    VertexField chi = VertexField::Ones(4, 1);
    VertexField eta = VertexField::Zero(4, 2);
    eta(0, 0) = 1.0;
    // (chi n_h, eta)^h at (1,0): both adjacent normals have x-component 1/sqrt 2, weight |sigma|/2 each.
    const double v = lumped_inner_product(m, corner_scalar_times_normal(m, chi), corner_values(m, eta));
    CHECK(v == Approx(std::sqrt(2.0) / 2.0 * 2.0 * (1.0 / std::sqrt(2.0))));
}

TEST_CASE("orientation flip negates normals and keeps weights and stiffness")
{
    const Mesh m = fixtures::sphere(1, 0.15);
    std::vector<Element> flipped = m.elements();
    for (auto& e : flipped) std::swap(e[1], e[2]);
    const Mesh f = build_mesh(3, m.vertices(), flipped, BoundaryKind::closed);
    const auto a = averaged_vertex_normals(m);
    const auto b = averaged_vertex_normals(f);
    for (std::size_t j = 0; j < m.num_vertices(); ++j) CHECK((a.weighted[j] + b.weighted[j]).norm() < 1e-15);
    CHECK((lumped_weights(m) - lumped_weights(f)).norm() < 1e-15);
    CHECK((stiffness_action(m, m.positions()) - stiffness_action(f, f.positions())).norm() < 1e-13);
}

TEST_CASE("boundary loops")
{
    SUBCASE("half circle")
    {
        const Mesh m = fixtures::half_circle(16);
        const auto loops = boundary_loop(m);
        REQUIRE(loops.size() == 1);
        REQUIRE(loops[0].nodes.size() == 2);
        CHECK(m.vertex(loops[0].nodes[0]).x() < 0.0);
        CHECK(m.vertex(loops[0].nodes[1]).x() > 0.0);
    }
    SUBCASE("half sphere: one loop on z = 0 with arc-length weights")
    {
        const Mesh m = fixtures::half_sphere(2);
        const auto loops = boundary_loop(m);
        REQUIRE(loops.size() == 1);
        double total = 0.0;
        for (std::size_t i = 0; i < loops[0].nodes.size(); ++i) {
            CHECK(std::abs(m.vertex(loops[0].nodes[i]).z()) < 1e-15);
            total += loops[0].weights[i];
        }
        double perimeter = 0.0;
        const auto& nodes = loops[0].nodes;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            perimeter += (m.vertex(nodes[(i + 1) % nodes.size()]) - m.vertex(nodes[i])).norm();
        CHECK(total == Approx(perimeter).epsilon(1e-14));
    }
    SUBCASE("closed mesh has none")
    {
        require_mesh_error(MeshErrorKind::NotOpenMesh, [] { boundary_loop(fixtures::torus()); });
    }
}

TEST_CASE("substrate area")
{
    CHECK(substrate_area(fixtures::flat_square(3)) == Approx(1.0).epsilon(1e-14));
    const Mesh hs = fixtures::half_sphere(2);
    const std::vector<int> loop = boundary_loop(hs)[0].nodes;
    double shoelace = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const Vec3& a = hs.vertex(loop[i]);
        const Vec3& b = hs.vertex(loop[(i + 1) % loop.size()]);
        shoelace += 0.5 * (a.x() * b.y() - b.x() * a.y());
    }
    CHECK(substrate_area(hs) == Approx(shoelace).epsilon(1e-14));
    const double n = static_cast<double>(loop.size());
    CHECK(substrate_area(hs) == Approx(n / 2.0 * std::sin(2.0 * std::numbers::pi / n)).epsilon(1e-12));
}

TEST_CASE("quality metrics")
{
    CHECK(quality_metrics(fixtures::ngon(9)).edge_ratio == Approx(1.0).epsilon(1e-13));
    const Mesh line = build_mesh(2, {Vec3(0, 0, 0), Vec3(0, 1, 0), Vec3(0, 3, 0)}, {{0, 1, -1}, {1, 2, -1}},
                                 BoundaryKind::open_vertical_lines, {0.0, 0.0});
    CHECK(quality_metrics(line).edge_ratio == Approx(2.0));
    const double s = std::sqrt(3.0) / 2.0;
    const Mesh eq = build_mesh(3, {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, s, 0)}, {{0, 1, 2}}, BoundaryKind::open_substrate);
    CHECK(quality_metrics(eq).min_angle == Approx(std::numbers::pi / 3.0));
}

TEST_CASE("pairwise sum is exact on representable data and order independent of chunking")
{
    std::vector<double> v(1000, 0.1);
    CHECK(pairwise_sum(v) == Approx(100.0).epsilon(1e-14));
    CHECK(pairwise_sum(v.data(), 0) == 0.0);
}

TEST_CASE("with_vertices rejects collapsed elements")
{
    const Mesh m = fixtures::ngon(6);
    std::vector<Vec3> p = m.vertices();
    p[1] = p[0];
    CHECK_THROWS_AS(m.with_vertices(p), MeshError);
}
