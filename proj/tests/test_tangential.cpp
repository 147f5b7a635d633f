#include "tangent_check.hpp"
#include "test_meshes.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace geomflow;
using doctest::Approx;

TEST_CASE("tangent system satisfies its weak form and matches the dense solve")
{
    const std::vector<Mesh> meshes = {fixtures::diamond(), fixtures::ngon(24), fixtures::ngon(40, 0.15),
                                      fixtures::octahedron(), fixtures::sphere(2, 0.1), fixtures::alternating_curve(8)};
    for (std::size_t i = 0; i < meshes.size(); ++i) {
        CAPTURE(i);
        const auto r = tangent_check::run(meshes[i], 20, 100 + i);
        CHECK(r.line1 <= 1e-11);
        CHECK(r.line2 <= 1e-11);
        CHECK(r.dense_T <= 1e-10);
        CHECK(r.dense_mu <= 1e-10);
    }
}

TEST_CASE("nodal invariants of the tangential data")
{
    for (const Mesh& m : {fixtures::ngon(30, 0.2), fixtures::sphere(2, 0.2), fixtures::torus()}) {
        const TangentialData td = tangential_data(m);
        const auto L = laplacian_functional(m);
        double norm2 = 0.0;
        for (std::size_t j = 0; j < m.num_vertices(); ++j) {
            CHECK(std::abs(td.T[j].dot(td.nu[j])) <= 1e-12 * std::max(1.0, L[j].norm()));
            CHECK((td.omega(static_cast<Eigen::Index>(j)) * td.T[j] + td.mu(static_cast<Eigen::Index>(j)) * td.nu[j] - L[j]).norm() <=
                  1e-12 * std::max(1.0, L[j].norm()));
            norm2 += td.omega(static_cast<Eigen::Index>(j)) * td.T[j].squaredNorm();
        }
        CHECK(td.T_norm == Approx(std::sqrt(norm2)).epsilon(1e-13));
    }
}

TEST_CASE("known tangential data")
{
    SUBCASE("diamond: no tangential part and |mu| = sqrt 2")
    {
        const TangentialData td = tangential_data(fixtures::diamond());
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(td.T[j].norm() < 1e-14);
            CHECK(std::abs(td.mu(static_cast<Eigen::Index>(j))) == Approx(std::sqrt(2.0)));
        }
    }
    SUBCASE("regular polygon: T vanishes and mu is constant")
    {
        const TangentialData td = tangential_data(fixtures::ngon(17));
        CHECK(td.T_norm < 1e-13);
        CHECK(td.mu.maxCoeff() - td.mu.minCoeff() < 1e-12);
    }
    SUBCASE("alternating edge lengths: T points toward the shorter edge")
    {
        const Mesh m = fixtures::alternating_curve(6);
        const TangentialData td = tangential_data(m);
        const auto n = static_cast<int>(m.num_vertices());
        for (int j = 0; j < n; ++j) {
            const Vec3 prev = m.vertex((j + n - 1) % n) - m.vertex(j);
            const Vec3 next = m.vertex((j + 1) % n) - m.vertex(j);
            const Vec3 shorter = prev.norm() < next.norm() ? prev : next;
            CHECK(td.T[static_cast<std::size_t>(j)].norm() > 1e-3);
            CHECK(td.T[static_cast<std::size_t>(j)].dot(shorter) > 0.0);
        }
    }
    SUBCASE("uniform straight open polyline: zero interior data")
    {
        std::vector<Vec3> p;
        for (int i = 0; i <= 8; ++i) p.emplace_back(-1.0 + 0.25 * i, 0.0, 0.0);
        const Mesh m = fixtures::open_curve(p);
        const TangentialData td = compute_T_mu(m, laplacian_functional(m));
        for (int j = 1; j < 8; ++j) {
            CHECK(td.T[static_cast<std::size_t>(j)].norm() < 1e-14);
            CHECK(std::abs(td.mu(j)) < 1e-14);
        }
    }
}

TEST_CASE("rigid motions")
{
    SUBCASE("curves")
    {
        const Mesh m = fixtures::ngon(21, 0.3);
        const Mesh moved = fixtures::transformed(m, fixtures::rotation_z(0.8), Vec3(3.0, -2.0, 0.0));
        const TangentialData a = tangential_data(m);
        const TangentialData b = tangential_data(moved);
        const Eigen::Matrix3d R = fixtures::rotation_z(0.8);
        for (std::size_t j = 0; j < m.num_vertices(); ++j) {
            CHECK((R * a.T[j] - b.T[j]).norm() < 1e-12);
            CHECK(a.mu(static_cast<Eigen::Index>(j)) == Approx(b.mu(static_cast<Eigen::Index>(j))).epsilon(1e-12));
        }
    }
    SUBCASE("surfaces")
    {
        const Mesh m = fixtures::sphere(2, 0.2);
        const Eigen::Matrix3d R = fixtures::rotation_3d();
        const Mesh moved = fixtures::transformed(m, R, Vec3(0.5, 1.0, -4.0));
        const TangentialData a = tangential_data(m);
        const TangentialData b = tangential_data(moved);
        for (std::size_t j = 0; j < m.num_vertices(); ++j) {
            CHECK((R * a.T[j] - b.T[j]).norm() < 1e-12);
            CHECK(a.mu(static_cast<Eigen::Index>(j)) == Approx(b.mu(static_cast<Eigen::Index>(j))).epsilon(1e-12));
        }
    }
}

TEST_CASE("permuting vertex labels permutes the data")
{
    const Mesh m = fixtures::sphere(1, 0.2);
    const auto n = static_cast<int>(m.num_vertices());
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = (7 * i + 3) % n;
    std::vector<Vec3> pts(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pts[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = m.vertex(i);
    std::vector<Element> els;
    for (auto e : m.elements()) els.push_back({perm[static_cast<std::size_t>(e[0])], perm[static_cast<std::size_t>(e[1])], perm[static_cast<std::size_t>(e[2])]});
    const Mesh p = build_mesh(3, pts, els, BoundaryKind::closed);
    const TangentialData a = tangential_data(m);
    const TangentialData b = tangential_data(p);
    for (int i = 0; i < n; ++i) {
        CHECK((a.T[static_cast<std::size_t>(i)] - b.T[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]).norm() < 1e-13);
    }
}

TEST_CASE("boundary functional")
{
    SUBCASE("half circle with neutral wetting acts along e2 at the endpoints only")
    {
        const Mesh m = fixtures::half_circle(16);
        const BoundaryFunctional bf = boundary_functional(m, 0.0);
        for (std::size_t j = 0; j < m.num_vertices(); ++j) {
            if (!m.is_boundary_vertex(static_cast<int>(j))) {
                CHECK(bf.contributions[j].norm() == 0.0);
            } else {
                CHECK(std::abs(bf.contributions[j].x()) < 1e-15);
                CHECK(std::abs(bf.contributions[j].y()) == Approx(1.0));
            }
        }
    }
    SUBCASE("half circle with full wetting acts along e1")
    {
        const Mesh m = fixtures::half_circle(16);
        const BoundaryFunctional bf = boundary_functional(m, 1.0);
        for (const auto& loop : m.boundary()) {
            for (int j : loop) {
                CHECK(std::abs(bf.contributions[static_cast<std::size_t>(j)].x()) == Approx(1.0));
                CHECK(std::abs(bf.contributions[static_cast<std::size_t>(j)].y()) < 1e-15);
            }
        }
    }
    SUBCASE("a 90 degree half circle is consistent with its own contact angle")
    {
        // The exact conormal at the contact points is vertical, so the corrected
        // functional leaves only a normal component there.
        const Mesh m = fixtures::half_circle(64);
        const TangentialData td = tangential_data(m, 0.0);
        for (const auto& loop : m.boundary()) {
            for (int j : loop) CHECK(td.T[static_cast<std::size_t>(j)].norm() < 0.05);
        }
    }
    SUBCASE("half sphere at 90 degrees: sin theta line integral with arc-length weights")
    {
        const Mesh m = fixtures::half_sphere(2);
        const BoundaryFunctional bf = boundary_functional(m, 0.0);
        const auto loops = boundary_loop(m);
        for (std::size_t i = 0; i < loops[0].nodes.size(); ++i) {
            const Vec3 c = bf.contributions[static_cast<std::size_t>(loops[0].nodes[i])];
            CHECK(std::hypot(c.x(), c.y()) < 1e-15);
            CHECK(std::abs(c.z()) == Approx(loops[0].weights[i]).epsilon(1e-14));
        }
    }
    SUBCASE("errors")
    {
        CHECK_THROWS_AS(boundary_functional(fixtures::ngon(8), 0.0), MeshError);
        CHECK_THROWS_AS(boundary_functional(fixtures::half_circle(8), 1.5), std::invalid_argument);
    }
}

TEST_CASE("Riesz representative")
{
    const Mesh m = fixtures::ngon(12, 0.2);
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd Lm = oracle::random_field(12, 2, rng);
    std::vector<Vec3> L;
    for (int j = 0; j < 12; ++j) L.push_back(oracle::row3(Lm, j));
    const auto nu = riesz_representative(m, L);
    VertexField nf(12, 2);
    for (int j = 0; j < 12; ++j) nf.row(j) << nu[static_cast<std::size_t>(j)].x(), nu[static_cast<std::size_t>(j)].y();
    for (int trial = 0; trial < 10; ++trial) {
        const VertexField eta = oracle::random_field(12, 2, rng);
        CHECK(lumped_inner_product(m, nf, eta) == Approx((Lm.array() * eta.array()).sum()).epsilon(1e-13));
    }
    const auto zero = riesz_representative(m, std::vector<Vec3>(12, Vec3::Zero()));
    for (const auto& z : zero) CHECK(z.norm() == 0.0);
}
