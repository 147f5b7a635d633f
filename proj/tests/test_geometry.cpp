#include "test_meshes.hpp"

#include "geomflow/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace geomflow;
using doctest::Approx;

TEST_CASE("curve generators")
{
    SUBCASE("circle")
    {
        const Mesh m = fixtures::ngon(30);
        CHECK(m.num_vertices() == 30);
        CHECK(m.num_elements() == 30);
        for (const Vec3& p : m.vertices()) CHECK(p.norm() == Approx(1.0).epsilon(1e-15));
        CHECK(m.total_measure() == Approx(60.0 * std::sin(std::numbers::pi / 30.0)).epsilon(1e-14));
    }
    SUBCASE("noisy polygon is seeded")
    {
        const Mesh a = fixtures::ngon(30, 0.1, 9);
        const Mesh b = fixtures::ngon(30, 0.1, 9);
        const Mesh c = fixtures::ngon(30, 0.1, 10);
        CHECK(a.vertices() == b.vertices());
        CHECK_FALSE(a.vertices() == c.vertices());
        for (const Vec3& p : a.vertices()) CHECK(std::abs(p.norm() - 1.0) <= 0.1 + 1e-15);
    }
    SUBCASE("half circle endpoints lie exactly on the substrate")
    {
        const Mesh m = fixtures::half_circle(16);
        CHECK(m.num_vertices() == 17);
        CHECK(m.boundary_kind() == BoundaryKind::open_substrate);
        CHECK(m.vertex(0) == Vec3(-1, 0, 0));
        CHECK(m.vertex(16) == Vec3(1, 0, 0));
    }
    SUBCASE("graded profiles keep the node count and endpoints")
    {
        for (Profile p : {Profile::graded_left, Profile::graded_ends}) {
            ShapeSpec s;
            s.kind = ShapeKind::half_circle;
            s.nodes = 20;
            s.profile = p;
            const Mesh m = generate(s);
            CHECK(m.num_elements() == 20);
            const QualityReport q = quality_metrics(m);
            CHECK(q.edge_ratio > 1.5);
        }
    }
    SUBCASE("grim reaper")
    {
        ShapeSpec s;
        s.kind = ShapeKind::grim_reaper;
        s.nodes = 30;
        const Mesh m = generate(s);
        CHECK(m.num_vertices() == 31);
        CHECK(m.boundary_kind() == BoundaryKind::open_vertical_lines);
        CHECK(m.walls().left == Approx(-std::numbers::pi / 4));
        CHECK(m.walls().right == Approx(std::numbers::pi / 4));
        const ExactReference ref{ReferenceKind::grim_reaper_translate, 1.0};
        CHECK(max_nodal_distance(m, ref, 0.0) < 1e-15);
    }
}

TEST_CASE("surface generators")
{
    SUBCASE("spheres")
    {
        for (int level : {0, 1, 2, 3}) {
            const Mesh m = fixtures::sphere(level);
            CHECK(m.num_elements() == static_cast<std::size_t>(8 * (1 << (2 * level))));
            CHECK(m.num_vertices() == static_cast<std::size_t>(4 * (1 << (2 * level)) + 2));
            for (const Vec3& p : m.vertices()) CHECK(p.norm() == Approx(1.0).epsilon(1e-15));
        }
        CHECK(fixtures::sphere(3).total_measure() == Approx(4.0 * std::numbers::pi).epsilon(0.02));
    }
    SUBCASE("half sphere")
    {
        const Mesh m = fixtures::half_sphere(2);
        CHECK(m.num_elements() == 64);
        CHECK(m.boundary().size() == 1);
        for (const Vec3& p : m.vertices()) CHECK(p.z() >= 0.0);
        CHECK(substrate_area(m) > 0.0);
    }
    SUBCASE("torus has the requested triangle count and fair quality")
    {
        for (int n : {1500, 5592}) {
            const Mesh m = fixtures::torus(n);
            CHECK(m.num_elements() == static_cast<std::size_t>(n));
            CHECK(m.num_vertices() == static_cast<std::size_t>(n / 2));
            const QualityReport q = quality_metrics(m);
            CHECK(q.edge_ratio < 5.0);
            CHECK(q.min_angle > 8.0 * std::numbers::pi / 180.0);
        }
    }
    SUBCASE("dumbbell narrows at the middle")
    {
        ShapeSpec s;
        s.kind = ShapeKind::dumbbell;
        s.level = 3;
        const Mesh m = generate(s);
        double neck = 1e9, bulb = 0.0;
        for (const Vec3& p : m.vertices()) {
            const double r = std::hypot(p.x(), p.y());
            if (std::abs(p.z()) < 1e-12) neck = std::min(neck, r);
            bulb = std::max(bulb, r);
        }
        CHECK(neck == Approx(0.4).epsilon(1e-12));
        CHECK(bulb > neck);
    }
    SUBCASE("boxes")
    {
        const Mesh closed = fixtures::box(Vec3(1, 6, 1), 0.2, false);
        CHECK(closed.is_closed());
        CHECK(closed.total_measure() == Approx(26.0).epsilon(1e-13));
        CHECK(quality_metrics(closed).edge_ratio == Approx(std::sqrt(2.0)).epsilon(1e-12));

        const Mesh open = fixtures::box(Vec3(1, 6, 1), 0.2, true);
        CHECK(open.boundary_kind() == BoundaryKind::open_substrate);
        CHECK(open.total_measure() == Approx(20.0).epsilon(1e-13));
        CHECK(substrate_area(open) == Approx(6.0).epsilon(1e-13));
        for (const Vec3& p : open.vertices()) CHECK(p.z() >= 0.0);
    }
}

TEST_CASE("invalid shapes")
{
    ShapeSpec s;
    s.radius = -1.0;
    CHECK_THROWS_AS(generate(s), InvalidShape);
    s = ShapeSpec{};
    s.kind = ShapeKind::torus_perturbed;
    s.triangles = 1501;
    CHECK_THROWS_AS(generate(s), InvalidShape);
    s = ShapeSpec{};
    s.kind = ShapeKind::box;
    s.dims = Vec3(1, -6, 1);
    CHECK_THROWS_AS(generate(s), InvalidShape);
    CHECK_THROWS_AS(shape_kind_from_string("cube"), InvalidShape);
    CHECK(shape_kind_from_string("torus_perturbed") == ShapeKind::torus_perturbed);
}

TEST_CASE("exact references")
{
    const ExactReference circle{ReferenceKind::shrinking_half_circle, 1.0};
    CHECK(circle.extinction_time() == Approx(0.5));
    CHECK(circle.radius_at(0.2) == Approx(std::sqrt(0.6)));
    CHECK_THROWS_AS(circle.radius_at(0.5), PastExtinction);

    const ExactReference hs{ReferenceKind::shrinking_half_sphere, 1.0};
    CHECK(hs.extinction_time() == Approx(0.25));
    CHECK(hs.radius_at(0.1) == Approx(std::sqrt(0.6)));

    const ExactReference gr{ReferenceKind::grim_reaper_translate, 1.0};
    CHECK(std::isinf(gr.extinction_time()));

    // A polygon inscribed in the circle: nodal distances vanish, the lumped norm is their weighted sum.
    const Mesh m = fixtures::ngon(12);
    const ExactReference unit{ReferenceKind::shrinking_circle, 1.0};
    CHECK(exact_distance(m, unit, 0.0) < 1e-15);
    const double r = unit.radius_at(0.1);
    CHECK(max_nodal_distance(m, unit, 0.1) == Approx(1.0 - r));
    CHECK(exact_distance(m, unit, 0.1) == Approx((1.0 - r) * std::sqrt(m.total_measure())));
}
